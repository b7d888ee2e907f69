//! Train a small model on synthetic moving bars and save the run
//! (`metrics.log`, `ckpt_final`) to a directory.
//!
//! cargo run --release --example train_toy -- /tmp/rsdn_run 300

use std::path::PathBuf;

use rsdn::data::{split, synth_dataset, DegradeConfig, SynthKind};
use rsdn::train::{Checkpoint, TrainConfig, Trainer, CKPT_FINAL};

fn main() -> rsdn::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().map_or_else(|| std::env::temp_dir().join("rsdn_run"), PathBuf::from);
    let iters: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(300);

    let clips = synth_dataset(SynthKind::MovingBars, 40, 4, 64, 64, 1.0, 1, &DegradeConfig::default())?;
    let (train, val) = split(clips, 0.1, 0)?;
    let cfg = TrainConfig {
        max_iters: Some(iters),
        val_every: 100,
        ..TrainConfig::default()
    };
    println!("{} on {} clips for {iters} iterations", cfg.model.label(), train.len());
    let mut trainer = Trainer::new(cfg)?;
    let summary = trainer.run(&train, &val, Some(&out))?;
    for r in summary.history.iter().filter(|r| r.psnr_val.is_some()) {
        println!("{}", r.log_line());
    }
    println!(
        "loss {:.4} -> {:.4}, bicubic {:.2} dB",
        summary.mean_loss(0, 10).unwrap_or(f64::NAN),
        summary.mean_loss(summary.history.len().saturating_sub(10), 10).unwrap_or(f64::NAN),
        summary.bicubic_val_psnr.unwrap_or(f64::NAN)
    );

    let ckpt = Checkpoint::<f32>::load(&out.join(CKPT_FINAL))?;
    println!(
        "checkpoint at iteration {} holds {} tensors",
        ckpt.meta.get("iteration").unwrap_or("?"),
        ckpt.params.len()
    );
    Ok(())
}
