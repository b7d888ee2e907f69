//! Compare configurations under an equal training budget: the architecture
//! grid (`table1`) or the loss-weight grid (`table2`).
//!
//! cargo run --release --example ablate -- table2 100

use rsdn::data::{split, synth_dataset, DegradeConfig, SynthKind};
use rsdn::model::ModelConfig;
use rsdn::train::{run_ablation, AblationGrid, TrainConfig};

fn main() -> rsdn::Result<()> {
    let mut args = std::env::args().skip(1);
    let grid: AblationGrid = args.next().as_deref().unwrap_or("table2").parse()?;
    let iters: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(100);

    let clips = synth_dataset(SynthKind::MovingBars, 24, 3, 32, 32, 1.0, 8, &DegradeConfig::default())?;
    let (train, val) = split(clips, 0.25, 0)?;
    let base = TrainConfig {
        model: ModelConfig {
            blocks: 1,
            channels: 8,
            ..ModelConfig::default()
        },
        patch: 32,
        clip_len: 3,
        max_iters: Some(iters),
        ..TrainConfig::default()
    };
    let runs = grid.runs(&base);
    let report = run_ablation(grid, &runs, &train, &val, |r| {
        println!("{:<28} {:.3} dB in {:.1}s", r.label, r.val.psnr_y, r.seconds);
    })?;
    print!("\n{}", report.table());
    Ok(())
}
