//! Score bicubic upsampling and an untrained model on a synthetic test set,
//! then write the per-frame CSV report.
//!
//! cargo run --release --example evaluate -- [checkpoint]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rsdn::data::{synth_dataset, DegradeConfig, SynthKind};
use rsdn::metrics::{evaluate, evaluate_bicubic};
use rsdn::model::{ModelConfig, Rsdn};
use rsdn::train::Checkpoint;

fn main() -> rsdn::Result<()> {
    let model = match std::env::args().nth(1) {
        Some(path) => Checkpoint::<f32>::load(path.as_ref())?.into_model()?,
        None => Rsdn::new(ModelConfig::default(), &mut ChaCha8Rng::seed_from_u64(0))?,
    };
    let deg = DegradeConfig::default();
    let mut test = Vec::new();
    for (i, kind) in SynthKind::ALL.into_iter().enumerate() {
        test.extend(synth_dataset(kind, 2, 5, 64, 64, 1.5, i as u64, &deg)?);
    }

    let bicubic = evaluate_bicubic(&test, 8)?;
    print!("{}", bicubic.table());
    let report = evaluate(&model, &test, 8)?;
    print!("\n{}", report.table());
    let path = std::env::temp_dir().join("rsdn_report.csv");
    report.write_csv(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}
