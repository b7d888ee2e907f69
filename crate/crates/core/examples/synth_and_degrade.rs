//! Generate a synthetic clip, derive its LR side with blur and decimation,
//! write it as PNG frames and read it back.
//!
//! cargo run --release --example synth_and_degrade -- /tmp/rsdn_clip

use std::path::PathBuf;

use rsdn::data::{degrade, load_sequence, save_sequence, synth_frames, DegradeConfig, SequenceSample, SynthKind, SynthSpec};

fn main() -> rsdn::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("rsdn_clip"), PathBuf::from);
    let spec = SynthSpec {
        kind: SynthKind::DriftingChecker,
        frames: 6,
        height: 64,
        width: 96,
        velocity: [0.75, -0.5],
        seed: 11,
    };
    let hr = synth_frames(&spec)?;
    let deg = DegradeConfig::default();
    let lr = degrade(&hr, &deg)?;
    println!(
        "{} frames, HR {} -> LR {} (sigma {}, x{}, {})",
        hr.len(),
        hr[0].shape(),
        lr[0].shape(),
        deg.sigma,
        deg.scale,
        deg.decimation
    );

    let clip = SequenceSample::new("checker", hr, lr, deg.scale)?;
    save_sequence(&clip, &out)?;
    let back = load_sequence(&out, &deg)?;
    let worst = clip
        .hr()
        .iter()
        .zip(back.hr())
        .flat_map(|(a, b)| a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()))
        .fold(0.0f32, f32::max);
    println!("wrote {}; 8-bit round trip max error {worst:.4}", out.display());
    Ok(())
}
