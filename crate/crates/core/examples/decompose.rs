//! Split a frame into structure (bicubic down-then-up) and detail
//! (the remainder) and show where the energy of each part sits.
//!
//! cargo run --release --example decompose

use rsdn::data::{synth_frames, SynthKind, SynthSpec};
use rsdn::model::decompose;
use rsdn::ops::add;
use rsdn::Tensor4;

fn mean_abs(t: &Tensor4<f32>) -> f32 {
    t.data().iter().map(|v| v.abs()).sum::<f32>() / t.numel() as f32
}

fn main() -> rsdn::Result<()> {
    for kind in SynthKind::ALL {
        let spec = SynthSpec {
            kind,
            frames: 1,
            height: 48,
            width: 48,
            velocity: [0.0, 0.0],
            seed: 3,
        };
        let frame = &synth_frames(&spec)?[0];
        let (s, d) = decompose(frame, 4)?;
        let back = add(&s, &d)?;
        let err = back.data().iter().zip(frame.data()).map(|(a, b)| (a - b).abs()).fold(0.0f32, f32::max);
        println!(
            "{kind:<17} mean|S| {:.4}  mean|D| {:.4}  max|S+D-I| {err:.1e}",
            mean_abs(&s),
            mean_abs(&d)
        );
    }
    Ok(())
}
