//! Super-resolve a clip frame by frame, carrying the recurrent state, and
//! write the outputs, a temporal profile and hidden-state channels.
//!
//! cargo run --release --example infer_sequence -- [checkpoint] [out_dir]
//!
//! Without a checkpoint a freshly initialised model is used, which only
//! shows the plumbing.

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rsdn::data::{save_frames, synth_sequence, write_png, DegradeConfig, SynthKind, SynthSpec};
use rsdn::metrics::{dump_hidden_channels, temporal_profile};
use rsdn::model::{ModelConfig, Rsdn};
use rsdn::train::Checkpoint;

fn main() -> rsdn::Result<()> {
    let mut args = std::env::args().skip(1);
    let model = match args.next() {
        Some(path) => Checkpoint::<f32>::load(path.as_ref())?.into_model()?,
        None => Rsdn::new(ModelConfig::default(), &mut ChaCha8Rng::seed_from_u64(0))?,
    };
    let out = args.next().map_or_else(|| std::env::temp_dir().join("rsdn_infer"), PathBuf::from);

    let spec = SynthSpec {
        kind: SynthKind::MovingBars,
        frames: 8,
        height: 64,
        width: 64,
        velocity: [1.0, 0.0],
        seed: 4,
    };
    let clip = synth_sequence(&spec, &DegradeConfig::default())?;
    let mut sr = Vec::new();
    let mut last_state = None;
    for (t, o) in model.forward_sequence(clip.lr())?.into_iter().enumerate() {
        let gate = o.hsa_map.as_ref().map_or(f32::NAN, |m| m.data().iter().sum::<f32>() / m.numel() as f32);
        println!("frame {t}: mean HSA gate {gate:.3}");
        sr.push(o.image.map(|v| v.clamp(0.0, 1.0)));
        last_state = Some(o.state);
    }
    save_frames(&sr, &out.join("sr"))?;
    write_png(&temporal_profile(&sr, 32)?, &out.join("profile_sr.png"))?;
    write_png(&temporal_profile(clip.hr(), 32)?, &out.join("profile_hr.png"))?;
    if let Some(state) = last_state {
        dump_hidden_channels(&state, &out.join("hidden"), 4)?;
    }
    println!("wrote {}", out.display());
    Ok(())
}
