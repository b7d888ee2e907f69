//! PSNR and SSIM on the luma channel for increasingly noisy copies of a
//! frame.
//!
//! cargo run --release --example metrics

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rsdn::data::{synth_frames, SynthKind, SynthSpec};
use rsdn::metrics::{psnr, rgb_to_y, ssim};
use rsdn::ops::add;
use rsdn::Tensor4;

fn main() -> rsdn::Result<()> {
    let spec = SynthSpec {
        kind: SynthKind::NoisePan,
        frames: 1,
        height: 64,
        width: 64,
        velocity: [0.0, 0.0],
        seed: 9,
    };
    let clean = synth_frames(&spec)?.remove(0);
    let y = rgb_to_y(&clean)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    println!("{:>6} {:>9} {:>8}", "sigma", "PSNR-Y", "SSIM-Y");
    for sigma in [0.0f32, 0.01, 0.02, 0.05, 0.1, 0.2] {
        // uniform noise with standard deviation sigma
        let half = f64::from(sigma) * 3f64.sqrt();
        let noisy = if half > 0.0 {
            let noise = Tensor4::uniform(clean.shape(), -half, half, &mut rng);
            add(&clean, &noise)?.map(|v| v.clamp(0.0, 1.0))
        } else {
            clean.clone()
        };
        let ny = rgb_to_y(&noisy)?;
        println!("{sigma:>6.2} {:>9.3} {:>8.4}", psnr(&ny, &y, 1.0)?, ssim(&ny, &y)?);
    }
    Ok(())
}
