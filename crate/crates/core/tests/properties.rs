use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rsdn::config::KeyValues;
use rsdn::data::{
    degrade_frame, load_frames, save_frames, split, synth_frames, Decimation, DegradeConfig, SynthKind, SynthSpec,
};
use rsdn::metrics::{psnr, ssim};
use rsdn::model::{decompose, ModelConfig, Rsdn};
use rsdn::ops::{add, flip_h, gaussian_blur, rot90};
use rsdn::train::{augment_frame, Checkpoint, OptimState};
use rsdn::Tensor4;

fn frame(seed: u64, h: usize, w: usize) -> Tensor4<f32> {
    Tensor4::uniform([1, 3, h, w], 0.0, 1.0, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn inverse(code: u8) -> u8 {
    // a flip followed by k quarter turns is its own inverse; pure rotations
    // undo with the opposite turn
    if code & 1 == 1 {
        code
    } else {
        ((4 - (code >> 1)) % 4) << 1
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn psnr_falls_as_noise_grows(seed in any::<u64>(), a in 0.01f32..0.2, extra in 0.01f32..0.2) {
        let clean = frame(seed, 16, 16);
        let noise = Tensor4::uniform([1, 3, 16, 16], -1.0, 1.0, &mut ChaCha8Rng::seed_from_u64(seed ^ 1));
        let noisy = |s: f32| add(&clean, &noise.map(|v| v * s)).unwrap();
        let lo = psnr(&noisy(a), &clean, 1.0).unwrap();
        let hi = psnr(&noisy(a + extra), &clean, 1.0).unwrap();
        prop_assert!(hi < lo, "{hi} !< {lo}");
    }

    #[test]
    fn ssim_is_symmetric_and_bounded(s1 in any::<u64>(), s2 in any::<u64>(), h in 11usize..20, w in 11usize..20) {
        let (a, b) = (frame(s1, h, w), frame(s2, h, w));
        let ab = ssim(&a, &b).unwrap();
        let ba = ssim(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!(ab <= 1.0 + 1e-12);
        prop_assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn augmentation_is_invertible_and_metric_preserving(seed in any::<u64>(), code in 0u8..8) {
        let (a, b) = (frame(seed, 12, 12), frame(seed ^ 7, 12, 12));
        let (ta, tb) = (augment_frame(&a, code), augment_frame(&b, code));
        prop_assert_eq!(augment_frame(&ta, inverse(code)), a.clone());
        let before = psnr(&a, &b, 1.0).unwrap();
        let after = psnr(&ta, &tb, 1.0).unwrap();
        prop_assert!((before - after).abs() < 1e-9);
    }

    #[test]
    fn four_quarter_turns_are_identity(seed in any::<u64>(), h in 1usize..9, w in 1usize..9) {
        let a = frame(seed, h, w);
        prop_assert_eq!(rot90(&a, 4), a);
    }

    #[test]
    fn blur_and_symmetric_lattice_commute_with_flip(seed in any::<u64>(), m in 1usize..4, h in 4usize..10) {
        let w = 4 * m + 1;
        let hr = Tensor4::<f64>::uniform([1, 3, h, w], 0.0, 1.0, &mut ChaCha8Rng::seed_from_u64(seed));
        let sample = |x: &Tensor4<f64>| {
            let b = gaussian_blur(x, 1.6).unwrap();
            Tensor4::from_fn([1, 3, h.div_ceil(4), m + 1], |[n, c, i, j]| b.at(n, c, 4 * i, 4 * j))
        };
        prop_assert!(sample(&flip_h(&hr)).max_abs_diff(&flip_h(&sample(&hr))).unwrap() < 1e-12);
    }

    #[test]
    fn bicubic_degradation_commutes_with_flip(seed in any::<u64>(), hb in 2usize..5, wb in 2usize..5) {
        let hr = Tensor4::<f64>::uniform([1, 3, 4 * hb, 4 * wb], 0.0, 1.0, &mut ChaCha8Rng::seed_from_u64(seed));
        let cfg = DegradeConfig { decimation: Decimation::Bicubic, ..DegradeConfig::default() };
        let a = degrade_frame(&flip_h(&hr), &cfg).unwrap();
        let b = flip_h(&degrade_frame(&hr, &cfg).unwrap());
        prop_assert!(a.max_abs_diff(&b).unwrap() < 1e-12);
    }

    #[test]
    fn structure_plus_detail_reconstructs(seed in any::<u64>(), hb in 1usize..4, wb in 1usize..4) {
        let x = Tensor4::<f64>::uniform([1, 3, 4 * hb, 4 * wb], 0.0, 1.0, &mut ChaCha8Rng::seed_from_u64(seed));
        let (s, d) = decompose(&x, 4).unwrap();
        prop_assert!(add(&s, &d).unwrap().max_abs_diff(&x).unwrap() < 1e-12);
    }

    #[test]
    fn split_partitions(n in 0usize..40, frac in 0.0f64..0.9, seed in any::<u64>()) {
        let (train, val) = split((0..n).collect::<Vec<_>>(), frac, seed).unwrap();
        let mut all: Vec<_> = train.iter().chain(&val).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert_eq!(split((0..n).collect::<Vec<_>>(), frac, seed).unwrap(), (train, val));
    }

    #[test]
    fn key_values_round_trip(entries in proptest::collection::btree_map("[a-z_]{1,8}", "[a-z0-9.]{0,8}", 0..8)) {
        let mut kv = KeyValues::new();
        for (k, v) in &entries {
            kv.set(k.as_str(), v);
        }
        prop_assert_eq!(KeyValues::parse(&kv.to_string()).unwrap(), kv);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn load_save_load_is_idempotent(seed in any::<u64>(), frames in 1usize..4) {
        let dir = tempfile::tempdir().unwrap();
        let clip: Vec<_> = (0..frames).map(|t| frame(seed + t as u64, 5, 7)).collect();
        save_frames(&clip, &dir.path().join("a")).unwrap();
        let first = load_frames(&dir.path().join("a")).unwrap();
        save_frames(&first, &dir.path().join("b")).unwrap();
        let second = load_frames(&dir.path().join("b")).unwrap();
        prop_assert_eq!(first, second);
    }

    #[test]
    fn checkpoint_save_load_save_is_byte_identical(seed in any::<u64>(), blocks in 1usize..3, channels in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = ModelConfig { blocks, channels, ..ModelConfig::default() };
        let model = Rsdn::<f32>::new(cfg, &mut rng).unwrap();
        let mut optim = OptimState::new(model.params());
        optim.step = seed % 1000;
        let mut ck = Checkpoint::from_model(&model, Some(&optim));
        ck.meta.set("iteration", seed % 1000);
        let dir = tempfile::tempdir().unwrap();
        let (p1, p2) = (dir.path().join("one"), dir.path().join("two"));
        ck.save(&p1).unwrap();
        Checkpoint::<f32>::load(&p1).unwrap().save(&p2).unwrap();
        prop_assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn synthesis_is_deterministic(seed in any::<u64>(), vx in -2.0f64..2.0, vy in -2.0f64..2.0) {
        for kind in SynthKind::ALL {
            let spec = SynthSpec { kind, frames: 2, height: 12, width: 12, velocity: [vx, vy], seed };
            prop_assert_eq!(synth_frames(&spec).unwrap(), synth_frames(&spec).unwrap());
        }
    }
}
