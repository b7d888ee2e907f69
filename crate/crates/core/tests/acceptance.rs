//! Acceptance criteria, one line of output each.
//!
//! Runs as a plain binary (`harness = false`) so every line is printed.
//! Pass criterion numbers as arguments to run a subset:
//! `cargo test --test acceptance -- 1 3 9`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rsdn::autograd::{grad_check, GradCheck, Tape, Var};
use rsdn::data::{split, synth_dataset, DegradeConfig, SequenceSample, SynthKind};
use rsdn::metrics::{psnr, rgb_to_y, ssim};
use rsdn::model::{decompose, param_count, BlockVariant, InputMode, ModelConfig, Rsdn};
use rsdn::ops::{self, ConvGeom, ConvParams, PaddingMode, ResizePlan, Scale};
use rsdn::train::{total_loss_on_tape, LossWeights, Targets, TrainConfig, Trainer};
use rsdn::{Result, Tensor4};

enum Verdict {
    Pass(String),
    Fail(String),
    /// Directional check that is reported but does not fail the suite.
    Flagged(String),
}

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

// ---------------------------------------------------------------- 1

fn weighted_sum(tape: &mut Tape<f64>, x: Var, seed: u64) -> Result<Var> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = tape.constant(Tensor4::uniform(tape.shape(x), -1.0, 1.0, &mut rng));
    let p = tape.mul(x, w)?;
    tape.sum(p)
}

fn primitive_checks() -> Result<Vec<(&'static str, GradCheck)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut u = |s: [usize; 4], lo: f64, hi: f64| Tensor4::<f64>::uniform(s, lo, hi, &mut rng);
    let (a, b) = (u([2, 3, 5, 4], -1.0, 1.0), u([2, 3, 5, 4], -1.0, 1.0));
    let img = u([1, 3, 8, 8], -1.0, 1.0);
    let weight = u([4, 3, 3, 3], -0.5, 0.5);
    let bias = u([1, 4, 1, 1], -0.5, 0.5);
    let hidden = u([1, 4, 6, 5], -1.0, 1.0);
    let filters = u([1, 9, 6, 5], -1.0, 1.0);
    let wide = u([1, 48, 3, 2], -1.0, 1.0);
    let down = std::sync::Arc::new(ResizePlan::new(8, 8, Scale::down(4), true)?);
    let up = std::sync::Arc::new(ResizePlan::new(2, 2, Scale::up(4), false)?);
    let odd = std::sync::Arc::new(ResizePlan::to_size(5, 4, 7, 9, true)?);
    let c = |name, f: &dyn Fn(&mut Tape<f64>, &[Var]) -> Result<Var>, p: &[Tensor4<f64>]| -> Result<(&'static str, GradCheck)> {
        Ok((name, grad_check(f, p, 1e-6, 64)?))
    };
    let conv_with = |geom: ConvGeom| {
        move |t: &mut Tape<f64>, v: &[Var]| {
            let y = t.conv2d(v[0], v[1], Some(v[2]), geom)?;
            weighted_sum(t, y, 9)
        }
    };
    Ok(vec![
        c("add", &|t, v| { let y = t.add(v[0], v[1])?; weighted_sum(t, y, 2) }, &[a.clone(), b.clone()])?,
        c("sub", &|t, v| { let y = t.sub(v[0], v[1])?; weighted_sum(t, y, 3) }, &[a.clone(), b.clone()])?,
        c("mul", &|t, v| { let y = t.mul(v[0], v[1])?; weighted_sum(t, y, 4) }, &[a.clone(), b.clone()])?,
        c("scale", &|t, v| { let y = t.scale(v[0], -1.7)?; weighted_sum(t, y, 5) }, &[a.clone()])?,
        c("relu", &|t, v| { let y = t.relu(v[0])?; weighted_sum(t, y, 6) }, &[a.clone()])?,
        c("sigmoid", &|t, v| { let y = t.sigmoid(v[0])?; weighted_sum(t, y, 7) }, &[a.clone()])?,
        c("conv2d", &conv_with(ConvGeom::same(3)), &[img.clone(), weight.clone(), bias.clone()])?,
        c(
            "conv2d reflect stride 2",
            &conv_with(ConvGeom { stride: 2, padding: 1, mode: PaddingMode::Reflect }),
            &[img.clone(), weight.clone(), bias.clone()],
        )?,
        c("spatially_variant_filter", &|t, v| { let y = t.spatially_variant_filter(v[0], v[1], 3)?; weighted_sum(t, y, 10) }, &[hidden, filters])?,
        c("resize down", &|t, v| { let y = t.resize(v[0], down.clone())?; weighted_sum(t, y, 11) }, &[img.clone()])?,
        c("resize up", &|t, v| { let y = t.resize(v[0], up.clone())?; weighted_sum(t, y, 12) }, &[u([1, 3, 2, 2], -1.0, 1.0)])?,
        c("resize arbitrary", &|t, v| { let y = t.resize(v[0], odd.clone())?; weighted_sum(t, y, 13) }, &[u([1, 2, 5, 4], -1.0, 1.0)])?,
        c("pixel_shuffle", &|t, v| { let y = t.pixel_shuffle(v[0], 4)?; weighted_sum(t, y, 14) }, &[wide])?,
        c("pixel_unshuffle", &|t, v| { let y = t.pixel_unshuffle(v[0], 4)?; weighted_sum(t, y, 15) }, &[img.clone()])?,
        c("concat", &|t, v| { let y = t.concat(&[v[0], v[1], v[0]])?; weighted_sum(t, y, 16) }, &[a.clone(), b.clone()])?,
        c("sum", &|t, v| { let y = t.mul(v[0], v[0])?; t.sum(y) }, &[a.clone()])?,
        c("charbonnier", &|t, v| t.charbonnier(v[0], v[1], 1e-3), &[a, b])?,
    ])
}

fn full_cell_check() -> Result<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cfg = ModelConfig {
        blocks: 2,
        channels: 8,
        ..ModelConfig::default()
    };
    let model = Rsdn::<f64>::new(cfg, &mut rng)?;
    let frames: Vec<Tensor4<f64>> = (0..2).map(|_| Tensor4::uniform([1, 3, 8, 8], 0.0, 1.0, &mut rng)).collect();
    let targets = (0..2)
        .map(|_| Targets::from_hr(&Tensor4::uniform([1, 3, 32, 32], 0.0, 1.0, &mut rng), 4))
        .collect::<Result<Vec<_>>>()?;
    let probes: Vec<Tensor4<f64>> = [[1, 3, 32, 32], [1, 3, 32, 32], [1, 8, 8, 8]]
        .iter()
        .map(|&s| Tensor4::uniform(s, -1.0, 1.0, &mut rng))
        .collect();
    // a random linear functional of every output of both steps, plus the
    // training loss
    let f = |tape: &mut Tape<f64>, vars: &[Var]| -> Result<Var> {
        let bound = model.bind_vars(tape, vars)?;
        let steps = bound.unroll(tape, &frames)?;
        let (mut acc, _) = total_loss_on_tape(tape, &steps, &targets, &LossWeights::default())?;
        for s in &steps {
            for (out, probe) in [(s.structure, &probes[0]), (s.detail, &probes[1]), (s.hidden, &probes[2])] {
                let p = tape.constant(probe.clone());
                let prod = tape.mul(out, p)?;
                let total = tape.sum(prod)?;
                acc = tape.add(acc, total)?;
            }
        }
        Ok(acc)
    };
    // step large enough that roundoff stays well below the small HSA gradients
    grad_check(f, model.params().tensors(), 2e-5, 24)
}

fn criterion_1() -> Result<Verdict> {
    let start = Instant::now();
    let mut worst = ("", 0.0f64);
    let mut nan = false;
    let (mut checked, mut kinks) = (0, 0);
    let mut record = |name: &'static str, g: &GradCheck| {
        nan |= g.has_nan;
        checked += g.checked;
        kinks += g.kinks;
        if g.max_rel_error > worst.1 {
            worst = (name, g.max_rel_error);
        }
    };
    for (name, g) in primitive_checks()? {
        record(name, &g);
    }
    let cell = full_cell_check()?;
    record("full cell", &cell);
    let elapsed = start.elapsed();
    let ok = !nan && worst.1 < 1e-5 && kinks * 20 < checked && elapsed < Duration::from_secs(120);
    Ok(verdict(
        ok,
        format!(
            "{checked} coordinates ({kinks} at ReLU kinks skipped), worst rel err {:.2e} ({}), full cell {:.2e}, {:.1}s",
            worst.1,
            worst.0,
            cell.max_rel_error,
            elapsed.as_secs_f64()
        ),
    ))
}

// ---------------------------------------------------------------- 2

fn criterion_2() -> Result<Verdict> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut conv_err, mut svf_err) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let k = [1, 3, 5][rng.gen_range(0..3)];
        let (n, cin, cout) = (rng.gen_range(1..3), rng.gen_range(1..6), rng.gen_range(1..6));
        let (h, w) = (rng.gen_range(k..k + 10), rng.gen_range(k..k + 10));
        let geom = ConvGeom {
            stride: rng.gen_range(1..3),
            padding: rng.gen_range(0..=k / 2),
            mode: if rng.gen_bool(0.5) { PaddingMode::Zeros } else { PaddingMode::Reflect },
        };
        let x = Tensor4::<f32>::uniform([n, cin, h, w], -1.0, 1.0, &mut rng);
        let params = ConvParams {
            weight: Tensor4::uniform([cout, cin, k, k], -1.0, 1.0, &mut rng),
            bias: (0..cout).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            geom,
        };
        let fast = ops::conv2d(&x, &params)?;
        let slow = ops::conv2d_direct(&x, &params)?;
        conv_err = conv_err.max(fast.max_abs_diff(&slow)?);
    }
    for _ in 0..50 {
        let k = [1, 3, 5][rng.gen_range(0..3)];
        let (n, c, h, w) = (rng.gen_range(1..3), rng.gen_range(1..9), rng.gen_range(1..12), rng.gen_range(1..12));
        let hidden = Tensor4::<f32>::uniform([n, c, h, w], -1.0, 1.0, &mut rng);
        let filters = Tensor4::<f32>::uniform([n, k * k, h, w], -1.0, 1.0, &mut rng);
        let fast = ops::spatially_variant_filter(&hidden, &filters, k)?;
        let slow = ops::spatially_variant_filter_direct(&hidden, &filters, k)?;
        svf_err = svf_err.max(fast.max_abs_diff(&slow)?);
    }
    let elapsed = start.elapsed();
    Ok(verdict(
        conv_err < 1e-5 && svf_err < 1e-5 && elapsed < Duration::from_secs(60),
        format!("conv2d max diff {conv_err:.2e}, svf max diff {svf_err:.2e} over 50 shapes each, {:.1}s", elapsed.as_secs_f64()),
    ))
}

// ---------------------------------------------------------------- 3

fn criterion_3() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mismatched = 0usize;
    for i in 0..100 {
        let (h, w) = (4 * rng.gen_range(2..12), 4 * rng.gen_range(2..12));
        // uniform f32 samples on the 2^-24 grid
        let frame = Tensor4::<f32>::from_fn([1, 3, h, w], |_| rng.gen());
        let (s, d) = decompose(&frame, 4)?;
        if ops::add(&s, &d)? != frame {
            mismatched += 1;
            eprintln!("  frame {i} ({h}x{w}) not reproduced");
        }
    }
    let mut constant_ok = true;
    for v in [0.0f32, 0.25, 0.42, 1.0] {
        let frame = Tensor4::<f32>::full([1, 3, 16, 24], v);
        let (s, d) = decompose(&frame, 4)?;
        constant_ok &= d.data().iter().all(|&x| x == 0.0) && s == frame;
    }
    Ok(verdict(
        mismatched == 0 && constant_ok,
        format!("{} of 100 random frames bit-exact, constant frames D = 0: {constant_ok}", 100 - mismatched),
    ))
}

// ---------------------------------------------------------------- 4

fn criterion_4() -> Result<Verdict> {
    let mut ok = true;
    let mut parts = Vec::new();
    for (blocks, paper) in [(5, 3.83e6), (7, 5.01e6), (9, 6.19e6)] {
        let n = param_count(&ModelConfig::rsdn(blocks)) as f64;
        let rel = (n - paper).abs() / paper;
        ok &= rel < 0.10;
        parts.push(format!("{blocks}-128: {:.3}M ({:+.1}%)", n / 1e6, 100.0 * (n - paper) / paper));
    }
    Ok(verdict(ok, parts.join(", ")))
}

// ---------------------------------------------------------------- 5, 6

struct ToyData {
    train: Vec<SequenceSample>,
    val: Vec<SequenceSample>,
}

fn toy_data() -> Result<ToyData> {
    let clips = synth_dataset(SynthKind::MovingBars, 200, 4, 64, 64, 1.0, 2024, &DegradeConfig::default())?;
    let (train, val) = split(clips, 0.1, 7)?;
    Ok(ToyData { train, val })
}

fn toy_config(model: ModelConfig, seed: u64, iters: usize) -> TrainConfig {
    TrainConfig {
        model,
        seed,
        max_iters: Some(iters),
        val_every: 0,
        checkpoint_every: 0,
        ..TrainConfig::default()
    }
}

fn criterion_5(data: &ToyData) -> Result<Verdict> {
    let start = Instant::now();
    let iters = 2000;
    let mut trainer = Trainer::new(toy_config(ModelConfig::default(), 0, iters))?;
    let summary = trainer.run(&data.train, &data.val, None)?;
    let first = summary.mean_loss(0, 10).unwrap_or(f64::NAN);
    let last = summary.mean_loss(summary.history.len().saturating_sub(50), 50).unwrap_or(f64::NAN);
    let psnr = summary.final_val_psnr.unwrap_or(f64::NAN);
    let bicubic = summary.bicubic_val_psnr.unwrap_or(f64::NAN);
    let reduction = 1.0 - last / first;
    Ok(verdict(
        reduction >= 0.5 && psnr >= bicubic + 0.5,
        format!(
            "{iters} iters: loss {first:.4} -> {last:.4} ({:.0}% lower), val Y-PSNR {psnr:.2} dB vs bicubic {bicubic:.2} dB ({:+.2}), {:.0}s",
            100.0 * reduction,
            psnr - bicubic,
            start.elapsed().as_secs_f64()
        ),
    ))
}

fn criterion_6(data: &ToyData) -> Result<Verdict> {
    let start = Instant::now();
    let iters: usize = std::env::var("RSDN_ABLATION_ITERS").ok().and_then(|s| s.parse().ok()).unwrap_or(300);
    let base = ModelConfig::default();
    let variants = [
        ("sd", base.clone()),
        ("two_stream", ModelConfig { variant: BlockVariant::TwoStream, ..base.clone() }),
        (
            "one_stream",
            ModelConfig {
                variant: BlockVariant::OneStream,
                input_mode: InputMode::Image,
                channels: 2 * base.channels,
                ..base.clone()
            },
        ),
    ];
    let mut means = Vec::new();
    for (name, cfg) in &variants {
        let mut total = 0.0;
        for seed in 0..3 {
            let mut trainer = Trainer::new(toy_config(cfg.clone(), seed, iters))?;
            total += trainer.run(&data.train, &data.val, None)?.final_val_psnr.unwrap_or(f64::NAN);
        }
        means.push((*name, total / 3.0, param_count(cfg)));
    }
    let (sd, two, one) = (means[0].1, means[1].1, means[2].1);
    let detail = format!(
        "{iters} iters x 3 seeds: {}, {:.0}s",
        means
            .iter()
            .map(|(n, p, c)| format!("{n} {p:.2} dB ({c} params)"))
            .collect::<Vec<_>>()
            .join(", "),
        start.elapsed().as_secs_f64()
    );
    Ok(if sd >= two && sd >= one {
        Verdict::Pass(detail)
    } else {
        Verdict::Flagged(format!("ordering not reproduced: {detail}"))
    })
}

// ---------------------------------------------------------------- 7, 8

fn small_data() -> Result<Vec<SequenceSample>> {
    synth_dataset(SynthKind::MovingBars, 8, 4, 32, 32, 1.0, 5, &DegradeConfig::default())
}

fn small_config(model: ModelConfig, weights: LossWeights, iters: usize) -> TrainConfig {
    TrainConfig {
        model,
        weights,
        patch: 32,
        clip_len: 3,
        max_iters: Some(iters),
        val_every: 0,
        checkpoint_every: 0,
        ..TrainConfig::default()
    }
}

fn criterion_7() -> Result<Verdict> {
    let data = small_data()?;
    let mut labels = Vec::new();
    let mut ok = true;
    for cfg in ModelConfig::ablation_grid(2, 8) {
        let mut trainer = Trainer::new(small_config(cfg.clone(), LossWeights::default(), 50))?;
        let s = trainer.run(&data, &[], None)?;
        let finite = s.history.len() == 50 && s.history.iter().all(|r| r.loss.total.is_finite());
        ok &= finite;
        labels.push(format!("{}:{:.3}", cfg.label(), s.history.last().map_or(f64::NAN, |r| r.loss.total)));
    }
    Ok(verdict(ok, format!("8 configs x 50 iters, final losses {}", labels.join(" "))))
}

fn criterion_8() -> Result<Verdict> {
    let data = small_data()?;
    let model_cfg = ModelConfig {
        channels: 8,
        ..ModelConfig::default()
    };
    let mut decomps = Vec::new();
    for w in LossWeights::ablation_grid() {
        let mut trainer = Trainer::new(small_config(model_cfg.clone(), w, 20))?;
        let s = trainer.run(&data, &[], None)?;
        let last = s.history.last().expect("20 iterations").loss;
        if !last.total.is_finite() {
            return Ok(Verdict::Fail(format!("non-finite loss for {w:?}")));
        }
        decomps.push(((w.alpha, w.beta, w.gamma), last));
    }
    let distinct = (0..4).all(|i| (i + 1..4).all(|j| decomps[i].1 != decomps[j].1));

    // zeroed-term check: with gamma = 0 the image term contributes nothing
    let mut trainer = Trainer::new(small_config(model_cfg, LossWeights::default(), 1))?;
    let batch = trainer.sample_batch(&data)?;
    let grads = |w: LossWeights| -> Result<Vec<Tensor4<f32>>> {
        let mut cfg = trainer.config().clone();
        cfg.weights = w;
        let t = Trainer::new(cfg)?;
        // same seed, same initial parameters
        assert_eq!(t.model().params(), trainer.model().params());
        Ok(t.loss_and_grads(&batch)?.1)
    };
    let without_image = grads(LossWeights::new(1.0, 1.0, 0.0))?;
    let structure = grads(LossWeights::new(1.0, 0.0, 0.0))?;
    let detail = grads(LossWeights::new(0.0, 1.0, 0.0))?;
    let nothing = grads(LossWeights::new(0.0, 0.0, 0.0))?;
    let with_image = grads(LossWeights::new(1.0, 1.0, 1.0))?;
    let mut sum_err = 0.0f64;
    for i in 0..without_image.len() {
        let summed = ops::add(&structure[i], &detail[i])?;
        sum_err = sum_err.max(summed.max_abs_diff(&without_image[i])?);
    }
    let zero = nothing.iter().all(|g| g.data().iter().all(|&v| v == 0.0));
    let image_differs = with_image.iter().zip(&without_image).any(|(a, b)| a != b);
    let rows = decomps
        .iter()
        .map(|(w, l)| format!("{w:?}: S {:.4} D {:.4} I {:.4}", l.structure, l.detail, l.image))
        .collect::<Vec<_>>()
        .join("; ");
    Ok(verdict(
        distinct && zero && image_differs && sum_err < 1e-6,
        format!("{rows}; (1,1,0) grad = S + D grads (max diff {sum_err:.1e}), all-zero weights give zero grad: {zero}"),
    ))
}

// ---------------------------------------------------------------- 9

fn criterion_9() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let model = Rsdn::<f32>::new(ModelConfig::default(), &mut rng)?;
    let frames: Vec<Tensor4<f32>> = (0..5).map(|_| Tensor4::uniform([1, 3, 12, 12], 0.0, 1.0, &mut rng)).collect();
    let base = model.forward_sequence(&frames)?;
    // step 0 reads frame 1 as its mirrored predecessor, so it depends on
    // frames up to index max(t, 1)
    let mut causal = true;
    for t in 0..frames.len() {
        let horizon = t.max(1);
        let mut altered = frames.clone();
        for f in altered.iter_mut().skip(horizon + 1) {
            *f = Tensor4::uniform([1, 3, 12, 12], 0.0, 1.0, &mut rng);
        }
        let out = model.forward_sequence(&altered)?;
        causal &= (0..=t).all(|s| out[s].image == base[s].image && out[s].state == base[s].state);
    }

    let data = small_data()?;
    let run = |dir: &std::path::Path| -> Result<Vec<u8>> {
        let mut trainer = Trainer::new(small_config(ModelConfig::default(), LossWeights::default(), 5))?;
        trainer.run(&data, &data[..1], Some(dir))?;
        Ok(std::fs::read(dir.join(rsdn::train::CKPT_FINAL)).expect("checkpoint written"))
    };
    let (a, b) = (tempfile::tempdir().expect("tempdir"), tempfile::tempdir().expect("tempdir"));
    let identical = run(a.path())? == run(b.path())?;
    Ok(verdict(
        causal && identical,
        format!("outputs invariant to future frames: {causal}; seeded checkpoints byte-identical: {identical}"),
    ))
}

// ---------------------------------------------------------------- 10

fn criterion_10() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let x = Tensor4::<f64>::uniform([1, 3, 24, 24], 0.0, 1.0, &mut rng);
    let y = Tensor4::<f64>::uniform([1, 3, 24, 24], 0.0, 1.0, &mut rng);
    let ssim_one = ssim(&x, &x)? == 1.0;
    let psnr_20 = psnr(&Tensor4::<f64>::zeros([1, 3, 24, 24]), &Tensor4::full([1, 3, 24, 24], 0.1), 1.0)? == 20.0;

    let mut mse = 0.0;
    for (a, b) in x.data().iter().zip(y.data()) {
        mse += (a - b) * (a - b);
    }
    let psnr_ref = 10.0 * (1.0 / (mse / x.numel() as f64)).log10();
    let psnr_err = (psnr(&x, &y, 1.0)? - psnr_ref).abs();

    let luma = rgb_to_y(&Tensor4::<f64>::full([1, 3, 1, 1], 1.0))?.item()?;
    let luma_ok = (luma - 235.0 / 255.0).abs() < 1e-12;

    // direct windowed SSIM on an 8x8 pair (window shrinks to 7x7)
    let a = Tensor4::<f64>::uniform([1, 1, 8, 8], 0.0, 1.0, &mut rng);
    let b = a.map(|v| 0.8 * v + 0.1);
    let g = rsdn::metrics::ssim_window(7, 1.5);
    let (c1, c2) = (1e-4, 9e-4);
    let mut acc = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let (mut mx, mut my, mut xx, mut yy, mut xy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for u in 0..7 {
                for v in 0..7 {
                    let w = g[u] * g[v];
                    let (p, q) = (a.at(0, 0, i + u, j + v), b.at(0, 0, i + u, j + v));
                    mx += w * p;
                    my += w * q;
                    xx += w * p * p;
                    yy += w * q * q;
                    xy += w * p * q;
                }
            }
            acc += ((2.0 * mx * my + c1) * (2.0 * (xy - mx * my) + c2))
                / ((mx * mx + my * my + c1) * (xx - mx * mx + yy - my * my + c2));
        }
    }
    let ssim_err = (ssim(&a, &b)? - acc / 4.0).abs();
    Ok(verdict(
        ssim_one && psnr_20 && psnr_err < 1e-9 && ssim_err < 1e-8 && luma_ok,
        format!("ssim(x,x)=1: {ssim_one}, psnr(0.1 diff)=20 dB: {psnr_20}, psnr oracle err {psnr_err:.1e}, ssim oracle err {ssim_err:.1e}, white luma ok: {luma_ok}"),
    ))
}

// ---------------------------------------------------------------- 11

fn criterion_11() -> Result<Verdict> {
    let model = Rsdn::<f32>::new(ModelConfig::default(), &mut ChaCha8Rng::seed_from_u64(11))?;
    let frames: Vec<Tensor4<f32>> = (1..=3).map(|k| Tensor4::full([1, 3, 8, 8], k as f32 / 10.0)).collect();
    let mut seen = Vec::new();
    model.forward_sequence_observed(&frames, |_, prev, cur| {
        let id = |f: &Tensor4<f32>| frames.iter().position(|g| g == f).map_or(0, |i| i + 1);
        seen.push((id(prev), id(cur)));
    })?;
    Ok(verdict(seen == [(2, 1), (1, 2), (2, 3)], format!("step inputs {seen:?}")))
}

// ----------------------------------------------------------------

fn main() {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let run = |n: usize| wanted.is_empty() || wanted.contains(&n);
    let mut toy: Option<ToyData> = None;
    let mut failures = 0;
    let titles = [
        "gradient correctness",
        "oracle equivalence",
        "decomposition identity",
        "architecture reconstruction",
        "toy training efficacy",
        "ablation ordering (soft)",
        "architecture grid executes",
        "loss-weight grid executes",
        "causality and determinism",
        "metrics sanity",
        "padding protocol",
    ];
    for (i, title) in titles.iter().enumerate() {
        let n = i + 1;
        if !run(n) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(|| -> Result<Verdict> {
            if (n == 5 || n == 6) && toy.is_none() {
                toy = Some(toy_data()?);
            }
            match n {
                1 => criterion_1(),
                2 => criterion_2(),
                3 => criterion_3(),
                4 => criterion_4(),
                5 => criterion_5(toy.as_ref().expect("built above")),
                6 => criterion_6(toy.as_ref().expect("built above")),
                7 => criterion_7(),
                8 => criterion_8(),
                9 => criterion_9(),
                10 => criterion_10(),
                _ => criterion_11(),
            }
        }));
        let (tag, detail) = match outcome {
            Ok(Ok(Verdict::Pass(d))) => ("PASS", d),
            Ok(Ok(Verdict::Flagged(d))) => ("FLAG", d),
            Ok(Ok(Verdict::Fail(d))) => {
                failures += 1;
                ("FAIL", d)
            }
            Ok(Err(e)) => {
                failures += 1;
                ("FAIL", format!("error: {e}"))
            }
            Err(_) => {
                failures += 1;
                ("FAIL", "panicked".to_string())
            }
        };
        println!("[{tag}] criterion {n:>2} {title}: {detail}");
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
