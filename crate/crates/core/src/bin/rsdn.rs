use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rsdn::config::KeyValues;
use rsdn::data::{
    load_dataset, load_frames, save_frames, save_sequence, split, synth_dataset, synth_frames, write_manifest,
    write_png, Decimation, DegradeConfig, SequenceSample, SynthKind, SynthSpec,
};
use rsdn::metrics::{dump_hidden_channels, evaluate, evaluate_bicubic, temporal_profile};
use rsdn::model::{param_count, ModelConfig};
use rsdn::train::{run_ablation, AblationGrid, Checkpoint, TrainConfig, Trainer, CKPT_FINAL, METRICS_LOG};
use rsdn::{Error, Result};

const CONFIG_RESOLVED: &str = "config.resolved";
const REPORT: &str = "report.csv";
const DATA_KEYS: [&str; 2] = ["val_fraction", "split_seed"];

#[derive(Parser)]
#[command(name = "rsdn", version, about = "Recurrent structure-detail video super-resolution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model on a dataset of sequence directories.
    Train(TrainArgs),
    /// Super-resolve one PNG sequence with a checkpoint.
    Infer(InferArgs),
    /// Score a checkpoint (or bicubic upsampling) on a dataset.
    Eval(EvalArgs),
    /// Train every configuration of an ablation grid on the same budget.
    Ablate(AblateArgs),
    /// Write a synthetic dataset.
    Synth(SynthArgs),
    /// Produce the LR side of an HR sequence.
    Degrade(DegradeArgs),
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` file; flags take precedence over it.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Extra `key=value` setting, repeatable; flags take precedence.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    /// Manifest, dataset directory or single sequence directory.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// one_stream, two_stream or sd.
    #[arg(long)]
    variant: Option<String>,
    /// image or sd.
    #[arg(long)]
    input_mode: Option<String>,
    /// on or off.
    #[arg(long)]
    hsa: Option<String>,
    #[arg(long)]
    blocks: Option<usize>,
    #[arg(long)]
    channels: Option<usize>,
    #[arg(long)]
    scale: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    /// HR patch side.
    #[arg(long)]
    patch: Option<usize>,
    #[arg(long)]
    clip_len: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    val_fraction: Option<f64>,
}

#[derive(Args)]
struct InferArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    ckpt: Option<PathBuf>,
    /// LR frames, either directly or in an `lr/` subdirectory.
    #[arg(long)]
    in_dir: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Write the first N hidden-state channels after every frame.
    #[arg(long, value_name = "N")]
    dump_hidden: Option<usize>,
    /// Write the temporal profile of this HR row.
    #[arg(long, value_name = "R")]
    profile_row: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    /// Checkpoint to score; bicubic upsampling when absent.
    #[arg(long)]
    ckpt: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Border pixels excluded from every metric.
    #[arg(long)]
    crop: Option<usize>,
    /// Report path; defaults to `report.csv` under `--out`.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    common: Common,
    /// table1 (architecture) or table2 (loss weights).
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Training iterations per configuration.
    #[arg(long)]
    budget_iters: Option<usize>,
    #[arg(long)]
    blocks: Option<usize>,
    #[arg(long)]
    channels: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    common: Common,
    /// moving_bars, drifting_checker or noise_pan.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    clips: Option<usize>,
    #[arg(long)]
    frames: Option<usize>,
    /// HR frame size, `N` or `HxW`.
    #[arg(long)]
    size: Option<String>,
    /// Pixels per frame: a speed in random directions, or a fixed `dx,dy`.
    #[arg(long)]
    velocity: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    scale: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DegradeArgs {
    #[command(flatten)]
    common: Common,
    /// HR frames, either directly or in an `hr/` subdirectory.
    #[arg(long)]
    in_dir: Option<PathBuf>,
    /// Receives `hr/` and `lr/`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    scale: Option<usize>,
    /// strided or bicubic.
    #[arg(long)]
    decimation: Option<String>,
}

/// Config file, then `--set` pairs, then explicit flags.
fn resolve(common: &Common, flags: Vec<(&str, Option<String>)>) -> Result<KeyValues> {
    let mut kv = match &common.config {
        Some(path) => KeyValues::load(path)?,
        None => KeyValues::new(),
    };
    for pair in &common.set {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("--set expects KEY=VALUE, got '{pair}'")))?;
        kv.set(k.trim(), v.trim());
    }
    for (k, v) in flags {
        if let Some(v) = v {
            kv.set(k, v);
        }
    }
    Ok(kv)
}

fn s<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(T::to_string)
}

fn p(v: &Option<PathBuf>) -> Option<String> {
    v.as_ref().map(|p| p.display().to_string())
}

fn path_of(kv: &KeyValues, key: &str) -> Result<PathBuf> {
    kv.get(key)
        .map(PathBuf::from)
        .ok_or_else(|| Error::Usage(format!("missing --{} (or '{key}' in the config file)", key.replace('_', "-"))))
}

fn degradation(kv: &KeyValues, scale: usize) -> Result<DegradeConfig> {
    let d = DegradeConfig::default();
    Ok(DegradeConfig {
        sigma: kv.parse_or("sigma", d.sigma)?,
        scale,
        decimation: kv.parse_or::<Decimation>("decimation", d.decimation)?,
    })
}

fn write_resolved(kv: &KeyValues, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    kv.save(&dir.join(CONFIG_RESOLVED))
}

fn load_model(path: &Path) -> Result<rsdn::model::Rsdn<f32>> {
    Checkpoint::<f32>::load(path)?.into_model()
}

fn train(a: &TrainArgs) -> Result<()> {
    let mut kv = resolve(
        &a.common,
        vec![
            ("data", p(&a.data)),
            ("out", p(&a.out)),
            ("variant", s(&a.variant)),
            ("input_mode", s(&a.input_mode)),
            ("hsa", s(&a.hsa)),
            ("blocks", s(&a.blocks)),
            ("channels", s(&a.channels)),
            ("scale", s(&a.scale)),
            ("alpha", s(&a.alpha)),
            ("beta", s(&a.beta)),
            ("gamma", s(&a.gamma)),
            ("lr", s(&a.lr)),
            ("epochs", s(&a.epochs)),
            ("max_iters", s(&a.max_iters)),
            ("batch", s(&a.batch)),
            ("patch", s(&a.patch)),
            ("clip_len", s(&a.clip_len)),
            ("seed", s(&a.seed)),
            ("val_fraction", s(&a.val_fraction)),
        ],
    )?;
    kv.check_known(&[&TrainConfig::KEYS[..], &ModelConfig::KEYS, &DATA_KEYS, &["data", "out"]].concat())?;
    let cfg = TrainConfig::from_kv(&kv)?;
    let (data_path, out) = (path_of(&kv, "data")?, path_of(&kv, "out")?);
    let deg = cfg.degradation;
    let val_fraction: f64 = kv.parse_or("val_fraction", 0.1)?;
    let split_seed: u64 = kv.parse_or("split_seed", cfg.seed)?;
    kv.merge(&cfg.to_kv());
    kv.set("val_fraction", val_fraction);
    kv.set("split_seed", split_seed);
    write_resolved(&kv, &out)?;

    let (train_set, val_set) = split(load_dataset(&data_path, &deg)?, val_fraction, split_seed)?;
    println!(
        "training {} ({} parameters) on {} clips, validating on {}",
        cfg.model.label(),
        param_count(&cfg.model),
        train_set.len(),
        val_set.len()
    );
    let mut trainer = Trainer::new(cfg)?;
    let summary = trainer.run(&train_set, &val_set, Some(&out))?;
    let last = summary.history.last().map(|r| r.loss.total).unwrap_or(f64::NAN);
    println!("{} iterations, final loss {last:.5}", summary.iterations);
    if let (Some(v), Some(b)) = (summary.final_val_psnr, summary.bicubic_val_psnr) {
        println!("validation Y-PSNR {v:.3} dB (bicubic {b:.3} dB)");
    }
    println!("wrote {} and {}", out.join(METRICS_LOG).display(), out.join(CKPT_FINAL).display());
    Ok(())
}

fn infer(a: &InferArgs) -> Result<()> {
    let kv = resolve(
        &a.common,
        vec![
            ("ckpt", p(&a.ckpt)),
            ("in_dir", p(&a.in_dir)),
            ("out_dir", p(&a.out_dir)),
            ("dump_hidden", s(&a.dump_hidden)),
            ("profile_row", s(&a.profile_row)),
        ],
    )?;
    kv.check_known(&["ckpt", "in_dir", "out_dir", "dump_hidden", "profile_row"])?;
    let (ckpt, in_dir, out_dir) = (path_of(&kv, "ckpt")?, path_of(&kv, "in_dir")?, path_of(&kv, "out_dir")?);
    let dump_hidden: Option<usize> = kv.parse_opt("dump_hidden")?;
    let profile_row: Option<usize> = kv.parse_opt("profile_row")?;
    write_resolved(&kv, &out_dir)?;

    let model = load_model(&ckpt)?;
    let lr_dir = if in_dir.join("lr").is_dir() { in_dir.join("lr") } else { in_dir };
    let frames = load_frames(&lr_dir)?;
    let outputs = model.forward_sequence(&frames)?;
    let sr: Vec<_> = outputs.iter().map(|o| o.image.map(|v| v.clamp(0.0, 1.0))).collect();
    save_frames(&sr, &out_dir.join("sr"))?;
    println!("wrote {} frames to {}", sr.len(), out_dir.join("sr").display());
    if let Some(n) = dump_hidden {
        for (t, o) in outputs.iter().enumerate() {
            dump_hidden_channels(&o.state, &out_dir.join("hidden").join(format!("frame_{:04}", t + 1)), n)?;
        }
        println!("wrote {n} hidden channels per frame under {}", out_dir.join("hidden").display());
    }
    if let Some(row) = profile_row {
        let path = out_dir.join("profile.png");
        write_png(&temporal_profile(&sr, row)?, &path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn eval(a: &EvalArgs) -> Result<()> {
    let mut kv = resolve(
        &a.common,
        vec![
            ("ckpt", p(&a.ckpt)),
            ("data", p(&a.data)),
            ("crop", s(&a.crop)),
            ("report", p(&a.report)),
            ("out", p(&a.out)),
        ],
    )?;
    kv.check_known(&["ckpt", "data", "crop", "report", "out", "scale", "sigma", "decimation"])?;
    let (data_path, out) = (path_of(&kv, "data")?, path_of(&kv, "out")?);
    let crop: usize = kv.parse_or("crop", 8)?;
    let report_path = kv.get("report").map(PathBuf::from).unwrap_or_else(|| out.join(REPORT));
    let model = kv.get("ckpt").map(|c| load_model(Path::new(c))).transpose()?;
    let scale = model.as_ref().map_or(kv.parse_or("scale", 4)?, |m| m.config().scale);
    let deg = degradation(&kv, scale)?;
    kv.set("crop", crop);
    kv.set("scale", scale);
    kv.set("sigma", deg.sigma);
    kv.set("decimation", deg.decimation);
    kv.set("report", report_path.display());
    write_resolved(&kv, &out)?;

    let data = load_dataset(&data_path, &deg)?;
    let report = match &model {
        Some(m) => evaluate(m, &data, crop)?,
        None => evaluate_bicubic(&data, crop)?,
    };
    report.write_csv(&report_path)?;
    print!("{}", report.table());
    println!("wrote {}", report_path.display());
    Ok(())
}

fn ablate(a: &AblateArgs) -> Result<()> {
    let mut kv = resolve(
        &a.common,
        vec![
            ("grid", s(&a.grid)),
            ("data", p(&a.data)),
            ("budget_iters", s(&a.budget_iters)),
            ("blocks", s(&a.blocks)),
            ("channels", s(&a.channels)),
            ("seed", s(&a.seed)),
            ("out", p(&a.out)),
        ],
    )?;
    kv.check_known(
        &[
            &TrainConfig::KEYS[..],
            &ModelConfig::KEYS,
            &DATA_KEYS,
            &["grid", "data", "budget_iters", "out"],
        ]
        .concat(),
    )?;
    let grid: AblationGrid = kv.parse_or("grid", AblationGrid::Table1)?;
    let budget: usize = kv.parse_or("budget_iters", 300)?;
    kv.set("max_iters", budget);
    let base = TrainConfig::from_kv(&kv)?;
    let (data_path, out) = (path_of(&kv, "data")?, path_of(&kv, "out")?);
    let deg = base.degradation;
    let val_fraction: f64 = kv.parse_or("val_fraction", 0.1)?;
    let split_seed: u64 = kv.parse_or("split_seed", base.seed)?;
    kv.merge(&base.to_kv());
    kv.set("grid", grid);
    kv.set("budget_iters", budget);
    kv.set("val_fraction", val_fraction);
    kv.set("split_seed", split_seed);
    write_resolved(&kv, &out)?;

    let (train_set, val_set) = split(load_dataset(&data_path, &deg)?, val_fraction, split_seed)?;
    let runs = grid.runs(&base);
    println!("{grid}: {} configurations, {budget} iterations each", runs.len());
    let report = run_ablation(grid, &runs, &train_set, &val_set, |r| {
        println!("  {:<28} {:>8.3} dB  {:.0}s", r.label, r.val.psnr_y, r.seconds);
    })?;
    let path = out.join(REPORT);
    fs::write(&path, report.to_csv()).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    print!("{}", report.table());
    println!("wrote {}", path.display());
    Ok(())
}

fn parse_size(text: &str) -> Result<(usize, usize)> {
    let bad = || Error::Usage(format!("--size expects N or HxW, got '{text}'"));
    match text.split_once('x') {
        Some((h, w)) => Ok((h.trim().parse().map_err(|_| bad())?, w.trim().parse().map_err(|_| bad())?)),
        None => {
            let n = text.trim().parse().map_err(|_| bad())?;
            Ok((n, n))
        }
    }
}

fn synth(a: &SynthArgs) -> Result<()> {
    let mut kv = resolve(
        &a.common,
        vec![
            ("kind", s(&a.kind)),
            ("clips", s(&a.clips)),
            ("frames", s(&a.frames)),
            ("size", s(&a.size)),
            ("velocity", s(&a.velocity)),
            ("seed", s(&a.seed)),
            ("sigma", s(&a.sigma)),
            ("scale", s(&a.scale)),
            ("out", p(&a.out)),
        ],
    )?;
    kv.check_known(&[
        "kind",
        "clips",
        "frames",
        "size",
        "velocity",
        "seed",
        "sigma",
        "scale",
        "decimation",
        "out",
    ])?;
    let kind: SynthKind = kv.parse_or("kind", SynthKind::MovingBars)?;
    let clips: usize = kv.parse_or("clips", 16)?;
    let frames: usize = kv.parse_or("frames", 8)?;
    let (height, width) = parse_size(kv.get("size").unwrap_or("64"))?;
    let velocity = kv.get("velocity").unwrap_or("1").to_string();
    let seed: u64 = kv.parse_or("seed", 0)?;
    let deg = degradation(&kv, kv.parse_or("scale", 4)?)?;
    let out = path_of(&kv, "out")?;
    kv.set("kind", kind);
    kv.set("clips", clips);
    kv.set("frames", frames);
    kv.set("size", format!("{height}x{width}"));
    kv.set("velocity", &velocity);
    kv.set("seed", seed);
    kv.set("sigma", deg.sigma);
    kv.set("scale", deg.scale);
    kv.set("decimation", deg.decimation);
    write_resolved(&kv, &out)?;

    let bad = || Error::Usage(format!("--velocity expects a speed or dx,dy, got '{velocity}'"));
    let data: Vec<SequenceSample> = match velocity.split_once(',') {
        None => {
            let speed: f64 = velocity.trim().parse().map_err(|_| bad())?;
            synth_dataset(kind, clips, frames, height, width, speed, seed, &deg)?
        }
        Some((dx, dy)) => {
            let v = [dx.trim().parse().map_err(|_| bad())?, dy.trim().parse().map_err(|_| bad())?];
            (0..clips)
                .map(|i| {
                    let spec = SynthSpec {
                        kind,
                        frames,
                        height,
                        width,
                        velocity: v,
                        seed: seed.wrapping_add(i as u64),
                    };
                    SequenceSample::from_hr(format!("clip_{i:04}"), synth_frames(&spec)?, &deg)
                })
                .collect::<Result<_>>()?
        }
    };
    let names: Vec<String> = data.iter().map(|d| d.name().to_string()).collect();
    for d in &data {
        save_sequence(d, &out.join(d.name()))?;
    }
    write_manifest(&out, &names)?;
    println!("wrote {} {kind} clips of {frames} frames ({height}x{width} HR) to {}", data.len(), out.display());
    Ok(())
}

fn degrade(a: &DegradeArgs) -> Result<()> {
    let mut kv = resolve(
        &a.common,
        vec![
            ("in_dir", p(&a.in_dir)),
            ("out_dir", p(&a.out_dir)),
            ("sigma", s(&a.sigma)),
            ("scale", s(&a.scale)),
            ("decimation", s(&a.decimation)),
        ],
    )?;
    kv.check_known(&["in_dir", "out_dir", "sigma", "scale", "decimation"])?;
    let (in_dir, out_dir) = (path_of(&kv, "in_dir")?, path_of(&kv, "out_dir")?);
    let deg = degradation(&kv, kv.parse_or("scale", 4)?)?;
    kv.set("sigma", deg.sigma);
    kv.set("scale", deg.scale);
    kv.set("decimation", deg.decimation);
    write_resolved(&kv, &out_dir)?;

    let hr_dir = if in_dir.join("hr").is_dir() { in_dir.join("hr") } else { in_dir.clone() };
    let name = in_dir.file_name().map_or("sequence".into(), |n| n.to_string_lossy().into_owned());
    let sample = SequenceSample::from_hr(name, load_frames(&hr_dir)?, &deg)?;
    save_sequence(&sample, &out_dir)?;
    let (h, w) = sample.lr_hw();
    println!("wrote {} LR frames of {h}x{w} to {}", sample.len(), out_dir.join("lr").display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(a) => train(a),
        Command::Infer(a) => infer(a),
        Command::Eval(a) => eval(a),
        Command::Ablate(a) => ablate(a),
        Command::Synth(a) => synth(a),
        Command::Degrade(a) => degrade(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rsdn: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
