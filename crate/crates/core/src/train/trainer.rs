//! The training loop: clip sampling, augmentation, truncated unrolls over
//! whole clips, Adam updates, validation and checkpointing.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{adam_step, total_loss_on_tape, Checkpoint, LossTerms, LossWeights, LrSchedule, OptimState, Targets};
use crate::autograd::Tape;
use crate::config::{parse_switch, KeyValues};
use crate::data::{degrade_frame, DegradeConfig, SequenceSample};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, evaluate_bicubic};
use crate::model::{ModelConfig, Rsdn};
use crate::ops::{crop, flip_h, rot90};
use crate::tensor::Tensor4;

pub const METRICS_LOG: &str = "metrics.log";
pub const CKPT_FINAL: &str = "ckpt_final";
pub const CKPT_LAST: &str = "ckpt_last";
pub const CKPT_LAST_GOOD: &str = "ckpt_last_good";

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub weights: LossWeights,
    pub schedule: LrSchedule,
    pub batch: usize,
    /// HR patch side; must be a multiple of the scale.
    pub patch: usize,
    pub clip_len: usize,
    pub seed: u64,
    /// Stop after this many iterations even if epochs remain.
    pub max_iters: Option<usize>,
    /// Validate every this many iterations (0: only at the end).
    pub val_every: usize,
    pub val_crop: usize,
    pub augment: bool,
    /// Write `ckpt_last` every this many iterations (0: never).
    pub checkpoint_every: usize,
    /// Turns each augmented HR crop into its LR input. Stored LR frames
    /// are used for validation only: flips and rotations move the
    /// decimation lattice, so augmented LR has to be regenerated.
    pub degradation: DegradeConfig,
}

impl Default for TrainConfig {
    /// Laptop-scale settings.
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            weights: LossWeights::default(),
            schedule: LrSchedule {
                base_lr: 1e-3,
                ..LrSchedule::default()
            },
            batch: 4,
            patch: 64,
            clip_len: 4,
            seed: 0,
            max_iters: None,
            val_every: 100,
            val_crop: 8,
            augment: true,
            checkpoint_every: 500,
            degradation: DegradeConfig::default(),
        }
    }
}

impl TrainConfig {
    pub const KEYS: [&'static str; 19] = [
        "alpha",
        "beta",
        "gamma",
        "epsilon",
        "lr",
        "decay_epoch",
        "decay_factor",
        "epochs",
        "batch",
        "patch",
        "clip_len",
        "seed",
        "max_iters",
        "val_every",
        "val_crop",
        "augment",
        "checkpoint_every",
        "sigma",
        "decimation",
    ];

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.weights.validate()?;
        self.schedule.validate()?;
        if self.batch == 0 || self.clip_len == 0 || self.patch == 0 || self.patch % self.model.scale != 0 {
            return Err(Error::Usage(format!(
                "batch and clip_len must be positive and patch a positive multiple of {}",
                self.model.scale
            )));
        }
        if self.degradation.scale != self.model.scale || !(self.degradation.sigma > 0.0) {
            return Err(Error::Usage(format!(
                "training degradation must be x{} with a positive sigma, got {:?}",
                self.model.scale, self.degradation
            )));
        }
        Ok(())
    }

    /// Every setting as flat key/value pairs, model keys included.
    pub fn to_kv(&self) -> KeyValues {
        let mut kv = self.model.to_kv();
        kv.set("alpha", self.weights.alpha);
        kv.set("beta", self.weights.beta);
        kv.set("gamma", self.weights.gamma);
        kv.set("epsilon", self.weights.epsilon);
        kv.set("lr", self.schedule.base_lr);
        kv.set("decay_epoch", self.schedule.decay_epoch);
        kv.set("decay_factor", self.schedule.decay_factor);
        kv.set("epochs", self.schedule.epochs);
        kv.set("batch", self.batch);
        kv.set("patch", self.patch);
        kv.set("clip_len", self.clip_len);
        kv.set("seed", self.seed);
        kv.set("max_iters", self.max_iters.map_or("none".to_string(), |m| m.to_string()));
        kv.set("val_every", self.val_every);
        kv.set("val_crop", self.val_crop);
        kv.set("augment", if self.augment { "on" } else { "off" });
        kv.set("checkpoint_every", self.checkpoint_every);
        kv.set("sigma", self.degradation.sigma);
        kv.set("decimation", self.degradation.decimation);
        kv
    }

    /// Read training and model keys, defaulting absent ones.
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        let d = Self::default();
        let max_iters = match kv.get("max_iters") {
            None | Some("none") => d.max_iters,
            Some(_) => Some(kv.require("max_iters")?),
        };
        let model = ModelConfig::from_kv(kv)?;
        let cfg = Self {
            degradation: DegradeConfig {
                sigma: kv.parse_or("sigma", d.degradation.sigma)?,
                scale: model.scale,
                decimation: kv.parse_or("decimation", d.degradation.decimation)?,
            },
            model,
            weights: LossWeights {
                alpha: kv.parse_or("alpha", d.weights.alpha)?,
                beta: kv.parse_or("beta", d.weights.beta)?,
                gamma: kv.parse_or("gamma", d.weights.gamma)?,
                epsilon: kv.parse_or("epsilon", d.weights.epsilon)?,
            },
            schedule: LrSchedule {
                base_lr: kv.parse_or("lr", d.schedule.base_lr)?,
                decay_epoch: kv.parse_or("decay_epoch", d.schedule.decay_epoch)?,
                decay_factor: kv.parse_or("decay_factor", d.schedule.decay_factor)?,
                epochs: kv.parse_or("epochs", d.schedule.epochs)?,
            },
            batch: kv.parse_or("batch", d.batch)?,
            patch: kv.parse_or("patch", d.patch)?,
            clip_len: kv.parse_or("clip_len", d.clip_len)?,
            seed: kv.parse_or("seed", d.seed)?,
            max_iters,
            val_every: kv.parse_or("val_every", d.val_every)?,
            val_crop: kv.parse_or("val_crop", d.val_crop)?,
            augment: kv.get("augment").map(parse_switch).transpose()?.unwrap_or(d.augment),
            checkpoint_every: kv.parse_or("checkpoint_every", d.checkpoint_every)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A mini-batch of equally long clips, one `(batch, 3, h, w)` tensor per step.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub lr: Vec<Tensor4<f32>>,
    pub hr: Vec<Tensor4<f32>>,
}

/// Apply one of the eight flip/rotation symmetries of the square.
pub fn augment_frame(x: &Tensor4<f32>, code: u8) -> Tensor4<f32> {
    let flipped = if code & 1 == 1 { flip_h(x) } else { x.clone() };
    rot90(&flipped, usize::from(code >> 1))
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    pub epoch: usize,
    pub lr: f64,
    pub loss: LossTerms,
    pub psnr_val: Option<f64>,
}

impl IterRecord {
    pub fn log_line(&self) -> String {
        let psnr = self.psnr_val.map_or(String::new(), |p| format!("{p:.4}"));
        format!("{},{},{:e},{:.8},{psnr}", self.iter, self.epoch, self.lr, self.loss.total)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainSummary {
    pub history: Vec<IterRecord>,
    pub iterations: usize,
    pub final_val_psnr: Option<f64>,
    pub bicubic_val_psnr: Option<f64>,
}

impl TrainSummary {
    /// Mean total loss over the `n` records starting at `start`.
    pub fn mean_loss(&self, start: usize, n: usize) -> Option<f64> {
        let window: Vec<f64> = self.history.iter().skip(start).take(n).map(|r| r.loss.total).collect();
        (!window.is_empty()).then(|| window.iter().sum::<f64>() / window.len() as f64)
    }
}

pub struct Trainer {
    cfg: TrainConfig,
    model: Rsdn<f32>,
    optim: OptimState<f32>,
    rng: ChaCha8Rng,
    iter: usize,
}

impl Trainer {
    /// Initialise the model and data sampling from `cfg.seed`.
    pub fn new(cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let model = Rsdn::new(cfg.model.clone(), &mut rng)?;
        let optim = OptimState::new(model.params());
        Ok(Self {
            cfg,
            model,
            optim,
            rng,
            iter: 0,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn model(&self) -> &Rsdn<f32> {
        &self.model
    }

    pub fn optim(&self) -> &OptimState<f32> {
        &self.optim
    }

    pub fn iteration(&self) -> usize {
        self.iter
    }

    pub fn checkpoint(&self) -> Checkpoint<f32> {
        let mut ck = Checkpoint::from_model(&self.model, Some(&self.optim));
        ck.meta.set("iteration", self.iter);
        ck
    }

    /// Draw `batch` random HR crops of `clip_len` consecutive frames,
    /// augment them and degrade them into the LR inputs.
    pub fn sample_batch(&mut self, data: &[SequenceSample]) -> Result<Batch> {
        if data.is_empty() {
            return Err(Error::Usage("training set is empty".into()));
        }
        let r = self.cfg.model.scale;
        let (t_len, lp) = (self.cfg.clip_len, self.cfg.patch / r);
        let mut lr_steps = vec![Vec::with_capacity(self.cfg.batch); t_len];
        let mut hr_steps = vec![Vec::with_capacity(self.cfg.batch); t_len];
        for _ in 0..self.cfg.batch {
            let clip = &data[self.rng.gen_range(0..data.len())];
            if clip.scale() != r {
                return Err(Error::Usage(format!("{} is a x{} clip, model is x{r}", clip.name(), clip.scale())));
            }
            let (lh, lw) = clip.lr_hw();
            if clip.len() < t_len || lh < lp || lw < lp {
                return Err(Error::Usage(format!(
                    "{} ({} frames of {lh}x{lw} LR) is smaller than a {t_len}-frame {lp}x{lp} crop",
                    clip.name(),
                    clip.len()
                )));
            }
            let start = self.rng.gen_range(0..=clip.len() - t_len);
            let top = self.rng.gen_range(0..=lh - lp);
            let left = self.rng.gen_range(0..=lw - lp);
            let code = if self.cfg.augment { self.rng.gen_range(0..8u8) } else { 0 };
            for t in 0..t_len {
                let hr = augment_frame(&crop(&clip.hr()[start + t], top * r, left * r, lp * r, lp * r)?, code);
                lr_steps[t].push(degrade_frame(&hr, &self.cfg.degradation)?);
                hr_steps[t].push(hr);
            }
        }
        Ok(Batch {
            lr: lr_steps.iter().map(|s| Tensor4::stack(s)).collect::<Result<_>>()?,
            hr: hr_steps.iter().map(|s| Tensor4::stack(s)).collect::<Result<_>>()?,
        })
    }

    /// Loss and parameter gradients on one batch, without updating.
    pub fn loss_and_grads(&self, batch: &Batch) -> Result<(LossTerms, Vec<Tensor4<f32>>)> {
        let mut tape = Tape::new();
        let bound = self.model.bind(&mut tape, true);
        let steps = bound.unroll(&mut tape, &batch.lr)?;
        let targets = batch
            .hr
            .iter()
            .map(|h| Targets::from_hr(h, self.cfg.model.scale))
            .collect::<Result<Vec<_>>>()?;
        let (loss, terms) = total_loss_on_tape(&mut tape, &steps, &targets, &self.cfg.weights)?;
        if !terms.total.is_finite() {
            return Err(Error::Numeric(format!("loss became {} at iteration {}", terms.total, self.iter)));
        }
        let mut grads = tape.backward(loss)?;
        let grads = bound
            .params()
            .iter()
            .map(|&v| grads.take(v).expect("parameters are trainable leaves"))
            .collect();
        Ok((terms, grads))
    }

    /// One optimisation step at learning rate `lr`.
    pub fn train_step(&mut self, batch: &Batch, lr: f64) -> Result<LossTerms> {
        let (terms, grads) = self.loss_and_grads(batch)?;
        adam_step(self.model.params_mut(), &grads, &mut self.optim, lr)?;
        self.iter += 1;
        Ok(terms)
    }

    pub fn iters_per_epoch(&self, train_len: usize) -> usize {
        train_len.div_ceil(self.cfg.batch).max(1)
    }

    /// Train until the schedule ends or `max_iters` is reached.
    ///
    /// With `out` set, writes `metrics.log`, periodic `ckpt_last` and a
    /// final `ckpt_final`. A non-finite loss or gradient aborts with a
    /// numeric error after saving the pre-failure model as `ckpt_last_good`.
    pub fn run(&mut self, train: &[SequenceSample], val: &[SequenceSample], out: Option<&Path>) -> Result<TrainSummary> {
        if train.is_empty() {
            return Err(Error::Usage("training set is empty".into()));
        }
        let mut log = match out {
            Some(dir) => {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                let path = dir.join(METRICS_LOG);
                let mut f = open_log(&path)?;
                writeln!(f, "iter,epoch,lr,loss,psnr_val").map_err(|e| Error::io(&path, e))?;
                Some((f, path))
            }
            None => None,
        };
        let ipe = self.iters_per_epoch(train.len());
        let mut total = self.cfg.schedule.epochs * ipe;
        if let Some(m) = self.cfg.max_iters {
            total = total.min(m);
        }
        let mut summary = TrainSummary {
            bicubic_val_psnr: if val.is_empty() {
                None
            } else {
                Some(evaluate_bicubic(val, self.cfg.val_crop)?.mean().psnr_y)
            },
            ..Default::default()
        };
        while self.iter < total {
            let epoch = self.iter / ipe;
            let lr = self.cfg.schedule.lr(epoch);
            let batch = self.sample_batch(train)?;
            let loss = match self.train_step(&batch, lr) {
                Ok(l) => l,
                Err(e @ Error::Numeric(_)) => {
                    if let Some(dir) = out {
                        self.checkpoint().save(&dir.join(CKPT_LAST_GOOD))?;
                    }
                    return Err(e);
                }
                Err(e) => return Err(e),
            };
            let last = self.iter == total;
            let validate = !val.is_empty() && (last || (self.cfg.val_every > 0 && self.iter % self.cfg.val_every == 0));
            let psnr_val = if validate {
                Some(evaluate(&self.model, val, self.cfg.val_crop)?.mean().psnr_y)
            } else {
                None
            };
            let record = IterRecord {
                iter: self.iter,
                epoch,
                lr,
                loss,
                psnr_val,
            };
            if let Some((f, path)) = log.as_mut() {
                writeln!(f, "{}", record.log_line()).map_err(|e| Error::io(path.clone(), e))?;
            }
            if let Some(dir) = out {
                if self.cfg.checkpoint_every > 0 && self.iter % self.cfg.checkpoint_every == 0 {
                    self.checkpoint().save(&dir.join(CKPT_LAST))?;
                }
            }
            if psnr_val.is_some() {
                summary.final_val_psnr = psnr_val;
            }
            summary.history.push(record);
        }
        summary.iterations = self.iter;
        if let Some(dir) = out {
            self.checkpoint().save(&dir.join(CKPT_FINAL))?;
        }
        Ok(summary)
    }
}

fn open_log(path: &PathBuf) -> Result<File> {
    OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path.clone(), e))
}
