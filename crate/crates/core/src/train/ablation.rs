//! Equal-budget comparison runs over the architecture grid and the loss
//! weight grid.

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::Instant;

use super::{LossWeights, TrainConfig, Trainer};
use crate::data::SequenceSample;
use crate::error::{Error, Result};
use crate::metrics::{evaluate, evaluate_bicubic, FrameMetrics};
use crate::model::{param_count, ModelConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AblationGrid {
    /// Eight block/input/HSA configurations.
    Table1,
    /// Four `(alpha, beta, gamma)` weightings of the loss.
    Table2,
}

impl AblationGrid {
    pub fn as_str(&self) -> &'static str {
        match self {
            AblationGrid::Table1 => "table1",
            AblationGrid::Table2 => "table2",
        }
    }

    /// One run per grid row, all sharing `base` apart from the varied axis.
    pub fn runs(&self, base: &TrainConfig) -> Vec<AblationRun> {
        match self {
            AblationGrid::Table1 => ModelConfig::ablation_grid(base.model.blocks, base.model.channels)
                .into_iter()
                .map(|model| AblationRun {
                    label: model.label(),
                    config: TrainConfig {
                        model,
                        ..base.clone()
                    },
                })
                .collect(),
            AblationGrid::Table2 => LossWeights::ablation_grid()
                .into_iter()
                .map(|w| AblationRun {
                    label: format!("a={} b={} g={}", w.alpha, w.beta, w.gamma),
                    config: TrainConfig {
                        weights: LossWeights {
                            epsilon: base.weights.epsilon,
                            ..w
                        },
                        ..base.clone()
                    },
                })
                .collect(),
        }
    }
}

impl fmt::Display for AblationGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AblationGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table1" | "architecture" => Ok(AblationGrid::Table1),
            "table2" | "loss" => Ok(AblationGrid::Table2),
            _ => Err(Error::Usage(format!("unknown ablation grid '{s}' (expected table1 or table2)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationRun {
    pub label: String,
    pub config: TrainConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationResult {
    pub label: String,
    pub params: usize,
    pub val: FrameMetrics,
    /// Mean total loss over the last tenth of the iterations.
    pub final_loss: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationReport {
    pub grid: AblationGrid,
    pub iterations: usize,
    pub bicubic: FrameMetrics,
    /// In run order.
    pub results: Vec<AblationResult>,
}

impl AblationReport {
    /// Results by descending validation Y-PSNR.
    pub fn ranking(&self) -> Vec<&AblationResult> {
        let mut r: Vec<_> = self.results.iter().collect();
        r.sort_by(|a, b| b.val.psnr_y.total_cmp(&a.val.psnr_y));
        r
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,label,params,psnr_y,ssim_y,final_loss,seconds\n");
        for (i, r) in self.ranking().into_iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{:.4},{:.5},{:.6},{:.1}",
                i + 1,
                r.label,
                r.params,
                r.val.psnr_y,
                r.val.ssim_y,
                r.final_loss,
                r.seconds
            );
        }
        let _ = writeln!(out, "-,bicubic,0,{:.4},{:.5},,", self.bicubic.psnr_y, self.bicubic.ssim_y);
        out
    }

    pub fn table(&self) -> String {
        let mut out = format!(
            "{} after {} iterations each\n{:>4}  {:<28} {:>9} {:>8} {:>8} {:>8}\n",
            self.grid, self.iterations, "rank", "configuration", "params", "PSNR-Y", "SSIM-Y", "vs bic"
        );
        for (i, r) in self.ranking().into_iter().enumerate() {
            let _ = writeln!(
                out,
                "{:>4}  {:<28} {:>9} {:>8.3} {:>8.4} {:>+8.3}",
                i + 1,
                r.label,
                r.params,
                r.val.psnr_y,
                r.val.ssim_y,
                r.val.psnr_y - self.bicubic.psnr_y
            );
        }
        let _ = writeln!(
            out,
            "{:>4}  {:<28} {:>9} {:>8.3} {:>8.4}",
            "-", "bicubic", 0, self.bicubic.psnr_y, self.bicubic.ssim_y
        );
        out
    }
}

/// Train every run for the same budget and evaluate on `val`. `progress` is
/// called after each run finishes.
pub fn run_ablation(
    grid: AblationGrid,
    runs: &[AblationRun],
    train: &[SequenceSample],
    val: &[SequenceSample],
    mut progress: impl FnMut(&AblationResult),
) -> Result<AblationReport> {
    let first = runs.first().ok_or_else(|| Error::Usage("ablation grid is empty".into()))?;
    if val.is_empty() {
        return Err(Error::Usage("ablation needs a validation set".into()));
    }
    let crop = first.config.val_crop;
    let mut results = Vec::with_capacity(runs.len());
    let mut iterations = 0;
    for run in runs {
        let start = Instant::now();
        let cfg = TrainConfig {
            val_every: 0,
            checkpoint_every: 0,
            ..run.config.clone()
        };
        let mut trainer = Trainer::new(cfg)?;
        let summary = trainer.run(train, &[], None)?;
        iterations = summary.iterations;
        let tail = (summary.history.len() / 10).max(1);
        let result = AblationResult {
            label: run.label.clone(),
            params: param_count(&run.config.model),
            val: evaluate(trainer.model(), val, crop)?.mean(),
            final_loss: summary.mean_loss(summary.history.len() - tail, tail).unwrap_or(f64::NAN),
            seconds: start.elapsed().as_secs_f64(),
        };
        progress(&result);
        results.push(result);
    }
    Ok(AblationReport {
        grid,
        iterations,
        bicubic: evaluate_bicubic(val, crop)?.mean(),
        results,
    })
}
