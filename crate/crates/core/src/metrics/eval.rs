use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use super::quality::{psnr, rgb_to_y, ssim};
use crate::data::SequenceSample;
use crate::error::{Error, Result};
use crate::model::Rsdn;
use crate::ops::{bicubic_resize, crop, Scale};
use crate::tensor::Tensor4;

#[derive(Clone, Debug, PartialEq)]
pub struct FrameMetrics {
    pub psnr_y: f64,
    pub ssim_y: f64,
    pub psnr_rgb: f64,
    pub ssim_rgb: f64,
    pub ms_per_frame: f64,
}

impl FrameMetrics {
    fn mean<'a>(items: impl IntoIterator<Item = &'a FrameMetrics>) -> FrameMetrics {
        let mut acc = [0.0; 5];
        let mut n = 0usize;
        for m in items {
            for (a, v) in acc.iter_mut().zip([m.psnr_y, m.ssim_y, m.psnr_rgb, m.ssim_rgb, m.ms_per_frame]) {
                *a += v;
            }
            n += 1;
        }
        let [psnr_y, ssim_y, psnr_rgb, ssim_rgb, ms_per_frame] = acc.map(|a| a / n.max(1) as f64);
        FrameMetrics {
            psnr_y,
            ssim_y,
            psnr_rgb,
            ssim_rgb,
            ms_per_frame,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceMetrics {
    pub name: String,
    pub frames: Vec<FrameMetrics>,
    /// Arithmetic mean of `frames`.
    pub mean: FrameMetrics,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub model_id: String,
    pub param_count: usize,
    pub border_crop: usize,
    pub sequences: Vec<SequenceMetrics>,
}

impl EvalReport {
    /// Mean over sequences of the per-sequence means.
    pub fn mean(&self) -> FrameMetrics {
        FrameMetrics::mean(self.sequences.iter().map(|s| &s.mean))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("sequence,frame,psnr_y,ssim_y,psnr_rgb,ssim_rgb,ms_per_frame\n");
        let mut row = |seq: &str, frame: &str, m: &FrameMetrics| {
            let _ = writeln!(
                out,
                "{seq},{frame},{:.6},{:.6},{:.6},{:.6},{:.3}",
                m.psnr_y, m.ssim_y, m.psnr_rgb, m.ssim_rgb, m.ms_per_frame
            );
        };
        for s in &self.sequences {
            for (t, m) in s.frames.iter().enumerate() {
                row(&s.name, &(t + 1).to_string(), m);
            }
            row(&s.name, "all", &s.mean);
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Human-readable per-sequence table.
    pub fn table(&self) -> String {
        let mut out = format!(
            "model {} ({} parameters), border crop {}\n{:<20} {:>9} {:>8} {:>9} {:>8} {:>9}\n",
            self.model_id, self.param_count, self.border_crop, "sequence", "PSNR-Y", "SSIM-Y", "PSNR-RGB", "SSIM-RGB", "ms/frame"
        );
        let mut line = |name: &str, m: &FrameMetrics| {
            let _ = writeln!(
                out,
                "{name:<20} {:>9.3} {:>8.4} {:>9.3} {:>8.4} {:>9.1}",
                m.psnr_y, m.ssim_y, m.psnr_rgb, m.ssim_rgb, m.ms_per_frame
            );
        };
        for s in &self.sequences {
            line(&s.name, &s.mean);
        }
        line("average", &self.mean());
        out
    }
}

fn frame_metrics(sr: &Tensor4<f32>, hr: &Tensor4<f32>, border: usize, ms: f64) -> Result<FrameMetrics> {
    let s = hr.shape();
    if 2 * border >= s.h || 2 * border >= s.w {
        return Err(Error::Argument(format!("border crop {border} leaves nothing of a {}x{} frame", s.h, s.w)));
    }
    let (h, w) = (s.h - 2 * border, s.w - 2 * border);
    let sr = crop(&sr.map(|v| v.clamp(0.0, 1.0)), border, border, h, w)?;
    let hr = crop(hr, border, border, h, w)?;
    let (ys, yh) = (rgb_to_y(&sr)?, rgb_to_y(&hr)?);
    Ok(FrameMetrics {
        psnr_y: psnr(&ys, &yh, 1.0)?,
        ssim_y: ssim(&ys, &yh)?,
        psnr_rgb: psnr(&sr, &hr, 1.0)?,
        ssim_rgb: ssim(&sr, &hr)?,
        ms_per_frame: ms,
    })
}

/// Score the frames produced by `upscale` for each clip against its HR
/// frames. Timing is the wall clock of `upscale` divided by the frame count.
pub fn evaluate_with(
    dataset: &[SequenceSample],
    border_crop: usize,
    model_id: impl Into<String>,
    param_count: usize,
    mut upscale: impl FnMut(&SequenceSample) -> Result<Vec<Tensor4<f32>>>,
) -> Result<EvalReport> {
    let mut sequences = Vec::with_capacity(dataset.len());
    for sample in dataset {
        let start = Instant::now();
        let sr = upscale(sample)?;
        let ms = start.elapsed().as_secs_f64() * 1e3 / sample.len() as f64;
        if sr.len() != sample.len() {
            return Err(Error::Usage(format!(
                "{} produced {} frames for {}",
                sample.name(),
                sr.len(),
                sample.len()
            )));
        }
        let frames = sr
            .iter()
            .zip(sample.hr())
            .map(|(s, h)| frame_metrics(s, h, border_crop, ms))
            .collect::<Result<Vec<_>>>()?;
        sequences.push(SequenceMetrics {
            name: sample.name().to_string(),
            mean: FrameMetrics::mean(&frames),
            frames,
        });
    }
    Ok(EvalReport {
        model_id: model_id.into(),
        param_count,
        border_crop,
        sequences,
    })
}

/// Run the model over every clip from a zero state.
pub fn evaluate(model: &Rsdn<f32>, dataset: &[SequenceSample], border_crop: usize) -> Result<EvalReport> {
    let scale = model.config().scale;
    evaluate_with(dataset, border_crop, model.config().label(), model.params().scalar_count(), |s| {
        if s.scale() != scale {
            return Err(Error::Usage(format!("{} is a x{} clip but the model is x{scale}", s.name(), s.scale())));
        }
        Ok(model.forward_sequence(s.lr())?.into_iter().map(|o| o.image).collect())
    })
}

/// Plain bicubic upsampling of the LR frames, the usual reference point.
pub fn evaluate_bicubic(dataset: &[SequenceSample], border_crop: usize) -> Result<EvalReport> {
    evaluate_with(dataset, border_crop, "bicubic", 0, |s| {
        s.lr().iter().map(|f| bicubic_resize(f, Scale::up(s.scale()), false)).collect()
    })
}
