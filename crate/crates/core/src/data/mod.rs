//! Video clips on disk and in memory, the blur-and-decimate degradation,
//! and synthetic sequence generation.

mod degrade;
mod io;
mod split;
mod synth;

pub use degrade::{degrade, degrade_frame, Decimation, DegradeConfig};
pub use io::{
    load_dataset, load_frames, load_sequence, read_png, save_frames, save_sequence, write_manifest, write_png, MANIFEST,
};
pub use split::split;
pub use synth::{synth_dataset, synth_frames, synth_sequence, SynthKind, SynthSpec};

use crate::error::{Error, Result};
use crate::tensor::{Shape4, Tensor4};

/// A clip with matching HR and LR frames, each `(1, 3, h, w)` in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceSample {
    name: String,
    hr: Vec<Tensor4<f32>>,
    lr: Vec<Tensor4<f32>>,
    scale: usize,
}

impl SequenceSample {
    /// Checks equal frame counts, consistent frame shapes and `lr = hr / scale`.
    pub fn new(name: impl Into<String>, hr: Vec<Tensor4<f32>>, lr: Vec<Tensor4<f32>>, scale: usize) -> Result<Self> {
        let name = name.into();
        if hr.is_empty() || hr.len() != lr.len() {
            return Err(Error::Argument(format!(
                "sequence {name}: {} HR frames vs {} LR frames",
                hr.len(),
                lr.len()
            )));
        }
        let hs = hr[0].shape();
        if hs.n != 1 || hs.c != 3 || scale == 0 || hs.h % scale != 0 || hs.w % scale != 0 {
            return Err(Error::dim("sequence HR frame", hs, format!("(1, 3, h, w) divisible by {scale}")));
        }
        let ls = Shape4::new(1, 3, hs.h / scale, hs.w / scale);
        for (t, (h, l)) in hr.iter().zip(&lr).enumerate() {
            if h.shape() != hs {
                return Err(Error::dim("sequence HR frame", h.shape(), format!("{hs} (frame {t})")));
            }
            if l.shape() != ls {
                return Err(Error::dim("sequence LR frame", l.shape(), format!("{ls} (frame {t})")));
            }
        }
        Ok(Self { name, hr, lr, scale })
    }

    /// Degrade `hr` to build the LR side.
    pub fn from_hr(name: impl Into<String>, hr: Vec<Tensor4<f32>>, degradation: &DegradeConfig) -> Result<Self> {
        let lr = degrade(&hr, degradation)?;
        Self::new(name, hr, lr, degradation.scale)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn hr(&self) -> &[Tensor4<f32>] {
        &self.hr
    }

    pub fn lr(&self) -> &[Tensor4<f32>] {
        &self.lr
    }

    pub fn scale(&self) -> usize {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.hr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hr.is_empty()
    }

    /// `(h, w)` of the LR frames.
    pub fn lr_hw(&self) -> (usize, usize) {
        let s = self.lr[0].shape();
        (s.h, s.w)
    }
}
