//! Image quality metrics, temporal profiles, hidden-state dumps and
//! whole-dataset evaluation.

mod eval;
mod quality;
mod visual;

pub use eval::{evaluate, evaluate_bicubic, evaluate_with, EvalReport, FrameMetrics, SequenceMetrics};
pub use quality::{psnr, rgb_to_y, ssim, ssim_window, SSIM_SIGMA, SSIM_WINDOW};
pub use visual::{dump_hidden_channels, temporal_profile};
