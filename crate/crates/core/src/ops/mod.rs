//! Numeric primitives over [`Tensor4`](crate::tensor::Tensor4).
//!
//! Every function here is pure. Operations that take part in training also
//! expose the matching backward kernel, which the tape in
//! [`autograd`](crate::autograd) dispatches to.

pub mod blur;
pub mod conv;
pub mod elementwise;
pub mod resize;
pub mod shuffle;
pub mod svf;

pub use blur::{gaussian_blur, gaussian_blur_strided, gaussian_kernel};
pub use conv::{conv2d, conv2d_direct, ConvGeom, ConvParams, PaddingMode};
pub use elementwise::{add, concat_channels, crop, flip_h, flip_v, mul, relu, rot90, sigmoid, sub};
pub use resize::{bicubic_resize, cubic_kernel, ResizePlan, Scale};
pub use shuffle::{pixel_shuffle, pixel_unshuffle};
pub use svf::{spatially_variant_filter, spatially_variant_filter_direct};

/// Mirror an index into `0..n` without repeating the edge sample
/// (`-1 -> 1`, `n -> n - 2`).
#[inline]
pub(crate) fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut m = i.rem_euclid(period);
    if m >= n as isize {
        m = period - m;
    }
    m as usize
}

#[inline]
pub(crate) fn clamp_index(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}
