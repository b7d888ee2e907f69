//! Structure/detail split: structure is a bicubic down-then-up round trip
//! by the scale factor, detail is the residual.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ops::{ResizePlan, Scale};
use crate::tensor::{Element, Tensor4};

/// The `(down, up)` resampling pair for frames of size `h x w`.
pub fn structure_plans(h: usize, w: usize, r: usize) -> Result<(Arc<ResizePlan>, Arc<ResizePlan>)> {
    if r == 0 || h % r != 0 || w % r != 0 {
        return Err(Error::dim("decompose", format!("{h}x{w} frame"), format!("dims divisible by {r}")));
    }
    let down = ResizePlan::new(h, w, Scale::down(r), true)?;
    let up = ResizePlan::to_size(h / r, w / r, h, w, true)?;
    Ok((Arc::new(down), Arc::new(up)))
}

/// Low-frequency component of `frame`.
pub fn structure<T: Element>(frame: &Tensor4<T>, r: usize) -> Result<Tensor4<T>> {
    let s = frame.shape();
    let (down, up) = structure_plans(s.h, s.w, r)?;
    up.apply(&down.apply(frame)?)
}

/// Split `frame` into `(structure, detail)` with `structure + detail == frame`.
///
/// The detail is formed first and the structure re-derived from it. The sum
/// then reproduces the frame bit-exactly whenever the floating-point format
/// allows it, which covers frame values on the 2^-24 lattice in `[0, 1]`
/// (uniform `f32` samples, for one). A dark pixel whose structure is more
/// than twice its value and which carries bits below that lattice can be
/// off by one ulp.
pub fn decompose<T: Element>(frame: &Tensor4<T>, r: usize) -> Result<(Tensor4<T>, Tensor4<T>)> {
    let approx = structure(frame, r)?;
    let detail = frame.zip_map(&approx, "decompose", |x, s| x - s)?;
    let structure = frame.zip_map(&detail, "decompose", |x, d| x - d)?;
    Ok((structure, detail))
}
