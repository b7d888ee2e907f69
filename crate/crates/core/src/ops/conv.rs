//! 2-D convolution (cross-correlation, as in every deep-learning framework)
//! lowered to im2col + GEMM. [`conv2d_direct`] is the plain nested-loop
//! version, kept as a fallback and as the reference the fast path is
//! checked against.

use crate::error::{Error, Result};
use crate::tensor::gemm::{matmul, MatRef};
use crate::tensor::{Element, Shape4, Tensor4};

use super::reflect_index;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PaddingMode {
    #[default]
    Zeros,
    Reflect,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvGeom {
    pub stride: usize,
    pub padding: usize,
    pub mode: PaddingMode,
}

impl ConvGeom {
    /// Stride 1, zero padding that keeps the spatial size for odd kernels.
    pub fn same(kernel: usize) -> Self {
        Self {
            stride: 1,
            padding: kernel / 2,
            mode: PaddingMode::Zeros,
        }
    }

    fn out_dim(&self, input: usize, kernel: usize) -> Option<usize> {
        let padded = input + 2 * self.padding;
        if self.stride == 0 || padded < kernel {
            return None;
        }
        Some((padded - kernel) / self.stride + 1)
    }
}

#[derive(Clone, Debug)]
pub struct ConvParams<T> {
    /// `(out_c, in_c, kh, kw)`.
    pub weight: Tensor4<T>,
    /// One entry per output channel.
    pub bias: Vec<T>,
    pub geom: ConvGeom,
}

pub fn conv2d<T: Element>(input: &Tensor4<T>, params: &ConvParams<T>) -> Result<Tensor4<T>> {
    conv2d_forward(input, &params.weight, Some(&params.bias), params.geom)
}

/// Output shape of a convolution, validating operand shapes.
pub fn conv_output_shape(input: Shape4, weight: Shape4, bias_len: Option<usize>, geom: ConvGeom) -> Result<Shape4> {
    if input.c != weight.c {
        return Err(Error::dim("conv2d", input, weight));
    }
    if let Some(len) = bias_len {
        if len != weight.n {
            return Err(Error::dim("conv2d bias", weight, format!("bias of length {len}")));
        }
    }
    if geom.mode == PaddingMode::Reflect && (geom.padding >= input.h || geom.padding >= input.w) {
        return Err(Error::Argument(format!(
            "reflect padding {} needs spatial dims larger than the pad, got {input}",
            geom.padding
        )));
    }
    let oh = geom.out_dim(input.h, weight.h);
    let ow = geom.out_dim(input.w, weight.w);
    match (oh, ow) {
        (Some(oh), Some(ow)) => Ok(Shape4::new(input.n, weight.n, oh, ow)),
        _ => Err(Error::dim("conv2d", input, weight)),
    }
}

/// Source index along one axis for output position `o` and kernel tap `k`,
/// or `None` when it falls in zero padding.
#[inline]
fn source(o: usize, k: usize, size: usize, geom: ConvGeom) -> Option<usize> {
    let i = (o * geom.stride + k) as isize - geom.padding as isize;
    if i >= 0 && (i as usize) < size {
        Some(i as usize)
    } else {
        match geom.mode {
            PaddingMode::Zeros => None,
            PaddingMode::Reflect => Some(reflect_index(i, size)),
        }
    }
}

/// Unfold one batch item `(c, h, w)` into a `(c*kh*kw, oh*ow)` matrix.
fn im2col<T: Element>(x: &[T], in_s: Shape4, kh: usize, kw: usize, out_s: Shape4, geom: ConvGeom, cols: &mut [T]) {
    let (oh, ow) = (out_s.h, out_s.w);
    let l = oh * ow;
    for ci in 0..in_s.c {
        let plane = &x[ci * in_s.plane()..(ci + 1) * in_s.plane()];
        for ki in 0..kh {
            for kj in 0..kw {
                let row = (ci * kh + ki) * kw + kj;
                let dst = &mut cols[row * l..(row + 1) * l];
                for y in 0..oh {
                    let seg = &mut dst[y * ow..(y + 1) * ow];
                    match source(y, ki, in_s.h, geom) {
                        None => seg.iter_mut().for_each(|v| *v = T::zero()),
                        Some(iy) => {
                            let src = &plane[iy * in_s.w..(iy + 1) * in_s.w];
                            for (xo, v) in seg.iter_mut().enumerate() {
                                *v = match source(xo, kj, in_s.w, geom) {
                                    Some(ix) => src[ix],
                                    None => T::zero(),
                                };
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatter-add columns back onto the input grid.
fn col2im<T: Element>(cols: &[T], in_s: Shape4, kh: usize, kw: usize, out_s: Shape4, geom: ConvGeom, dx: &mut [T]) {
    let (oh, ow) = (out_s.h, out_s.w);
    let l = oh * ow;
    for ci in 0..in_s.c {
        let plane = &mut dx[ci * in_s.plane()..(ci + 1) * in_s.plane()];
        for ki in 0..kh {
            for kj in 0..kw {
                let row = (ci * kh + ki) * kw + kj;
                let src = &cols[row * l..(row + 1) * l];
                for y in 0..oh {
                    let Some(iy) = source(y, ki, in_s.h, geom) else {
                        continue;
                    };
                    for xo in 0..ow {
                        if let Some(ix) = source(xo, kj, in_s.w, geom) {
                            plane[iy * in_s.w + ix] += src[y * ow + xo];
                        }
                    }
                }
            }
        }
    }
}

pub fn conv2d_forward<T: Element>(
    input: &Tensor4<T>,
    weight: &Tensor4<T>,
    bias: Option<&[T]>,
    geom: ConvGeom,
) -> Result<Tensor4<T>> {
    let (in_s, w_s) = (input.shape(), weight.shape());
    let out_s = conv_output_shape(in_s, w_s, bias.map(<[T]>::len), geom)?;
    let k = w_s.c * w_s.h * w_s.w;
    let l = out_s.plane();
    let mut out = Tensor4::zeros(out_s);
    let mut cols = vec![T::zero(); k * l];
    let wmat = MatRef::row_major(weight.data(), w_s.n, k);
    for b in 0..in_s.n {
        let x = &input.data()[b * in_s.item()..(b + 1) * in_s.item()];
        im2col(x, in_s, w_s.h, w_s.w, out_s, geom, &mut cols);
        let y = &mut out.data_mut()[b * out_s.item()..(b + 1) * out_s.item()];
        matmul(wmat, MatRef::row_major(&cols, k, l), y, false);
        if let Some(bias) = bias {
            for (o, &bv) in bias.iter().enumerate() {
                y[o * l..(o + 1) * l].iter_mut().for_each(|v| *v += bv);
            }
        }
    }
    Ok(out)
}

pub struct ConvGrads<T> {
    pub input: Option<Tensor4<T>>,
    pub weight: Tensor4<T>,
    pub bias: Vec<T>,
}

/// Gradients of a convolution given the upstream gradient `grad_out`.
/// The input gradient is only formed when `need_input` is set.
pub fn conv2d_backward<T: Element>(
    input: &Tensor4<T>,
    weight: &Tensor4<T>,
    grad_out: &Tensor4<T>,
    geom: ConvGeom,
    need_input: bool,
) -> Result<ConvGrads<T>> {
    let (in_s, w_s) = (input.shape(), weight.shape());
    let out_s = conv_output_shape(in_s, w_s, None, geom)?;
    if grad_out.shape() != out_s {
        return Err(Error::dim("conv2d_backward", grad_out.shape(), out_s));
    }
    let k = w_s.c * w_s.h * w_s.w;
    let l = out_s.plane();
    let mut gw = Tensor4::zeros(w_s);
    let mut gb = vec![T::zero(); w_s.n];
    let mut gx = need_input.then(|| Tensor4::zeros(in_s));
    let mut cols = vec![T::zero(); k * l];
    let mut dcols = if need_input { vec![T::zero(); k * l] } else { Vec::new() };
    let wmat = MatRef::row_major(weight.data(), w_s.n, k);
    for b in 0..in_s.n {
        let x = &input.data()[b * in_s.item()..(b + 1) * in_s.item()];
        let g = &grad_out.data()[b * out_s.item()..(b + 1) * out_s.item()];
        im2col(x, in_s, w_s.h, w_s.w, out_s, geom, &mut cols);
        let gmat = MatRef::row_major(g, w_s.n, l);
        matmul(gmat, MatRef::row_major(&cols, k, l).t(), gw.data_mut(), true);
        for (o, acc) in gb.iter_mut().enumerate() {
            *acc += g[o * l..(o + 1) * l].iter().copied().sum::<T>();
        }
        if let Some(gx) = gx.as_mut() {
            matmul(wmat.t(), gmat, &mut dcols, false);
            let dx = &mut gx.data_mut()[b * in_s.item()..(b + 1) * in_s.item()];
            col2im(&dcols, in_s, w_s.h, w_s.w, out_s, geom, dx);
        }
    }
    Ok(ConvGrads {
        input: gx,
        weight: gw,
        bias: gb,
    })
}

/// Nested-loop convolution accumulating in `f64`.
pub fn conv2d_direct<T: Element>(input: &Tensor4<T>, params: &ConvParams<T>) -> Result<Tensor4<T>> {
    let (in_s, w_s) = (input.shape(), params.weight.shape());
    let geom = params.geom;
    let out_s = conv_output_shape(in_s, w_s, Some(params.bias.len()), geom)?;
    let mut out = Tensor4::zeros(out_s);
    let data = out.data_mut();
    let mut idx = 0;
    for b in 0..out_s.n {
        for o in 0..out_s.c {
            for y in 0..out_s.h {
                for x in 0..out_s.w {
                    let mut acc = params.bias[o].as_f64();
                    for ci in 0..w_s.c {
                        for ki in 0..w_s.h {
                            let Some(iy) = source(y, ki, in_s.h, geom) else { continue };
                            for kj in 0..w_s.w {
                                let Some(ix) = source(x, kj, in_s.w, geom) else { continue };
                                acc += params.weight.at(o, ci, ki, kj).as_f64() * input.at(b, ci, iy, ix).as_f64();
                            }
                        }
                    }
                    data[idx] = T::from_f64(acc);
                    idx += 1;
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn params<T: Element>(weight: Tensor4<T>, geom: ConvGeom) -> ConvParams<T> {
        let bias = vec![T::zero(); weight.shape().n];
        ConvParams { weight, bias, geom }
    }

    #[test]
    fn sum_of_ones() {
        let x = Tensor4::<f32>::ones([1, 1, 3, 3]);
        let p = params(Tensor4::ones([1, 1, 3, 3]), ConvGeom { stride: 1, padding: 0, mode: PaddingMode::Zeros });
        let y = conv2d(&x, &p).unwrap();
        assert_eq!(y.shape(), Shape4::new(1, 1, 1, 1));
        assert_eq!(y.item().unwrap(), 9.0);
    }

    #[test]
    fn identity_kernel_preserves_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Tensor4::<f32>::uniform([2, 1, 5, 6], -1.0, 1.0, &mut rng);
        let w = Tensor4::from_fn([1, 1, 3, 3], |[_, _, i, j]| if i == 1 && j == 1 { 1.0 } else { 0.0 });
        let y = conv2d(&x, &params(w, ConvGeom::same(3))).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn reflect_and_stride_match_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = Tensor4::<f64>::uniform([2, 3, 7, 9], -1.0, 1.0, &mut rng);
        let w = Tensor4::uniform([4, 3, 3, 5], -1.0, 1.0, &mut rng);
        let geom = ConvGeom { stride: 2, padding: 2, mode: PaddingMode::Reflect };
        let mut p = params(w, geom);
        p.bias = vec![0.1, -0.2, 0.3, 0.0];
        let fast = conv2d(&x, &p).unwrap();
        let slow = conv2d_direct(&x, &p).unwrap();
        assert!(fast.max_abs_diff(&slow).unwrap() < 1e-12);
    }

    #[test]
    fn channel_mismatch_reports_both_shapes() {
        let x = Tensor4::<f32>::zeros([1, 2, 4, 4]);
        let p = params(Tensor4::zeros([1, 3, 3, 3]), ConvGeom::same(3));
        let err = conv2d(&x, &p).unwrap_err().to_string();
        assert!(err.contains("(1, 2, 4, 4)") && err.contains("(1, 3, 3, 3)"), "{err}");
    }

    #[test]
    fn backward_is_adjoint_of_forward() {
        // <conv(x), g> == <x, conv^T(g)> for the input path.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = Tensor4::<f64>::uniform([1, 2, 5, 5], -1.0, 1.0, &mut rng);
        let w = Tensor4::uniform([3, 2, 3, 3], -1.0, 1.0, &mut rng);
        let geom = ConvGeom { stride: 1, padding: 1, mode: PaddingMode::Reflect };
        let y = conv2d_forward(&x, &w, None, geom).unwrap();
        let g = Tensor4::uniform(y.shape(), -1.0, 1.0, &mut rng);
        let grads = conv2d_backward(&x, &w, &g, geom, true).unwrap();
        let lhs: f64 = y.data().iter().zip(g.data()).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.data().iter().zip(grads.input.unwrap().data()).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10);
    }
}
