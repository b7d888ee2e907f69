//! Separable bicubic resampling.
//!
//! Keys cubic kernel with `a = -0.5`, half-pixel centres, coordinate
//! clamping at the borders. On downscale with antialiasing the kernel is
//! stretched by the inverse scale (area-style prefilter). Weights are
//! normalised per output sample and applied relative to the nearest source
//! sample, so constant inputs come back bit-identical.

use crate::error::{Error, Result};
use crate::tensor::{Element, Shape4, Tensor4};

use super::clamp_index;

pub const CUBIC_A: f64 = -0.5;

/// Keys cubic convolution kernel.
pub fn cubic_kernel(x: f64) -> f64 {
    let a = CUBIC_A;
    let x = x.abs();
    if x <= 1.0 {
        ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a
    } else {
        0.0
    }
}

/// Rational scale factor `num / den`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Scale {
    pub num: usize,
    pub den: usize,
}

impl Scale {
    pub fn new(num: usize, den: usize) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::Argument(format!("scale {num}/{den} must be positive")));
        }
        Ok(Self { num, den })
    }

    pub fn up(r: usize) -> Self {
        Self { num: r.max(1), den: 1 }
    }

    pub fn down(r: usize) -> Self {
        Self { num: 1, den: r.max(1) }
    }

    /// `round(len * num / den)`, halves rounding up.
    pub fn apply(&self, len: usize) -> usize {
        (2 * len * self.num + self.den) / (2 * self.den)
    }

    pub fn is_downscale(&self) -> bool {
        self.num < self.den
    }
}

#[derive(Clone, Debug)]
struct AxisPlan {
    in_len: usize,
    out_len: usize,
    /// `taps[starts[o]..starts[o + 1]]` feed output `o`.
    starts: Vec<usize>,
    taps: Vec<(usize, f64)>,
    anchors: Vec<usize>,
    /// `1 - sum(weights)` for each output, credited to the anchor sample
    /// in the adjoint.
    residual: Vec<f64>,
}

impl AxisPlan {
    fn new(in_len: usize, out_len: usize, antialias: bool) -> Self {
        let ratio = in_len as f64 / out_len as f64;
        let stretch = if antialias && ratio > 1.0 { ratio } else { 1.0 };
        let support = 2.0 * stretch;
        let mut starts = Vec::with_capacity(out_len + 1);
        let mut taps = Vec::new();
        let mut anchors = Vec::with_capacity(out_len);
        let mut residual = Vec::with_capacity(out_len);
        for o in 0..out_len {
            let centre = (o as f64 + 0.5) * ratio;
            let lo = (centre - support - 0.5).floor() as isize;
            let hi = (centre + support - 0.5).ceil() as isize;
            let raw: Vec<(usize, f64)> = (lo..=hi)
                .map(|j| (clamp_index(j, in_len), cubic_kernel((j as f64 + 0.5 - centre) / stretch)))
                .filter(|&(_, w)| w != 0.0)
                .collect();
            let total: f64 = raw.iter().map(|&(_, w)| w).sum();
            starts.push(taps.len());
            let mut sum = 0.0;
            for (src, w) in raw {
                let w = w / total;
                sum += w;
                taps.push((src, w));
            }
            anchors.push(clamp_index(centre.floor() as isize, in_len));
            residual.push(1.0 - sum);
        }
        starts.push(taps.len());
        Self {
            in_len,
            out_len,
            starts,
            taps,
            anchors,
            residual,
        }
    }

    /// Resample one strided line.
    #[inline]
    fn forward_line<T: Element>(&self, src: &[T], src_stride: usize, dst: &mut [T], dst_stride: usize) {
        for o in 0..self.out_len {
            let anchor = src[self.anchors[o] * src_stride];
            let mut acc = T::zero();
            for &(j, w) in &self.taps[self.starts[o]..self.starts[o + 1]] {
                acc += T::from_f64(w) * (src[j * src_stride] - anchor);
            }
            dst[o * dst_stride] = anchor + acc;
        }
    }

    #[inline]
    fn adjoint_line<T: Element>(&self, g: &[T], g_stride: usize, dst: &mut [T], dst_stride: usize) {
        for o in 0..self.out_len {
            let go = g[o * g_stride];
            for &(j, w) in &self.taps[self.starts[o]..self.starts[o + 1]] {
                dst[j * dst_stride] += T::from_f64(w) * go;
            }
            dst[self.anchors[o] * dst_stride] += T::from_f64(self.residual[o]) * go;
        }
    }
}

/// Precomputed separable resampling weights for one input geometry.
#[derive(Clone, Debug)]
pub struct ResizePlan {
    rows: AxisPlan,
    cols: AxisPlan,
}

impl ResizePlan {
    pub fn new(in_h: usize, in_w: usize, scale: Scale, antialias: bool) -> Result<Self> {
        let (out_h, out_w) = (scale.apply(in_h), scale.apply(in_w));
        Self::to_size(in_h, in_w, out_h, out_w, antialias)
    }

    pub fn to_size(in_h: usize, in_w: usize, out_h: usize, out_w: usize, antialias: bool) -> Result<Self> {
        if in_h == 0 || in_w == 0 || out_h == 0 || out_w == 0 {
            return Err(Error::Argument(format!(
                "resize from {in_h}x{in_w} to {out_h}x{out_w} has an empty side"
            )));
        }
        Ok(Self {
            rows: AxisPlan::new(in_h, out_h, antialias),
            cols: AxisPlan::new(in_w, out_w, antialias),
        })
    }

    pub fn input_hw(&self) -> (usize, usize) {
        (self.rows.in_len, self.cols.in_len)
    }

    pub fn output_hw(&self) -> (usize, usize) {
        (self.rows.out_len, self.cols.out_len)
    }

    fn check(&self, s: Shape4, hw: (usize, usize), op: &'static str) -> Result<()> {
        if (s.h, s.w) != hw {
            return Err(Error::dim(op, s, format!("plan for {}x{}", hw.0, hw.1)));
        }
        Ok(())
    }

    pub fn apply<T: Element>(&self, x: &Tensor4<T>) -> Result<Tensor4<T>> {
        let s = x.shape();
        self.check(s, self.input_hw(), "bicubic_resize")?;
        let (oh, ow) = self.output_hw();
        let planes = s.n * s.c;
        // width pass
        let mut tmp = vec![T::zero(); planes * s.h * ow];
        for p in 0..planes {
            for y in 0..s.h {
                let src = &x.data()[(p * s.h + y) * s.w..(p * s.h + y + 1) * s.w];
                let dst = &mut tmp[(p * s.h + y) * ow..(p * s.h + y + 1) * ow];
                self.cols.forward_line(src, 1, dst, 1);
            }
        }
        // height pass
        let mut out = Tensor4::zeros(s.with_hw(oh, ow));
        for p in 0..planes {
            let src = &tmp[p * s.h * ow..(p + 1) * s.h * ow];
            let dst = &mut out.data_mut()[p * oh * ow..(p + 1) * oh * ow];
            for x in 0..ow {
                self.rows.forward_line(&src[x..], ow, &mut dst[x..], ow);
            }
        }
        Ok(out)
    }

    /// Adjoint of [`apply`](Self::apply) (its exact transpose).
    pub fn apply_transpose<T: Element>(&self, g: &Tensor4<T>) -> Result<Tensor4<T>> {
        let s = g.shape();
        self.check(s, self.output_hw(), "bicubic_resize_backward")?;
        let (ih, iw) = self.input_hw();
        let planes = s.n * s.c;
        let mut tmp = vec![T::zero(); planes * ih * s.w];
        for p in 0..planes {
            let src = &g.data()[p * s.h * s.w..(p + 1) * s.h * s.w];
            let dst = &mut tmp[p * ih * s.w..(p + 1) * ih * s.w];
            for x in 0..s.w {
                self.rows.adjoint_line(&src[x..], s.w, &mut dst[x..], s.w);
            }
        }
        let mut out = Tensor4::zeros(s.with_hw(ih, iw));
        for p in 0..planes {
            for y in 0..ih {
                let src = &tmp[(p * ih + y) * s.w..(p * ih + y + 1) * s.w];
                let dst = &mut out.data_mut()[(p * ih + y) * iw..(p * ih + y + 1) * iw];
                self.cols.adjoint_line(src, 1, dst, 1);
            }
        }
        Ok(out)
    }
}

pub fn bicubic_resize<T: Element>(input: &Tensor4<T>, scale: Scale, antialias: bool) -> Result<Tensor4<T>> {
    let s = input.shape();
    ResizePlan::new(s.h, s.w, scale, antialias)?.apply(input)
}
