use crate::error::{Error, Result};
use crate::tensor::{Element, Tensor4};

use super::reflect_index;

/// Normalised 1-D Gaussian taps with radius `ceil(4 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Argument(format!("gaussian sigma must be positive, got {sigma}")));
    }
    let radius = (4.0 * sigma).ceil() as isize;
    let raw: Vec<f64> = (-radius..=radius)
        .map(|x| (-(x * x) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|v| v / total).collect())
}

fn blur_line<T: Element>(src: &[T], stride: usize, len: usize, taps: &[f64], dst: &mut [T], dst_stride: usize) {
    let r = (taps.len() / 2) as isize;
    for i in 0..len {
        let centre = src[i * stride];
        let mut acc = T::zero();
        for (t, &w) in taps.iter().enumerate() {
            let j = reflect_index(i as isize + t as isize - r, len);
            acc += T::from_f64(w) * (src[j * stride] - centre);
        }
        dst[i * dst_stride] = centre + acc;
    }
}

/// Separable Gaussian blur per channel with reflect padding.
pub fn gaussian_blur<T: Element>(input: &Tensor4<T>, sigma: f64) -> Result<Tensor4<T>> {
    let taps = gaussian_kernel(sigma)?;
    let s = input.shape();
    let planes = s.n * s.c;
    let mut tmp = vec![T::zero(); input.numel()];
    for p in 0..planes {
        for y in 0..s.h {
            let row = (p * s.h + y) * s.w;
            blur_line(&input.data()[row..row + s.w], 1, s.w, &taps, &mut tmp[row..row + s.w], 1);
        }
    }
    let mut out = Tensor4::zeros(s);
    for p in 0..planes {
        let base = p * s.plane();
        for x in 0..s.w {
            let src = &tmp[base + x..base + s.plane()];
            let dst = &mut out.data_mut()[base + x..base + s.plane()];
            blur_line(src, s.w, s.h, &taps, dst, s.w);
        }
    }
    Ok(out)
}

/// `gaussian_blur` sampled at every `r`-th row and column from the top-left,
/// without computing the discarded pixels. Bit-identical to blurring first.
pub fn gaussian_blur_strided<T: Element>(input: &Tensor4<T>, sigma: f64, r: usize) -> Result<Tensor4<T>> {
    let taps = gaussian_kernel(sigma)?;
    let s = input.shape();
    if r == 0 {
        return Err(Error::Argument("stride must be positive".into()));
    }
    let (oh, ow) = (s.h.div_ceil(r), s.w.div_ceil(r));
    let rad = (taps.len() / 2) as isize;
    let weights: Vec<T> = taps.iter().map(|&w| T::from_f64(w)).collect();
    let tap = |line: &dyn Fn(usize) -> T, i: usize, len: usize| {
        let centre = line(i);
        let mut acc = T::zero();
        for (t, &w) in weights.iter().enumerate() {
            acc += w * (line(reflect_index(i as isize + t as isize - rad, len)) - centre);
        }
        centre + acc
    };
    let mut out = Tensor4::zeros([s.n, s.c, oh, ow]);
    let mut cols = vec![T::zero(); s.h * ow];
    for p in 0..s.n * s.c {
        let plane = &input.data()[p * s.plane()..(p + 1) * s.plane()];
        for y in 0..s.h {
            let row = &plane[y * s.w..(y + 1) * s.w];
            for j in 0..ow {
                cols[y * ow + j] = tap(&|x| row[x], j * r, s.w);
            }
        }
        let dst = &mut out.data_mut()[p * oh * ow..(p + 1) * oh * ow];
        for j in 0..ow {
            for i in 0..oh {
                dst[i * ow + j] = tap(&|y| cols[y * ow + j], i * r, s.h);
            }
        }
    }
    Ok(out)
}
