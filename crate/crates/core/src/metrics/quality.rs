use crate::error::{Error, Result};
use crate::tensor::{compensated_sum, Element, Tensor4};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;

/// BT.601 luma of `(n, 3, h, w)` RGB in `[0, 1]`, giving `(n, 1, h, w)` in
/// `[16/255, 235/255]`.
pub fn rgb_to_y<T: Element>(img: &Tensor4<T>) -> Result<Tensor4<T>> {
    let s = img.shape();
    if s.c != 3 {
        return Err(Error::dim("rgb_to_y", s, "(n, 3, h, w)"));
    }
    Ok(Tensor4::from_fn([s.n, 1, s.h, s.w], |[n, _, i, j]| {
        let (r, g, b) = (img.at(n, 0, i, j).as_f64(), img.at(n, 1, i, j).as_f64(), img.at(n, 2, i, j).as_f64());
        T::from_f64((65.481 * r + 128.553 * g + 24.966 * b + 16.0) / 255.0)
    }))
}

/// Peak signal-to-noise ratio in dB; `+inf` for identical inputs.
pub fn psnr<T: Element>(a: &Tensor4<T>, b: &Tensor4<T>, peak: f64) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::dim("psnr", a.shape(), b.shape()));
    }
    if a.numel() == 0 {
        return Err(Error::Argument("psnr of empty tensors".into()));
    }
    let sq = a.data().iter().zip(b.data()).map(|(x, y)| {
        let d = x.as_f64() - y.as_f64();
        d * d
    });
    let mse = compensated_sum(sq) / a.numel() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(20.0 * (peak / mse.sqrt()).log10())
}

/// Normalised 1-D Gaussian weights of odd length `size`.
pub fn ssim_window(size: usize, sigma: f64) -> Vec<f64> {
    let r = (size / 2) as f64;
    let w: Vec<f64> = (0..size)
        .map(|i| (-(i as f64 - r).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

/// Valid-mode separable filtering of a single `h x w` plane.
fn filter_valid(plane: &[f64], h: usize, w: usize, k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let (oh, ow) = (h + 1 - n, w + 1 - n);
    let mut rows = vec![0.0; h * ow];
    for i in 0..h {
        for j in 0..ow {
            rows[i * ow + j] = k.iter().enumerate().map(|(t, kv)| kv * plane[i * w + j + t]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for i in 0..oh {
        for j in 0..ow {
            out[i * ow + j] = k.iter().enumerate().map(|(t, kv)| kv * rows[(i + t) * ow + j]).sum();
        }
    }
    out
}

fn ssim_plane(x: &[f64], y: &[f64], h: usize, w: usize, k: &[f64]) -> f64 {
    let c1 = (K1 * 1.0f64).powi(2);
    let c2 = (K2 * 1.0f64).powi(2);
    let prod = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).collect::<Vec<_>>();
    let mx = filter_valid(x, h, w, k);
    let my = filter_valid(y, h, w, k);
    let sxx = filter_valid(&prod(x, x), h, w, k);
    let syy = filter_valid(&prod(y, y), h, w, k);
    let sxy = filter_valid(&prod(x, y), h, w, k);
    let map = (0..mx.len()).map(|i| {
        let (ux, uy) = (mx[i], my[i]);
        let vx = sxx[i] - ux * ux;
        let vy = syy[i] - uy * uy;
        let cov = sxy[i] - ux * uy;
        ((2.0 * (ux * uy) + c1) * (2.0 * cov + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2))
    });
    compensated_sum(map) / mx.len() as f64
}

/// Mean SSIM over valid Gaussian windows (11x11, sigma 1.5) and all
/// `(n, c)` planes. Images smaller than the window use the largest odd
/// window that fits.
pub fn ssim<T: Element>(a: &Tensor4<T>, b: &Tensor4<T>) -> Result<f64> {
    let s = a.shape();
    if s != b.shape() {
        return Err(Error::dim("ssim", s, b.shape()));
    }
    if s.numel() == 0 {
        return Err(Error::Argument("ssim of empty tensors".into()));
    }
    let fit = s.h.min(s.w);
    let size = SSIM_WINDOW.min(if fit % 2 == 1 { fit } else { fit - 1 });
    let k = ssim_window(size, SSIM_SIGMA);
    let mut total = 0.0;
    for n in 0..s.n {
        for c in 0..s.c {
            let x: Vec<f64> = a.plane(n, c).iter().map(|v| v.as_f64()).collect();
            let y: Vec<f64> = b.plane(n, c).iter().map(|v| v.as_f64()).collect();
            total += ssim_plane(&x, &y, s.h, s.w, &k);
        }
    }
    Ok(total / (s.n * s.c) as f64)
}
