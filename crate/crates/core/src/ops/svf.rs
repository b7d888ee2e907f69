//! Spatially-variant filtering: every output position owns a `k x k` filter,
//! shared across all channels of the filtered map. Samples outside the map
//! read as zero.

use crate::error::{Error, Result};
use crate::tensor::{Element, Tensor4};

fn check<T: Element>(hidden: &Tensor4<T>, filters: &Tensor4<T>, k: usize) -> Result<()> {
    if k % 2 == 0 {
        return Err(Error::Argument(format!("filter size must be odd, got {k}")));
    }
    let (hs, fs) = (hidden.shape(), filters.shape());
    if fs.c != k * k || fs.n != hs.n || fs.h != hs.h || fs.w != hs.w {
        return Err(Error::dim("spatially_variant_filter", hs, fs));
    }
    Ok(())
}

/// `out(n, c, i, j) = sum_{u,v} filters(n, (u+r)*k + (v+r), i, j) * hidden(n, c, i+u, j+v)`
/// with `r = k / 2` and `u, v` in `-r..=r`.
pub fn spatially_variant_filter<T: Element>(hidden: &Tensor4<T>, filters: &Tensor4<T>, k: usize) -> Result<Tensor4<T>> {
    check(hidden, filters, k)?;
    let s = hidden.shape();
    let r = (k / 2) as isize;
    let (h, w) = (s.h as isize, s.w as isize);
    let mut out = Tensor4::zeros(s);
    let od = out.data_mut();
    for n in 0..s.n {
        for tap in 0..k * k {
            let (du, dv) = ((tap / k) as isize - r, (tap % k) as isize - r);
            let f = filters.plane(n, tap);
            for c in 0..s.c {
                let src = hidden.plane(n, c);
                let dst = &mut od[(n * s.c + c) * s.plane()..(n * s.c + c + 1) * s.plane()];
                for i in 0..h {
                    let si = i + du;
                    if si < 0 || si >= h {
                        continue;
                    }
                    let (j0, j1) = ((-dv).max(0), (w - dv).min(w));
                    for j in j0..j1 {
                        let p = (i * w + j) as usize;
                        dst[p] += f[p] * src[(si * w + j + dv) as usize];
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Gradients with respect to `(hidden, filters)`.
pub fn spatially_variant_filter_backward<T: Element>(
    hidden: &Tensor4<T>,
    filters: &Tensor4<T>,
    k: usize,
    grad_out: &Tensor4<T>,
) -> Result<(Tensor4<T>, Tensor4<T>)> {
    check(hidden, filters, k)?;
    if grad_out.shape() != hidden.shape() {
        return Err(Error::dim("spatially_variant_filter_backward", grad_out.shape(), hidden.shape()));
    }
    let s = hidden.shape();
    let r = (k / 2) as isize;
    let (h, w) = (s.h as isize, s.w as isize);
    let mut gh = Tensor4::zeros(s);
    let mut gf = Tensor4::zeros(filters.shape());
    for n in 0..s.n {
        for tap in 0..k * k {
            let (du, dv) = ((tap / k) as isize - r, (tap % k) as isize - r);
            let f = filters.plane(n, tap);
            let fbase = (n * k * k + tap) * s.plane();
            for c in 0..s.c {
                let base = (n * s.c + c) * s.plane();
                let src = hidden.plane(n, c);
                let g = grad_out.plane(n, c);
                for i in 0..h {
                    let si = i + du;
                    if si < 0 || si >= h {
                        continue;
                    }
                    let (j0, j1) = ((-dv).max(0), (w - dv).min(w));
                    for j in j0..j1 {
                        let p = (i * w + j) as usize;
                        let q = (si * w + j + dv) as usize;
                        gh.data_mut()[base + q] += f[p] * g[p];
                        gf.data_mut()[fbase + p] += src[q] * g[p];
                    }
                }
            }
        }
    }
    Ok((gh, gf))
}

/// Straightforward five-loop version accumulating in `f64`.
pub fn spatially_variant_filter_direct<T: Element>(hidden: &Tensor4<T>, filters: &Tensor4<T>, k: usize) -> Result<Tensor4<T>> {
    check(hidden, filters, k)?;
    let s = hidden.shape();
    let r = (k / 2) as isize;
    Ok(Tensor4::from_fn(s, |[n, c, i, j]| {
        let mut acc = 0.0;
        for u in -r..=r {
            for v in -r..=r {
                let (y, x) = (i as isize + u, j as isize + v);
                if y < 0 || x < 0 || y >= s.h as isize || x >= s.w as isize {
                    continue;
                }
                let tap = ((u + r) as usize) * k + (v + r) as usize;
                acc += filters.at(n, tap, i, j).as_f64() * hidden.at(n, c, y as usize, x as usize).as_f64();
            }
        }
        T::from_f64(acc)
    }))
}
