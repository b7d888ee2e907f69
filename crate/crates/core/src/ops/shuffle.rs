//! Depth-to-space (`pixel_shuffle`) and its inverse. Input channel
//! `c * r^2 + i * r + j` maps to spatial offset `(i, j)` of output channel `c`.

use crate::error::{Error, Result};
use crate::tensor::{Element, Shape4, Tensor4};

pub fn pixel_shuffle<T: Element>(input: &Tensor4<T>, r: usize) -> Result<Tensor4<T>> {
    let s = input.shape();
    if r == 0 || s.c % (r * r) != 0 {
        return Err(Error::dim("pixel_shuffle", s, format!("channels divisible by {r}^2")));
    }
    let out_s = Shape4::new(s.n, s.c / (r * r), s.h * r, s.w * r);
    let mut out = Tensor4::zeros(out_s);
    let od = out.data_mut();
    for n in 0..s.n {
        for ci in 0..s.c {
            let (c, off) = (ci / (r * r), ci % (r * r));
            let (i, j) = (off / r, off % r);
            let src = input.plane(n, ci);
            let base = (n * out_s.c + c) * out_s.plane();
            for y in 0..s.h {
                for x in 0..s.w {
                    od[base + (y * r + i) * out_s.w + x * r + j] = src[y * s.w + x];
                }
            }
        }
    }
    Ok(out)
}

pub fn pixel_unshuffle<T: Element>(input: &Tensor4<T>, r: usize) -> Result<Tensor4<T>> {
    let s = input.shape();
    if r == 0 || s.h % r != 0 || s.w % r != 0 {
        return Err(Error::dim("pixel_unshuffle", s, format!("spatial dims divisible by {r}")));
    }
    let out_s = Shape4::new(s.n, s.c * r * r, s.h / r, s.w / r);
    let mut out = Tensor4::zeros(out_s);
    let od = out.data_mut();
    for n in 0..s.n {
        for c in 0..s.c {
            let src = input.plane(n, c);
            for off in 0..r * r {
                let (i, j) = (off / r, off % r);
                let base = (n * out_s.c + c * r * r + off) * out_s.plane();
                for y in 0..out_s.h {
                    for x in 0..out_s.w {
                        od[base + y * out_s.w + x] = src[(y * r + i) * s.w + x * r + j];
                    }
                }
            }
        }
    }
    Ok(out)
}
