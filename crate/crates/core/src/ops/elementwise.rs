//! Shape-preserving arithmetic, activations, and geometric rearrangements.
//! No broadcasting: binary operands must agree exactly.

use crate::error::{Error, Result};
use crate::tensor::{Element, Shape4, Tensor4};

pub fn add<T: Element>(a: &Tensor4<T>, b: &Tensor4<T>) -> Result<Tensor4<T>> {
    a.zip_map(b, "add", |x, y| x + y)
}

pub fn sub<T: Element>(a: &Tensor4<T>, b: &Tensor4<T>) -> Result<Tensor4<T>> {
    a.zip_map(b, "sub", |x, y| x - y)
}

pub fn mul<T: Element>(a: &Tensor4<T>, b: &Tensor4<T>) -> Result<Tensor4<T>> {
    a.zip_map(b, "mul", |x, y| x * y)
}

pub fn relu<T: Element>(x: &Tensor4<T>) -> Tensor4<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

pub fn sigmoid<T: Element>(x: &Tensor4<T>) -> Tensor4<T> {
    x.map(|v| {
        // branch keeps exp() from overflowing for large |v|
        if v >= T::zero() {
            T::one() / (T::one() + (-v).exp())
        } else {
            let e = v.exp();
            e / (T::one() + e)
        }
    })
}

pub fn concat_channels<T: Element>(parts: &[&Tensor4<T>]) -> Result<Tensor4<T>> {
    let first = parts
        .first()
        .ok_or_else(|| Error::Argument("concat of zero tensors".into()))?
        .shape();
    let mut c = 0;
    for p in parts {
        let s = p.shape();
        if s.n != first.n || s.h != first.h || s.w != first.w {
            return Err(Error::dim("concat_channels", first, s));
        }
        c += s.c;
    }
    let out_s = first.with_c(c);
    let mut data = Vec::with_capacity(out_s.numel());
    for n in 0..first.n {
        for p in parts {
            let item = p.shape().item();
            data.extend_from_slice(&p.data()[n * item..(n + 1) * item]);
        }
    }
    Tensor4::from_vec(out_s, data)
}

/// Inverse of [`concat_channels`]: split into blocks of the given widths.
pub fn split_channels<T: Element>(x: &Tensor4<T>, widths: &[usize]) -> Result<Vec<Tensor4<T>>> {
    let s = x.shape();
    if widths.iter().sum::<usize>() != s.c {
        return Err(Error::dim("split_channels", s, format!("widths {widths:?}")));
    }
    let mut outs: Vec<Vec<T>> = widths.iter().map(|&c| Vec::with_capacity(s.n * c * s.plane())).collect();
    for n in 0..s.n {
        let mut c0 = 0;
        for (out, &c) in outs.iter_mut().zip(widths) {
            let start = (n * s.c + c0) * s.plane();
            out.extend_from_slice(&x.data()[start..start + c * s.plane()]);
            c0 += c;
        }
    }
    outs.into_iter()
        .zip(widths)
        .map(|(d, &c)| Tensor4::from_vec(s.with_c(c), d))
        .collect()
}

pub fn crop<T: Element>(x: &Tensor4<T>, top: usize, left: usize, h: usize, w: usize) -> Result<Tensor4<T>> {
    let s = x.shape();
    if top + h > s.h || left + w > s.w || h == 0 || w == 0 {
        return Err(Error::dim("crop", s, format!("window {h}x{w} at ({top}, {left})")));
    }
    Ok(Tensor4::from_fn(s.with_hw(h, w), |[n, c, i, j]| x.at(n, c, top + i, left + j)))
}

/// Mirror left-right.
pub fn flip_h<T: Element>(x: &Tensor4<T>) -> Tensor4<T> {
    let s = x.shape();
    Tensor4::from_fn(s, |[n, c, i, j]| x.at(n, c, i, s.w - 1 - j))
}

/// Mirror top-bottom.
pub fn flip_v<T: Element>(x: &Tensor4<T>) -> Tensor4<T> {
    let s = x.shape();
    Tensor4::from_fn(s, |[n, c, i, j]| x.at(n, c, s.h - 1 - i, j))
}

/// Rotate counter-clockwise by `quarter_turns * 90` degrees.
pub fn rot90<T: Element>(x: &Tensor4<T>, quarter_turns: usize) -> Tensor4<T> {
    let s = x.shape();
    match quarter_turns % 4 {
        0 => x.clone(),
        1 => Tensor4::from_fn(Shape4::new(s.n, s.c, s.w, s.h), |[n, c, i, j]| x.at(n, c, j, s.w - 1 - i)),
        2 => Tensor4::from_fn(s, |[n, c, i, j]| x.at(n, c, s.h - 1 - i, s.w - 1 - j)),
        _ => Tensor4::from_fn(Shape4::new(s.n, s.c, s.w, s.h), |[n, c, i, j]| x.at(n, c, s.h - 1 - j, i)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn activations() {
        let x = Tensor4::<f64>::from_vec([1, 1, 1, 4], vec![-2.0, -0.0, 0.0, 3.5]).unwrap();
        assert_eq!(relu(&x).data(), &[0.0, 0.0, 0.0, 3.5]);
        assert_eq!(sigmoid(&Tensor4::<f32>::zeros([1, 1, 1, 1])).item().unwrap(), 0.5);
        let big = sigmoid(&Tensor4::<f32>::from_vec([1, 1, 1, 2], vec![-500.0, 500.0]).unwrap());
        assert!(big.all_finite());
        assert!(big.data()[0] >= 0.0 && big.data()[1] <= 1.0);
    }

    #[test]
    fn concat_and_split() {
        let a = Tensor4::<f32>::full([2, 3, 4, 4], 1.0);
        let b = Tensor4::<f32>::full([2, 128, 4, 4], 2.0);
        let c = concat_channels(&[&a, &b]).unwrap();
        assert_eq!(c.shape(), Shape4::new(2, 131, 4, 4));
        assert_eq!(c.at(1, 2, 0, 0), 1.0);
        assert_eq!(c.at(1, 3, 0, 0), 2.0);
        let parts = split_channels(&c, &[3, 128]).unwrap();
        assert_eq!(parts[0], a);
        assert_eq!(parts[1], b);
    }

    #[test]
    fn no_broadcasting() {
        let a = Tensor4::<f32>::zeros([1, 3, 4, 4]);
        let b = Tensor4::<f32>::zeros([1, 1, 4, 4]);
        assert!(matches!(add(&a, &b), Err(Error::Dimension { .. })));
        assert!(matches!(mul(&a, &b), Err(Error::Dimension { .. })));
    }

    #[test]
    fn geometry() {
        let x = Tensor4::<f32>::from_vec([1, 1, 2, 3], vec![1., 2., 3., 4., 5., 6.]).unwrap();
        assert_eq!(flip_h(&x).data(), &[3., 2., 1., 6., 5., 4.]);
        assert_eq!(flip_v(&x).data(), &[4., 5., 6., 1., 2., 3.]);
        let r1 = rot90(&x, 1);
        assert_eq!(r1.shape(), Shape4::new(1, 1, 3, 2));
        assert_eq!(r1.data(), &[3., 6., 2., 5., 1., 4.]);
        assert_eq!(rot90(&rot90(&r1, 1), 2), x);
        assert_eq!(rot90(&x, 3), rot90(&rot90(&x, 2), 1));
        assert_eq!(crop(&x, 1, 1, 1, 2).unwrap().data(), &[5., 6.]);
    }
}
