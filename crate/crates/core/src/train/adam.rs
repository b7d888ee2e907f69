use crate::error::{Error, Result};
use crate::model::ParamStore;
use crate::tensor::{Element, Tensor4};

/// Adam moments and step count for one parameter store.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimState<T> {
    pub m: Vec<Tensor4<T>>,
    pub v: Vec<Tensor4<T>>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl<T: Element> OptimState<T> {
    pub fn new(params: &ParamStore<T>) -> Self {
        let zeros = || params.tensors().iter().map(|p| Tensor4::zeros(p.shape())).collect();
        Self {
            m: zeros(),
            v: zeros(),
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    /// Moment shapes must equal parameter shapes.
    pub fn matches(&self, params: &ParamStore<T>) -> Result<()> {
        if self.m.len() != params.len() || self.v.len() != params.len() {
            return Err(Error::Usage(format!(
                "optimizer tracks {} tensors but the model has {}",
                self.m.len(),
                params.len()
            )));
        }
        for (i, p) in params.tensors().iter().enumerate() {
            if self.m[i].shape() != p.shape() || self.v[i].shape() != p.shape() {
                return Err(Error::dim("optimizer moments", self.m[i].shape(), p.shape()));
            }
        }
        Ok(())
    }
}

/// One bias-corrected Adam update. Every gradient is checked before any
/// parameter changes, so a non-finite gradient leaves the model intact.
pub fn adam_step<T: Element>(
    params: &mut ParamStore<T>,
    grads: &[Tensor4<T>],
    state: &mut OptimState<T>,
    lr: f64,
) -> Result<()> {
    state.matches(params)?;
    if grads.len() != params.len() {
        return Err(Error::Usage(format!("{} gradients for {} parameters", grads.len(), params.len())));
    }
    for (i, g) in grads.iter().enumerate() {
        if g.shape() != params.get(i).shape() {
            return Err(Error::dim("adam_step", g.shape(), params.get(i).shape()));
        }
        if !g.all_finite() {
            return Err(Error::Numeric(format!("non-finite gradient for parameter {}", params.name(i))));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let bc1 = 1.0 - b1.powi(t);
    let bc2 = 1.0 - b2.powi(t);
    for (i, g) in grads.iter().enumerate() {
        let p = params.tensor_mut(i).data_mut();
        let m = state.m[i].data_mut();
        let v = state.v[i].data_mut();
        for j in 0..p.len() {
            let gj = g.data()[j].as_f64();
            let mj = b1 * m[j].as_f64() + (1.0 - b1) * gj;
            let vj = b2 * v[j].as_f64() + (1.0 - b2) * gj * gj;
            m[j] = T::from_f64(mj);
            v[j] = T::from_f64(vj);
            let update = lr * (mj / bc1) / ((vj / bc2).sqrt() + state.eps);
            p[j] = T::from_f64(p[j].as_f64() - update);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store(v: f64) -> ParamStore<f64> {
        let mut s = ParamStore::default();
        s.push("w", Tensor4::scalar(v));
        s
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = store(0.0);
        let mut st = OptimState::new(&p);
        adam_step(&mut p, &[Tensor4::scalar(1.0)], &mut st, 0.1).unwrap();
        let want = -0.1 / (1.0 + 1e-8);
        assert!((p.get(0).item().unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_decays_moments_only() {
        let mut p = store(0.5);
        let mut st = OptimState::new(&p);
        st.m[0] = Tensor4::scalar(0.2);
        st.v[0] = Tensor4::scalar(0.04);
        st.step = 0;
        let before = st.clone();
        // moments alone would move the weight, so compare the moments only
        adam_step(&mut p, &[Tensor4::scalar(0.0)], &mut st, 0.0).unwrap();
        assert_eq!(p.get(0).item().unwrap(), 0.5);
        assert!((st.m[0].item().unwrap() - 0.9 * before.m[0].item().unwrap()).abs() < 1e-15);
        assert!((st.v[0].item().unwrap() - 0.999 * before.v[0].item().unwrap()).abs() < 1e-15);

        let mut fresh = store(0.5);
        let mut st = OptimState::new(&fresh);
        adam_step(&mut fresh, &[Tensor4::scalar(0.0)], &mut st, 0.1).unwrap();
        assert_eq!(fresh.get(0).item().unwrap(), 0.5);
    }

    #[test]
    fn two_steps_match_scalar_reference() {
        let (lr, g) = (0.01, 0.3);
        let mut p = store(1.0);
        let mut st = OptimState::new(&p);
        for _ in 0..2 {
            adam_step(&mut p, &[Tensor4::scalar(g)], &mut st, lr).unwrap();
        }
        let (mut w, mut m, mut v) = (1.0f64, 0.0f64, 0.0f64);
        for t in 1..=2 {
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            let mh = m / (1.0 - 0.9f64.powi(t));
            let vh = v / (1.0 - 0.999f64.powi(t));
            w -= lr * mh / (vh.sqrt() + 1e-8);
        }
        assert!((p.get(0).item().unwrap() - w).abs() < 1e-10);
    }

    #[test]
    fn decreases_convex_quadratic() {
        let mut p = store(3.0);
        let mut st = OptimState::new(&p);
        let f = |w: f64| (w - 1.0).powi(2);
        for _ in 0..20 {
            let w = p.get(0).item().unwrap();
            adam_step(&mut p, &[Tensor4::scalar(2.0 * (w - 1.0))], &mut st, 0.01).unwrap();
            assert!(f(p.get(0).item().unwrap()) < f(w));
        }
    }

    #[test]
    fn nan_gradient_names_parameter() {
        let mut p = store(1.0);
        let mut st = OptimState::new(&p);
        let err = adam_step(&mut p, &[Tensor4::scalar(f64::NAN)], &mut st, 0.1).unwrap_err();
        assert!(matches!(&err, Error::Numeric(m) if m.contains('w')));
        assert_eq!(p.get(0).item().unwrap(), 1.0);
        assert_eq!(st.step, 0);
    }
}
