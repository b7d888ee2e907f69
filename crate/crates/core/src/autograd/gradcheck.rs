use crate::error::Result;
use crate::tensor::Tensor4;

use super::{Tape, Var};

#[derive(Clone, Debug)]
pub struct GradCheck {
    /// Max over checked coordinates of `|a - n| / (|a| + |n| + 1e-12)`.
    pub max_rel_error: f64,
    pub checked: usize,
    /// Any analytic or numeric derivative came out NaN.
    pub has_nan: bool,
    /// `(param index, flat coordinate)` of the worst coordinate.
    pub worst: Option<(usize, usize)>,
    /// Coordinates left out because the function is visibly non-smooth
    /// there (a ReLU switching within the perturbation).
    pub kinks: usize,
}

fn sample_coords(numel: usize, max_samples: usize) -> Vec<usize> {
    if numel <= max_samples {
        (0..numel).collect()
    } else {
        // spread evenly, odd offset so we don't always land on channel starts
        (0..max_samples).map(|i| (i * numel + numel / 3) / max_samples % numel).collect()
    }
}

/// Compare analytic gradients of a scalar function against central
/// differences. `f` receives a fresh tape and one variable per entry of
/// `params`, and returns the scalar output.
///
/// A coordinate whose one-sided slopes disagree by more than
/// `1e-4 * (|s+| + |s-|) + 1e-9` is counted in `kinks` instead of being
/// compared: a central difference across a kink measures the average of two
/// slopes, not the derivative.
pub fn grad_check<F>(f: F, params: &[Tensor4<f64>], eps: f64, max_samples: usize) -> Result<GradCheck>
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Result<Var>,
{
    let eval = |values: &[Tensor4<f64>]| -> Result<f64> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = values.iter().map(|v| tape.constant(v.clone())).collect();
        let out = f(&mut tape, &vars)?;
        tape.value(out).item()
    };

    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|p| tape.variable(p.clone())).collect();
    let out = f(&mut tape, &vars)?;
    let base = tape.value(out).item()?;
    let grads = tape.backward(out)?;

    let mut report = GradCheck {
        max_rel_error: 0.0,
        checked: 0,
        has_nan: false,
        worst: None,
        kinks: 0,
    };
    let mut work: Vec<Tensor4<f64>> = params.to_vec();
    for (pi, var) in vars.iter().enumerate() {
        let analytic = grads.get(*var).expect("variables always receive a gradient");
        for idx in sample_coords(params[pi].numel(), max_samples) {
            let orig = params[pi].data()[idx];
            work[pi].data_mut()[idx] = orig + eps;
            let plus = eval(&work)?;
            work[pi].data_mut()[idx] = orig - eps;
            let minus = eval(&work)?;
            work[pi].data_mut()[idx] = orig;

            let numeric = (plus - minus) / (2.0 * eps);
            let a = analytic.data()[idx];
            if a.is_nan() || numeric.is_nan() {
                report.has_nan = true;
                continue;
            }
            let (right, left) = ((plus - base) / eps, (base - minus) / eps);
            if (right - left).abs() > 1e-4 * (right.abs() + left.abs()) + 1e-9 {
                report.kinks += 1;
                continue;
            }
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs() + 1e-12);
            report.checked += 1;
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = Some((pi, idx));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_wrong_gradient_free_function() {
        // x * x * x has gradient 3x^2; the tape gets it right.
        let x = Tensor4::from_vec([1, 1, 1, 3], vec![0.3, -1.2, 2.0]).unwrap();
        let rep = grad_check(
            |t, v| {
                let sq = t.mul(v[0], v[0])?;
                let cube = t.mul(sq, v[0])?;
                t.sum(cube)
            },
            &[x],
            1e-5,
            10,
        )
        .unwrap();
        assert_eq!(rep.checked, 3);
        assert!(rep.max_rel_error < 1e-8, "{rep:?}");
    }

    #[test]
    fn relu_kink_is_skipped() {
        let x = Tensor4::from_vec([1, 1, 1, 2], vec![1e-9, 0.5]).unwrap();
        let rep = grad_check(
            |t, v| {
                let r = t.relu(v[0])?;
                t.sum(r)
            },
            &[x],
            1e-6,
            10,
        )
        .unwrap();
        assert_eq!((rep.checked, rep.kinks), (1, 1));
        assert!(rep.max_rel_error < 1e-9);
    }
}
