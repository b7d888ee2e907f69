use crate::autograd::{Tape, Var};
use crate::error::{Error, Result};
use crate::model::{decompose, CellOutput, StepVars};
use crate::tensor::{Element, Tensor4};

/// Weights of the structure, detail and image terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub epsilon: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
            epsilon: 1e-3,
        }
    }
}

impl LossWeights {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self {
            alpha,
            beta,
            gamma,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.alpha, self.beta, self.gamma].iter().all(|w| w.is_finite() && *w >= 0.0)
            && self.epsilon.is_finite()
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Usage(format!("invalid loss weights {self:?}")))
        }
    }

    /// The four weightings of the loss ablation.
    pub fn ablation_grid() -> [LossWeights; 4] {
        [
            LossWeights::new(1.0, 0.5, 1.0),
            LossWeights::new(0.5, 1.0, 1.0),
            LossWeights::new(1.0, 1.0, 0.0),
            LossWeights::new(1.0, 1.0, 1.0),
        ]
    }
}

/// Mean over elements of `sqrt((x - y)^2 + eps^2)`.
pub fn charbonnier<T: Element>(x: &Tensor4<T>, y: &Tensor4<T>, eps: f64) -> Result<f64> {
    Ok(crate::autograd::charbonnier_value(x, y, T::from_f64(eps))?.as_f64())
}

/// HR supervision for one step.
#[derive(Clone, Debug, PartialEq)]
pub struct Targets<T> {
    pub structure: Tensor4<T>,
    pub detail: Tensor4<T>,
    pub image: Tensor4<T>,
}

impl<T: Element> Targets<T> {
    /// Split a ground-truth HR frame with the same operator the model uses
    /// on its LR input.
    pub fn from_hr(hr: &Tensor4<T>, scale: usize) -> Result<Self> {
        let (structure, detail) = decompose(hr, scale)?;
        Ok(Self {
            structure,
            detail,
            image: hr.clone(),
        })
    }
}

/// Unweighted per-term means over steps, and the weighted total.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossTerms {
    pub structure: f64,
    pub detail: f64,
    pub image: f64,
    pub total: f64,
}

fn check_lengths(outputs: usize, targets: usize) -> Result<()> {
    if outputs == 0 || outputs != targets {
        return Err(Error::Usage(format!("{outputs} outputs for {targets} targets")));
    }
    Ok(())
}

pub fn total_loss<T: Element>(outputs: &[CellOutput<T>], targets: &[Targets<T>], w: &LossWeights) -> Result<LossTerms> {
    check_lengths(outputs.len(), targets.len())?;
    let n = outputs.len() as f64;
    let mut terms = LossTerms::default();
    for (o, t) in outputs.iter().zip(targets) {
        terms.structure += charbonnier(&o.structure, &t.structure, w.epsilon)? / n;
        terms.detail += charbonnier(&o.detail, &t.detail, w.epsilon)? / n;
        terms.image += charbonnier(&o.image, &t.image, w.epsilon)? / n;
    }
    terms.total = w.alpha * terms.structure + w.beta * terms.detail + w.gamma * terms.image;
    Ok(terms)
}

/// The loss recorded on `tape`. Terms with zero weight are left off the
/// tape entirely, so no gradient flows through them.
pub fn total_loss_on_tape<T: Element>(
    tape: &mut Tape<T>,
    steps: &[StepVars],
    targets: &[Targets<T>],
    w: &LossWeights,
) -> Result<(Var, LossTerms)> {
    check_lengths(steps.len(), targets.len())?;
    let n = steps.len() as f64;
    let eps = T::from_f64(w.epsilon);
    let mut terms = LossTerms::default();
    let mut total: Option<Var> = None;
    for (s, t) in steps.iter().zip(targets) {
        let parts = [
            (s.structure, &t.structure, w.alpha, &mut terms.structure),
            (s.detail, &t.detail, w.beta, &mut terms.detail),
            (s.image, &t.image, w.gamma, &mut terms.image),
        ];
        for (pred, target, weight, slot) in parts {
            let target = tape.constant(target.clone());
            if weight == 0.0 {
                *slot += crate::autograd::charbonnier_value(tape.value(pred), tape.value(target), eps)?.as_f64() / n;
                continue;
            }
            let c = tape.charbonnier(pred, target, eps)?;
            *slot += tape.value(c).item()?.as_f64() / n;
            let c = tape.scale(c, T::from_f64(weight / n))?;
            total = Some(match total {
                Some(acc) => tape.add(acc, c)?,
                None => c,
            });
        }
    }
    terms.total = w.alpha * terms.structure + w.beta * terms.detail + w.gamma * terms.image;
    let total = match total {
        Some(v) => v,
        None => tape.constant(Tensor4::scalar(T::zero())),
    };
    Ok((total, terms))
}
