use crate::error::{Error, Result};

/// Step decay: `base_lr * decay_factor^(epoch / decay_epoch)`, training
/// stops after `epochs`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LrSchedule {
    pub base_lr: f64,
    pub decay_epoch: usize,
    pub decay_factor: f64,
    pub epochs: usize,
}

impl Default for LrSchedule {
    fn default() -> Self {
        Self {
            base_lr: 1e-4,
            decay_epoch: 60,
            decay_factor: 0.1,
            epochs: 70,
        }
    }
}

impl LrSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_lr > 0.0 && self.base_lr.is_finite()) || self.decay_epoch == 0 || self.epochs == 0 {
            return Err(Error::Usage(format!("invalid learning-rate schedule {self:?}")));
        }
        Ok(())
    }

    pub fn lr(&self, epoch: usize) -> f64 {
        self.base_lr * self.decay_factor.powi((epoch / self.decay_epoch) as i32)
    }

    pub fn finished(&self, epoch: usize) -> bool {
        epoch >= self.epochs
    }
}
