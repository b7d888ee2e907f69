use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Shuffle with `seed` and hold out `round(len * val_fraction)` items (at
/// least one when the fraction is positive and two or more items exist).
pub fn split<S>(items: Vec<S>, val_fraction: f64, seed: u64) -> Result<(Vec<S>, Vec<S>)> {
    if !(0.0..1.0).contains(&val_fraction) {
        return Err(Error::Argument(format!("val_fraction {val_fraction} outside [0, 1)")));
    }
    let n = items.len();
    let mut n_val = (n as f64 * val_fraction).round() as usize;
    if val_fraction > 0.0 && n >= 2 {
        n_val = n_val.clamp(1, n - 1);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut is_val = vec![false; n];
    for &i in &order[..n_val] {
        is_val[i] = true;
    }
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (item, v) in items.into_iter().zip(is_val) {
        if v {
            val.push(item);
        } else {
            train.push(item);
        }
    }
    Ok((train, val))
}
