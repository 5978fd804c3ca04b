//! Small statistics helpers for replicated experiments.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::seed::rng_from_seed;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Mean over the finite entries only; `NaN` when there are none.
pub fn finite_mean(xs: &[f64]) -> f64 {
    let v: Vec<f64> = xs.iter().copied().filter(|x| x.is_finite()).collect();
    mean(&v)
}

/// Percentile bootstrap of the mean: `(q_lo, q_hi)` quantiles of the
/// resampled means.
pub fn bootstrap_mean_quantiles(xs: &[f64], q_lo: f64, q_hi: f64, resamples: u32, seed: u64) -> Result<(f64, f64)> {
    if xs.is_empty() {
        return Err(invalid("bootstrap needs at least one sample"));
    }
    if resamples == 0 {
        return Err(invalid("bootstrap needs at least one resample"));
    }
    if !(0.0..=1.0).contains(&q_lo) || !(0.0..=1.0).contains(&q_hi) || q_lo > q_hi {
        return Err(invalid(format!("bad quantiles ({q_lo}, {q_hi})")));
    }
    let mut rng = rng_from_seed(seed);
    let n = xs.len();
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| xs[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let pick = |q: f64| means[((q * (resamples - 1) as f64).round() as usize).min(means.len() - 1)];
    Ok((pick(q_lo), pick(q_hi)))
}

/// Paired check of the ordering `a <= b` on per-replication samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderingCheck {
    /// Mean of `a - b`.
    pub mean_diff: f64,
    /// One-sided lower confidence bound on the mean of `a - b`.
    pub lower_bound: f64,
    /// The ordering is rejected only when the lower bound is above zero.
    pub holds: bool,
}

/// `a <= b` at the given one-sided confidence, by percentile bootstrap of
/// the paired differences. Pairs with a non-finite side are dropped.
pub fn check_le(a: &[f64], b: &[f64], confidence: f64, resamples: u32, seed: u64) -> Result<OrderingCheck> {
    if a.len() != b.len() {
        return Err(invalid("paired samples differ in length"));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| d.is_finite()).collect();
    let (lower_bound, _) = bootstrap_mean_quantiles(&diffs, 1.0 - confidence, 1.0, resamples, seed)?;
    Ok(OrderingCheck { mean_diff: mean(&diffs), lower_bound, holds: lower_bound <= 0.0 })
}
