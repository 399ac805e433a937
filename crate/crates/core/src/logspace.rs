//! Log-space numerics shared by the speaker, listener and decoders.

use crate::error::{Error, Result};

/// `ln Σ exp(x)` with max-shifting. Returns `-inf` for an empty slice or one
/// whose entries are all `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = xs.iter().map(|x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Turns unnormalized log-weights into a probability vector.
pub fn log_normalize(log_weights: &[f64]) -> Result<Vec<f64>> {
    if log_weights.is_empty() {
        return Err(Error::EmptyInput("log_normalize needs at least one weight"));
    }
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::DegenerateDistribution);
    }
    let exps: Vec<f64> = log_weights.iter().map(|x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// Same as [`log_normalize`] but stays in log space.
pub fn log_softmax(log_weights: &[f64]) -> Result<Vec<f64>> {
    if log_weights.is_empty() {
        return Err(Error::EmptyInput("log_softmax needs at least one weight"));
    }
    let lse = log_sum_exp(log_weights);
    if lse == f64::NEG_INFINITY {
        return Err(Error::DegenerateDistribution);
    }
    Ok(log_weights.iter().map(|x| x - lse).collect())
}
