//! Summary statistics and tail bounds.

use serde::{Deserialize, Serialize};

use super::HarnessError;

/// The three tail bounds for a sum `Z` of independent `[0,1]` variables with mean `Nμ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChernoffBounds {
    /// `exp(-ε²Nμ/3)` bounding `Pr(Z <= (1-ε)Nμ)`; `None` when `ε > 1`.
    pub lower_tail: Option<f64>,
    /// `exp(-ε²Nμ/2)` as stated for `Pr(Z >= (1+ε)Nμ)`; `None` when `ε > 1`.
    pub upper_tail: Option<f64>,
    /// `(e^ε / (1+ε)^(1+ε))^Nμ` bounding `Pr(Z >= (1+ε)Nμ)`, any `ε > 0`.
    pub poisson_tail: f64,
}

pub fn chernoff_bounds(n_mu: f64, eps: f64) -> Result<ChernoffBounds, HarnessError> {
    if !(n_mu > 0.0) || !n_mu.is_finite() {
        return Err(HarnessError::OutOfRange { name: "N_mu", value: n_mu });
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(HarnessError::OutOfRange { name: "eps", value: eps });
    }
    let small = eps <= 1.0;
    let lower_tail = small.then(|| (-eps * eps * n_mu / 3.0).exp());
    let upper_tail = small.then(|| (-eps * eps * n_mu / 2.0).exp());
    // log form avoids overflow of (1+ε)^(1+ε)
    let poisson_tail = (n_mu * (eps - (1.0 + eps) * eps.ln_1p())).exp();
    Ok(ChernoffBounds { lower_tail, upper_tail, poisson_tail })
}

/// Only the `ε <= 1` lower form; errors otherwise.
pub fn chernoff_lower_tail(n_mu: f64, eps: f64) -> Result<f64, HarnessError> {
    match chernoff_bounds(n_mu, eps)?.lower_tail {
        Some(x) => Ok(x),
        None => Err(HarnessError::OutOfRange { name: "eps", value: eps }),
    }
}

pub fn median(values: &[usize]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] as f64 } else { (v[mid - 1] + v[mid]) as f64 / 2.0 })
}

pub fn mean(values: &[usize]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    Some(values.iter().map(|&x| x as f64).sum::<f64>() / values.len() as f64)
}

pub const CONFIDENCE: f64 = 0.95;
const Z_95: f64 = 1.959_963_984_540_054;

/// Normal-approximation interval for a success rate.
pub fn normal_interval(successes: usize, trials: usize) -> (f64, f64) {
    let p = successes as f64 / trials as f64;
    let half = Z_95 * (p * (1.0 - p) / trials as f64).sqrt();
    ((p - half).max(0.0), (p + half).min(1.0))
}

/// Multiplicative interval `p(1 ± ε)` for a success rate, where `ε` makes
/// `exp(-ε²Nμ/3)` equal to `1 - CONFIDENCE`, with `Nμ` taken as the observed
/// count. The `/3` form is used for both tails.
pub fn chernoff_interval(successes: usize, trials: usize) -> (f64, f64) {
    let p = successes as f64 / trials as f64;
    if successes == 0 {
        return (0.0, 1.0);
    }
    let eps = (3.0 * (1.0 / (1.0 - CONFIDENCE)).ln() / successes as f64).sqrt();
    ((p * (1.0 - eps)).max(0.0), (p * (1.0 + eps)).min(1.0))
}
