use serde::{Deserialize, Serialize};

use super::sequence::SequenceSpec;
use crate::error::{Error, Result};

/// Full parameterization of the walk: repeat probability `p`, first-step
/// bias `q`, memory-use sequence `alpha` and environment bias `beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub p: f64,
    pub q: f64,
    pub alpha: SequenceSpec,
    pub beta: SequenceSpec,
}

impl ModelParams {
    pub fn new(p: f64, q: f64, alpha: SequenceSpec, beta: SequenceSpec) -> Result<Self> {
        let params = Self { p, q, alpha, beta };
        params.validate()?;
        Ok(params)
    }

    /// Constant `alpha` and `beta`.
    pub fn constant(p: f64, q: f64, alpha: f64, beta: f64) -> Result<Self> {
        Self::new(
            p,
            q,
            SequenceSpec::constant(alpha),
            SequenceSpec::constant(beta),
        )
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("p", self.p), ("q", self.q)] {
            if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
                return Err(Error::InvalidParameter(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        self.alpha.validate()?;
        self.beta.validate()
    }

    #[inline]
    pub fn alpha(&self, n: usize) -> f64 {
        self.alpha.value(n)
    }

    #[inline]
    pub fn beta(&self, n: usize) -> f64 {
        self.beta.value(n)
    }

    /// `ε_n = 2β_n − 1`.
    #[inline]
    pub fn epsilon(&self, n: usize) -> f64 {
        2.0 * self.beta(n) - 1.0
    }

    /// `E[X_1] = α_1(2q − 1) + (1 − α_1)(2β_1 − 1)`.
    pub fn first_step_mean(&self) -> f64 {
        let a1 = self.alpha(1);
        a1 * (2.0 * self.q - 1.0) + (1.0 - a1) * self.epsilon(1)
    }

    /// `(2p − 1) α_n`: the memory gain applied when producing `X_n`.
    #[inline]
    pub fn memory_gain(&self, n: usize) -> f64 {
        (2.0 * self.p - 1.0) * self.alpha(n)
    }

    /// Affine coefficients of the conditional mean of step `n + 1` given
    /// `S_n = s`: `E[X_{n+1} | F_n] = slope * s + offset`.
    ///
    /// For `n = 0` the slope is zero and the offset is `E[X_1]`.
    #[inline]
    pub fn step_coefficients(&self, n: usize) -> (f64, f64) {
        if n == 0 {
            (0.0, self.first_step_mean())
        } else {
            let next = n + 1;
            let a = self.alpha(next);
            (
                a * (2.0 * self.p - 1.0) / n as f64,
                (1.0 - a) * self.epsilon(next),
            )
        }
    }

    /// Conditional mean of `X_{n+1}` given `S_n = s`, clamped to `[-1, 1]`.
    ///
    /// Divides by `n` instead of multiplying by the slope so that `S_n = n`
    /// with unit gain gives exactly 1.
    #[inline]
    pub fn conditional_mean(&self, n: usize, s: f64) -> f64 {
        if n == 0 {
            return self.first_step_mean();
        }
        let next = n + 1;
        let a = self.alpha(next);
        (self.memory_gain(next) * s / n as f64 + (1.0 - a) * self.epsilon(next)).clamp(-1.0, 1.0)
    }
}

/// Precomputed per-step coefficients for `n = 0..n_max`, shared by every
/// path of an ensemble.
#[derive(Debug, Clone)]
pub struct StepTable {
    pub slope: Vec<f64>,
    pub offset: Vec<f64>,
    /// `alpha[n] = α_n`, index 0 unused.
    pub alpha: Vec<f64>,
    /// `beta[n] = β_n`, index 0 unused.
    pub beta: Vec<f64>,
}

impl StepTable {
    pub fn new(params: &ModelParams, n_max: usize) -> Self {
        let (slope, offset) = (0..n_max).map(|n| params.step_coefficients(n)).unzip();
        let alpha = std::iter::once(f64::NAN)
            .chain((1..=n_max).map(|n| params.alpha(n)))
            .collect();
        let beta = std::iter::once(f64::NAN)
            .chain((1..=n_max).map(|n| params.beta(n)))
            .collect();
        Self {
            slope,
            offset,
            alpha,
            beta,
        }
    }

    pub fn n_max(&self) -> usize {
        self.slope.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_mean_mixes_q_and_beta() {
        let params = ModelParams::constant(0.9, 0.5, 0.8, 0.7).unwrap();
        assert!((params.first_step_mean() - 0.2 * 0.4).abs() < 1e-15);
        let erw = ModelParams::constant(0.9, 1.0, 1.0, 0.3).unwrap();
        assert_eq!(erw.first_step_mean(), 1.0);
    }

    #[test]
    fn coefficients_follow_conditional_mean() {
        let params = ModelParams::constant(0.9, 0.5, 0.8, 0.7).unwrap();
        let (slope, offset) = params.step_coefficients(4);
        assert!((slope - 0.8 * 0.8 / 4.0).abs() < 1e-15);
        assert!((offset - 0.2 * 0.4).abs() < 1e-15);
        assert_eq!(params.conditional_mean(1, 1e9), 1.0);
    }

    #[test]
    fn rejects_out_of_range_probabilities() {
        assert!(ModelParams::constant(1.1, 0.5, 0.5, 0.5).is_err());
        assert!(ModelParams::constant(0.5, -0.1, 0.5, 0.5).is_err());
        assert!(ModelParams::constant(0.5, 0.5, 0.5, f64::NAN).is_err());
    }
}
