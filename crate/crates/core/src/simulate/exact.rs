//! Exact law of `S_n` by forward dynamic programming.
//!
//! The conditional law of the next step depends on the past only through
//! `S_n`, so `S` is a (time-inhomogeneous) Markov chain on
//! `{-n, -n + 2, ..., n}`.

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::summation::CompensatedSum;

/// Default largest `n` for [`exact_distribution`]; the DP is `O(n^2)`.
pub const DEFAULT_EXACT_CAP: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactDist {
    pub n: usize,
    /// `probs[j] = P(S_n = 2j − n)`.
    pub probs: Vec<f64>,
}

impl ExactDist {
    #[inline]
    pub fn value_at(&self, j: usize) -> i64 {
        2 * j as i64 - self.n as i64
    }

    /// `P(S_n = s)`; zero off the support.
    pub fn prob(&self, s: i64) -> f64 {
        let shifted = s + self.n as i64;
        if shifted < 0 || shifted % 2 != 0 {
            return 0.0;
        }
        self.probs.get((shifted / 2) as usize).copied().unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        crate::summation::sum(&self.probs)
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(j, &p)| p * self.value_at(j) as f64)
            .sum::<CompensatedSum>()
            .value()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.probs
            .iter()
            .enumerate()
            .map(|(j, &p)| {
                let d = self.value_at(j) as f64 - mean;
                p * d * d
            })
            .sum::<CompensatedSum>()
            .value()
    }

    /// Total-variation distance to the empirical law of `samples`.
    pub fn total_variation<I: IntoIterator<Item = i64>>(&self, samples: I) -> f64 {
        let mut counts = vec![0u64; self.probs.len()];
        let mut total = 0u64;
        let mut off_support = 0u64;
        for s in samples {
            total += 1;
            let shifted = s + self.n as i64;
            if shifted < 0 || shifted % 2 != 0 || (shifted / 2) as usize >= counts.len() {
                off_support += 1;
            } else {
                counts[(shifted / 2) as usize] += 1;
            }
        }
        if total == 0 {
            return 1.0;
        }
        let total = total as f64;
        let on: CompensatedSum = counts
            .iter()
            .zip(&self.probs)
            .map(|(&c, &p)| (c as f64 / total - p).abs())
            .sum();
        0.5 * (on.value() + off_support as f64 / total)
    }
}

/// Law of `S_n` for `n <= cap`.
pub fn exact_distribution(params: &ModelParams, n: usize, cap: usize) -> Result<ExactDist> {
    if n > cap {
        return Err(Error::CapExceeded { n, cap });
    }
    let mut probs = vec![1.0];
    let mut next = Vec::with_capacity(n + 1);
    for k in 0..n {
        let (slope, offset) = params.step_coefficients(k);
        next.clear();
        next.resize(k + 2, 0.0);
        for (j, &p) in probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let s = 2 * j as i64 - k as i64;
            let up = 0.5 * (1.0 + (slope * s as f64 + offset).clamp(-1.0, 1.0));
            next[j + 1] += p * up;
            next[j] += p * (1.0 - up);
        }
        std::mem::swap(&mut probs, &mut next);
    }
    Ok(ExactDist { n, probs })
}
