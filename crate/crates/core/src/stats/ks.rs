//! Kolmogorov–Smirnov tests with asymptotic p-values.

use serde::{Deserialize, Serialize};

use super::normal::normal_cdf;
use crate::error::{Error, Result};

/// Smallest sample accepted by the asymptotic tests.
pub const MIN_KS_SAMPLES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Survival function of the Kolmogorov distribution,
/// `P(K > λ) = 2 Σ_{k>=1} (−1)^{k−1} e^{−2k²λ²}`.
///
/// Below `λ = 1` the alternating series converges slowly, so the CDF is taken
/// from the Jacobi-theta form `√(2π)/λ Σ_{k>=1} e^{−(2k−1)²π²/(8λ²)}` instead.
/// Both truncate once terms drop below 1e-17 relative.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if !(lambda > 0.0) {
        return 1.0;
    }
    if lambda < 1.0 {
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * lambda * lambda);
        let mut cdf = 0.0;
        for k in 1..100 {
            let odd = (2 * k - 1) as f64;
            let term = (-odd * odd * c).exp();
            cdf += term;
            if term < 1e-17 * cdf.max(f64::MIN_POSITIVE) {
                break;
            }
        }
        cdf *= (2.0 * std::f64::consts::PI).sqrt() / lambda;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut sf = 0.0;
        let mut sign = 1.0;
        for k in 1..100 {
            let k = k as f64;
            let term = (-2.0 * k * k * lambda * lambda).exp();
            sf += sign * term;
            if term < 1e-17 * sf.abs() {
                break;
            }
            sign = -sign;
        }
        (2.0 * sf).clamp(0.0, 1.0)
    }
}

fn sorted_finite(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidParameter("NaN in KS sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted)
}

/// One-sample test of `samples` against `N(0, 1)`.
pub fn ks_test_normal(samples: &[f64]) -> Result<KsResult> {
    let n = samples.len();
    if n < MIN_KS_SAMPLES {
        return Err(Error::TooFewSamples {
            got: n,
            need: MIN_KS_SAMPLES,
        });
    }
    let sorted = sorted_finite(samples)?;
    let n_f = n as f64;
    let statistic = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf(x);
            let above = (i + 1) as f64 / n_f - f;
            let below = f - i as f64 / n_f;
            above.max(below)
        })
        .fold(0.0f64, f64::max);
    Ok(KsResult {
        statistic,
        p_value: kolmogorov_sf(n_f.sqrt() * statistic),
    })
}

/// One-sample test for samples confined to a lattice `x_0 + step·Z`.
///
/// Each atom is spread uniformly over its cell `[x − step/2, x + step/2]`
/// and the empirical CDF is compared with `Φ` at the cell edges. Without this
/// the jump at every atom adds about half an atom's mass to the statistic,
/// which is not negligible for walks normalized by `√n`.
pub fn ks_test_normal_lattice(samples: &[f64], step: f64) -> Result<KsResult> {
    let n = samples.len();
    if n < MIN_KS_SAMPLES {
        return Err(Error::TooFewSamples {
            got: n,
            need: MIN_KS_SAMPLES,
        });
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidParameter(format!("lattice step must be positive, got {step}")));
    }
    let sorted = sorted_finite(samples)?;
    let n_f = n as f64;
    let half = 0.5 * step;
    let mut statistic = 0.0f64;
    let mut i = 0;
    while i < n {
        let x = sorted[i];
        let mut j = i;
        while j < n && sorted[j] == x {
            j += 1;
        }
        let below = (i as f64 / n_f - normal_cdf(x - half)).abs();
        let above = (j as f64 / n_f - normal_cdf(x + half)).abs();
        statistic = statistic.max(below).max(above);
        i = j;
    }
    Ok(KsResult {
        statistic,
        p_value: kolmogorov_sf(n_f.sqrt() * statistic),
    })
}

/// Two-sample test; ties are stepped over together so discrete samples get
/// the exact empirical-CDF distance.
pub fn two_sample_ks(a: &[f64], b: &[f64]) -> Result<KsResult> {
    for len in [a.len(), b.len()] {
        if len < MIN_KS_SAMPLES {
            return Err(Error::TooFewSamples {
                got: len,
                need: MIN_KS_SAMPLES,
            });
        }
    }
    let a = sorted_finite(a)?;
    let b = sorted_finite(b)?;
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut statistic = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = if a[i].total_cmp(&b[j]).is_le() { a[i] } else { b[j] };
        while i < a.len() && a[i].total_cmp(&x).is_le() {
            i += 1;
        }
        while j < b.len() && b[j].total_cmp(&x).is_le() {
            j += 1;
        }
        statistic = statistic.max((i as f64 / n - j as f64 / m).abs());
    }
    let effective = (n * m / (n + m)).sqrt();
    Ok(KsResult {
        statistic,
        p_value: kolmogorov_sf(effective * statistic),
    })
}
