use serde::{Deserialize, Serialize};

use super::moments::SampleMoments;
use super::Layout;
use crate::error::Result;
use crate::model::Normalizers;
use crate::simulate::PathRun;

/// `Var(M̂) / s.e.` below this counts as degenerate.
pub const NON_DEGENERACY_Z: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MIncrementRow {
    pub n: usize,
    /// `Ê[(M_{2n} − M_n)^2]`.
    pub mean_sq: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MConvergenceReport {
    pub rows: Vec<MIncrementRow>,
    /// Whether `mean_sq` is strictly decreasing along `rows`.
    pub residuals_decreasing: bool,
    pub m_hat_mean: f64,
    pub m_hat_mean_se: f64,
    pub m_hat_variance: f64,
    pub m_hat_variance_se: f64,
    /// `m_hat_variance / m_hat_variance_se`.
    pub non_degeneracy: f64,
    pub degenerate: bool,
}

/// Cauchy increments of `M_n` over every checkpoint pair `(n, 2n)`, and the
/// spread of `M̂` across paths.
pub fn m_convergence_report(runs: &[PathRun], norm: &Normalizers) -> Result<MConvergenceReport> {
    let layout = Layout::of(runs, norm)?;
    let mut rows = Vec::new();
    for (i, &n) in layout.checkpoints.iter().enumerate() {
        let Some(j) = n.checked_mul(2).and_then(|m| layout.index(m)) else {
            continue;
        };
        if n == 0 {
            continue;
        }
        let sq: Vec<f64> = runs
            .iter()
            .map(|r| {
                let d = norm.martingale(2 * n, r.s_at[j]) - norm.martingale(n, r.s_at[i]);
                d * d
            })
            .collect();
        let m = SampleMoments::from_slice(&sq);
        rows.push(MIncrementRow {
            n,
            mean_sq: m.mean,
            std_error: m.std_error_of_mean(),
        });
    }
    let residuals_decreasing = rows.windows(2).all(|w| w[1].mean_sq < w[0].mean_sq);

    let m_hat: Vec<f64> = runs.iter().map(|r| r.m_hat).collect();
    let mm = SampleMoments::from_slice(&m_hat);
    let dev_sq: Vec<f64> = m_hat.iter().map(|x| (x - mm.mean).powi(2)).collect();
    let m_hat_variance_se = SampleMoments::from_slice(&dev_sq).std_error_of_mean();
    let non_degeneracy = if m_hat_variance_se > 0.0 {
        mm.variance / m_hat_variance_se
    } else if mm.variance > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(MConvergenceReport {
        rows,
        residuals_decreasing,
        m_hat_mean: mm.mean,
        m_hat_mean_se: mm.std_error_of_mean(),
        m_hat_variance: mm.variance,
        m_hat_variance_se,
        non_degeneracy,
        degenerate: !(mm.variance > 0.0) || non_degeneracy < NON_DEGENERACY_Z,
    })
}
