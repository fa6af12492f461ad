//! Verdicts from ensembles: normality and envelope statistics, convergence
//! of the martingale, and numerical witnesses for the tail lemmas.

mod clt;
mod ks;
mod lemmas;
mod lil;
mod mconv;
mod moments;
mod normal;

pub use clt::{clt_report, kubota_takei_variance, normalized_samples, CltOptions, CltReport, CltRow, ScaleKind};
pub use ks::{kolmogorov_sf, ks_test_normal, ks_test_normal_lattice, two_sample_ks, KsResult, MIN_KS_SAMPLES};
pub use lemmas::{
    lemma1_ratio_report, summability_report, variance_floor_report, Lemma1Report, Lemma1Row,
    SummabilityReport, SummabilityRow, TailVariance, VarianceFloorReport, VarianceFloorRow,
    XiSource,
};
pub use lil::{lil_report, LilExclusion, LilOptions, LilPath, LilQuantile, LilReport, LilSummary};
pub use mconv::{m_convergence_report, MConvergenceReport, MIncrementRow};
pub use moments::{quantile_sorted, SampleMoments};
pub use normal::normal_cdf;

use crate::error::{Error, Result};
use crate::model::Normalizers;
use crate::simulate::PathRun;

/// Shared checkpoint grid and horizon of an ensemble.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Layout<'a> {
    pub checkpoints: &'a [usize],
    pub n_max: usize,
}

impl<'a> Layout<'a> {
    pub fn of(runs: &'a [PathRun], norm: &Normalizers) -> Result<Self> {
        let first = runs.first().ok_or(Error::TooFewSamples { got: 0, need: 1 })?;
        let same = runs
            .iter()
            .all(|r| r.n_max == first.n_max && r.checkpoints[..] == first.checkpoints[..]);
        if !same {
            return Err(Error::InvalidCheckpoints(
                "runs disagree on n_max or checkpoints".into(),
            ));
        }
        if norm.n_max() < first.n_max {
            return Err(Error::NormalizerTooShort {
                need: first.n_max,
                have: norm.n_max(),
            });
        }
        Ok(Layout {
            checkpoints: &first.checkpoints,
            n_max: first.n_max,
        })
    }

    pub fn index(&self, n: usize) -> Option<usize> {
        self.checkpoints.binary_search(&n).ok()
    }
}

/// `S_n − E[S_n] − a_n M̂` per path at checkpoint index `idx`.
pub(crate) fn drift_residuals(runs: &[PathRun], norm: &Normalizers, n: usize, idx: usize) -> Vec<f64> {
    let (es, a) = (norm.es(n), norm.a(n));
    runs.iter()
        .map(|r| r.s_at[idx] as f64 - es - a * r.m_hat)
        .collect()
}
