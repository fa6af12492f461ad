use serde::{Deserialize, Serialize};

use super::ks::{ks_test_normal, ks_test_normal_lattice, MIN_KS_SAMPLES};
use super::moments::SampleMoments;
use super::{drift_residuals, Layout};
use crate::error::{Error, Result};
use crate::model::{scale_from_variance, ModelParams, Normalizers};
use crate::simulate::PathRun;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleKind {
    /// `(S_n − E[S_n] − a_n M̂) / (a_n √(A_∞^2 − A_n^2))`.
    Thm3Strong,
    /// `(S_n − E[S_n]) / (a_n A_n)`.
    Thm1Weak,
    /// `(S_n − E[S_n] − a_n M̂) / √(n σ^2)` with the limiting variance
    /// `σ^2 = (1 − ε^2) / (2γ − 1)`.
    KubotaTakeiRootN,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltOptions {
    pub scale_kind: ScaleKind,
    /// Replace `A_∞^2` by `A_{n_max}^2` in drift-subtracted scales.
    ///
    /// `M̂ = M_{n_max}` only carries the increments up to `n_max`, so
    /// `S_n − E[S_n] − a_n M̂` has variance `a_n^2 (A_{n_max}^2 − A_n^2)`
    /// (up to the `ξ` corrections), not `a_n^2 (A_∞^2 − A_n^2)`.
    pub drift_horizon: bool,
    /// Drift-subtracted rows need `n · separation_factor <= n_max`.
    pub separation_factor: usize,
    /// Restrict to these checkpoints; `None` uses all of them.
    pub checkpoints: Option<Vec<usize>>,
}

impl CltOptions {
    pub fn new(scale_kind: ScaleKind) -> Self {
        CltOptions {
            scale_kind,
            drift_horizon: true,
            separation_factor: 100,
            checkpoints: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltRow {
    pub n: usize,
    pub sample_count: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub ks_statistic: f64,
    pub ks_p_value: f64,
    pub scale: f64,
    /// Spacing of the lattice carrying `Z_n` when the KS test was
    /// lattice-corrected (no drift subtracted, so `Z_n ∈ (2Z + n − E[S_n]) / scale`).
    pub lattice_step: Option<f64>,
    /// `(A_{n_max}^2 − A_n^2) / (A_∞^2 − A_n^2)` when `A_∞^2` is known.
    pub horizon_factor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub scale_kind: ScaleKind,
    pub drift_horizon: bool,
    pub rows: Vec<CltRow>,
    /// Checkpoints left out (n = 0, or too close to `n_max`).
    pub skipped: Vec<usize>,
}

/// `(1 − ε^2) / (2γ − 1)` from the limits of `α` and `β`, with
/// `γ = (2p − 1) lim α` and `ε = 2 lim β − 1`.
pub fn kubota_takei_variance(params: &ModelParams) -> Result<f64> {
    let (a_lo, a_hi) = params.alpha.limits()?;
    let (b_lo, b_hi) = params.beta.limits()?;
    if a_lo != a_hi || b_lo != b_hi {
        return Err(Error::NotApplicable(
            "root-n scale needs convergent alpha and beta".into(),
        ));
    }
    let gamma = (2.0 * params.p - 1.0) * a_lo;
    let eps = 2.0 * b_lo - 1.0;
    if !(2.0 * gamma - 1.0 > 0.0) {
        return Err(Error::NotApplicable(format!(
            "root-n scale needs (2p-1) lim alpha > 1/2, got {gamma}"
        )));
    }
    Ok((1.0 - eps * eps) / (2.0 * gamma - 1.0))
}

fn horizon_factor(norm: &Normalizers, n: usize, n_max: usize) -> Option<f64> {
    norm.a_inf2()
        .map(|inf| (norm.a2(n_max) - norm.a2(n)) / (inf - norm.a2(n)))
}

struct Scaler<'a> {
    norm: &'a Normalizers,
    opts: &'a CltOptions,
    n_max: usize,
    root_n_variance: Option<f64>,
}

impl Scaler<'_> {
    fn subtracts_drift(&self) -> bool {
        self.opts.scale_kind != ScaleKind::Thm1Weak
    }

    fn usable(&self, n: usize) -> bool {
        if n == 0 {
            return false;
        }
        !self.subtracts_drift() || n.saturating_mul(self.opts.separation_factor.max(1)) <= self.n_max
    }

    fn scale(&self, n: usize) -> Result<f64> {
        let norm = self.norm;
        match self.opts.scale_kind {
            ScaleKind::Thm1Weak => norm.weak_clt_scale(n),
            ScaleKind::Thm3Strong if self.opts.drift_horizon => {
                let t = norm.a2(self.n_max) - norm.a2(n);
                scale_from_variance(n, norm.a(n), t, 0.0)
            }
            ScaleKind::Thm3Strong => norm.fluctuation_scale(n),
            ScaleKind::KubotaTakeiRootN => {
                let mut var = n as f64 * self.root_n_variance.unwrap_or(f64::NAN);
                if self.opts.drift_horizon {
                    let f = horizon_factor(norm, n, self.n_max).ok_or_else(|| {
                        Error::NotApplicable("horizon correction needs A_inf^2".into())
                    })?;
                    var *= f;
                }
                scale_from_variance(n, 1.0, var, 0.0)
            }
        }
    }

    fn samples(&self, runs: &[PathRun], n: usize, idx: usize) -> Result<Vec<f64>> {
        let scale = self.scale(n)?;
        let raw = if self.subtracts_drift() {
            drift_residuals(runs, self.norm, n, idx)
        } else {
            let es = self.norm.es(n);
            runs.iter().map(|r| r.s_at[idx] as f64 - es).collect()
        };
        Ok(raw.into_iter().map(|x| x / scale).collect())
    }
}

fn scaler<'a>(
    runs: &'a [PathRun],
    norm: &'a Normalizers,
    params: &ModelParams,
    opts: &'a CltOptions,
) -> Result<(Scaler<'a>, Layout<'a>)> {
    let layout = Layout::of(runs, norm)?;
    let root_n_variance = match opts.scale_kind {
        ScaleKind::KubotaTakeiRootN => Some(kubota_takei_variance(params)?),
        _ => None,
    };
    Ok((
        Scaler {
            norm,
            opts,
            n_max: layout.n_max,
            root_n_variance,
        },
        layout,
    ))
}

/// The normalized samples `Z_n` at checkpoint `n`.
pub fn normalized_samples(
    runs: &[PathRun],
    norm: &Normalizers,
    params: &ModelParams,
    opts: &CltOptions,
    n: usize,
) -> Result<Vec<f64>> {
    let (scaler, layout) = scaler(runs, norm, params, opts)?;
    let idx = layout
        .index(n)
        .ok_or_else(|| Error::InvalidCheckpoints(format!("{n} is not a checkpoint")))?;
    scaler.samples(runs, n, idx)
}

pub fn clt_report(
    runs: &[PathRun],
    norm: &Normalizers,
    params: &ModelParams,
    opts: &CltOptions,
) -> Result<CltReport> {
    let (scaler, layout) = scaler(runs, norm, params, opts)?;
    if runs.len() < MIN_KS_SAMPLES {
        return Err(Error::TooFewSamples {
            got: runs.len(),
            need: MIN_KS_SAMPLES,
        });
    }
    let wanted: Vec<usize> = match &opts.checkpoints {
        Some(list) => {
            if let Some(&n) = list.iter().find(|&&n| layout.index(n).is_none()) {
                return Err(Error::InvalidCheckpoints(format!("{n} is not a checkpoint")));
            }
            list.clone()
        }
        None => layout.checkpoints.to_vec(),
    };
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for n in wanted {
        if !scaler.usable(n) {
            skipped.push(n);
            continue;
        }
        let idx = layout.index(n).expect("checked above");
        let z = scaler.samples(runs, n, idx)?;
        let scale = scaler.scale(n)?;
        let m = SampleMoments::from_slice(&z);
        let lattice_step = (!scaler.subtracts_drift()).then_some(2.0 / scale);
        let ks = match lattice_step {
            Some(step) => ks_test_normal_lattice(&z, step)?,
            None => ks_test_normal(&z)?,
        };
        rows.push(CltRow {
            n,
            sample_count: m.count,
            mean: m.mean,
            variance: m.variance,
            skewness: m.skewness,
            excess_kurtosis: m.excess_kurtosis,
            ks_statistic: ks.statistic,
            ks_p_value: ks.p_value,
            scale,
            lattice_step,
            horizon_factor: if scaler.subtracts_drift() {
                horizon_factor(norm, n, layout.n_max)
            } else {
                None
            },
        });
    }
    Ok(CltReport {
        scale_kind: opts.scale_kind,
        drift_horizon: opts.drift_horizon,
        rows,
        skipped,
    })
}
