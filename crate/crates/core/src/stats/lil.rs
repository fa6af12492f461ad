use serde::{Deserialize, Serialize};

use super::ks::{two_sample_ks, KsResult, MIN_KS_SAMPLES};
use super::moments::quantile_sorted;
use super::{drift_residuals, Layout};
use crate::error::{Error, Result};
use crate::model::{envelope_from_variance, Normalizers, DEFAULT_ENVELOPE_GUARD};
use crate::simulate::PathRun;

/// Levels reported for the per-path suprema.
pub const LIL_QUANTILE_LEVELS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LilOptions {
    pub window: (usize, usize),
    pub eps_out: f64,
    pub eps_in: f64,
    pub guard: f64,
    /// Use `A_{n_max}^2` in place of `A_∞^2`, as for the CLT.
    pub drift_horizon: bool,
}

impl LilOptions {
    pub fn new(window: (usize, usize), eps_out: f64, eps_in: f64) -> Self {
        LilOptions {
            window,
            eps_out,
            eps_in,
            guard: DEFAULT_ENVELOPE_GUARD,
            drift_horizon: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LilExclusion {
    pub n: usize,
    pub reason: String,
}

/// Extremes of `R_n` over the window for one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LilPath {
    /// `sup R_n`.
    pub sup_plus: f64,
    /// `sup (−R_n)`.
    pub sup_minus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LilQuantile {
    pub level: f64,
    pub plus: f64,
    pub minus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LilSummary {
    pub quantiles: Vec<LilQuantile>,
    /// Fraction of paths with `sup > 1 + eps_out`.
    pub exceed_plus: f64,
    pub exceed_minus: f64,
    /// Fraction of paths with `sup >= 1 − eps_in`.
    pub reach_plus: f64,
    pub reach_minus: f64,
    /// Two-sample test of `sup R` against `sup (−R)`; `None` below the
    /// minimum sample size.
    pub symmetry: Option<KsResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LilReport {
    pub window: (usize, usize),
    pub used: Vec<usize>,
    pub excluded: Vec<LilExclusion>,
    pub paths: Vec<LilPath>,
    pub summary: LilSummary,
}

fn fraction(xs: &[f64], pred: impl Fn(f64) -> bool) -> f64 {
    xs.iter().filter(|&&x| pred(x)).count() as f64 / xs.len() as f64
}

/// Envelope statistics of `R_n = (S_n − E[S_n] − a_n M̂) / envelope(n)`.
pub fn lil_report(runs: &[PathRun], norm: &Normalizers, opts: &LilOptions) -> Result<LilReport> {
    let layout = Layout::of(runs, norm)?;
    let (lo, hi) = opts.window;
    let mut used = Vec::new();
    let mut excluded = Vec::new();
    let mut paths = vec![
        LilPath {
            sup_plus: f64::NEG_INFINITY,
            sup_minus: f64::NEG_INFINITY,
        };
        runs.len()
    ];
    for (idx, &n) in layout.checkpoints.iter().enumerate() {
        if n < lo || n > hi {
            continue;
        }
        let envelope = if opts.drift_horizon {
            let t = norm.a2(layout.n_max) - norm.a2(n);
            envelope_from_variance(n, norm.a(n), t, 0.0, opts.guard)
        } else {
            norm.lil_envelope(n, opts.guard)
        };
        let envelope = match envelope {
            Ok(e) => e,
            Err(e @ (Error::ScaleDegenerate { .. } | Error::EnvelopeUndefined { .. })) => {
                excluded.push(LilExclusion {
                    n,
                    reason: e.to_string(),
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        used.push(n);
        for (path, resid) in paths.iter_mut().zip(drift_residuals(runs, norm, n, idx)) {
            let r = resid / envelope;
            path.sup_plus = path.sup_plus.max(r);
            path.sup_minus = path.sup_minus.max(-r);
        }
    }
    if used.is_empty() {
        return Err(Error::WindowEmpty { lo, hi });
    }

    let mut plus: Vec<f64> = paths.iter().map(|p| p.sup_plus).collect();
    let mut minus: Vec<f64> = paths.iter().map(|p| p.sup_minus).collect();
    plus.sort_by(f64::total_cmp);
    minus.sort_by(f64::total_cmp);
    let quantiles = LIL_QUANTILE_LEVELS
        .iter()
        .map(|&level| LilQuantile {
            level,
            plus: quantile_sorted(&plus, level),
            minus: quantile_sorted(&minus, level),
        })
        .collect();
    let out = 1.0 + opts.eps_out;
    let reach = 1.0 - opts.eps_in;
    let symmetry = if runs.len() >= MIN_KS_SAMPLES {
        Some(two_sample_ks(&plus, &minus)?)
    } else {
        None
    };
    let summary = LilSummary {
        quantiles,
        exceed_plus: fraction(&plus, |x| x > out),
        exceed_minus: fraction(&minus, |x| x > out),
        reach_plus: fraction(&plus, |x| x >= reach),
        reach_minus: fraction(&minus, |x| x >= reach),
        symmetry,
    };
    Ok(LilReport {
        window: opts.window,
        used,
        excluded,
        paths,
        summary,
    })
}
