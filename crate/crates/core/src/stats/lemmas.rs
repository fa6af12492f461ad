//! Numerical witnesses for the martingale tail lemmas and the variance floor.

use serde::{Deserialize, Serialize};

use super::Layout;
use crate::error::{Error, Result};
use crate::model::{compute_variance, ModelParams, Normalizers};
use crate::simulate::PathRun;
use crate::summation::CompensatedSum;

/// Where `Var(S_{k−1})` in `E[ξ_k^2]` comes from.
#[derive(Debug, Clone, Copy)]
pub enum XiSource<'a> {
    /// The exact second-moment recursion.
    Exact,
    /// Sample variances at the ensemble checkpoints. `Var(M_j)` is
    /// interpolated linearly in `ln j` between checkpoints, anchored at the
    /// exact `Var(S_1) = 1 − E[X_1]^2`, and held flat past the last one.
    Ensemble(&'a [PathRun]),
}

/// Estimated martingale tail second moments
/// `ŝ_{n+1}^2 = Σ_{k>n} (1 − E[X_k]^2 − Ê[ξ_k^2]) / a_k^2`.
///
/// The sum runs to `n_max`; beyond it the `A_∞^2 − A_{n_max}^2` tail is
/// added when known and the `ξ` part is dropped. Without `A_∞^2` the
/// denominators are the finite-horizon `A_{n_max}^2 − A_n^2`.
#[derive(Debug, Clone)]
pub struct TailVariance {
    n_max: usize,
    /// `A_{n_max}^2 − A_n^2 + tail` for `n = 0..=n_max`.
    denom: Vec<f64>,
    /// `Σ_{k=n}^{n_max} Ê[ξ_k^2] / a_k^2` for `n = 0..=n_max + 1`.
    xi_suffix: Vec<f64>,
    uncertainty: f64,
    uses_a_inf: bool,
}

fn ensemble_var_m(runs: &[PathRun], norm: &Normalizers, n_max: usize) -> Result<Vec<f64>> {
    let layout = Layout::of(runs, norm)?;
    let e1 = norm.ex(1);
    let mut anchors = vec![(1usize, (1.0 - e1) * (1.0 + e1))];
    for (idx, &c) in layout.checkpoints.iter().enumerate() {
        if c < 2 {
            continue;
        }
        let s: Vec<f64> = runs.iter().map(|r| r.s_at[idx] as f64).collect();
        let var = super::SampleMoments::from_slice(&s).variance;
        let a = norm.a(c);
        anchors.push((c, var / (a * a)));
    }
    let mut out = vec![0.0; n_max + 1];
    let mut seg = 0;
    for (j, slot) in out.iter_mut().enumerate().skip(1) {
        while seg + 1 < anchors.len() && anchors[seg + 1].0 <= j {
            seg += 1;
        }
        let (j0, v0) = anchors[seg];
        *slot = match anchors.get(seg + 1) {
            Some(&(j1, v1)) if j > j0 => {
                let w = (j as f64 / j0 as f64).ln() / (j1 as f64 / j0 as f64).ln();
                v0 + w * (v1 - v0)
            }
            _ => v0,
        };
    }
    Ok(out)
}

impl TailVariance {
    pub fn new(params: &ModelParams, norm: &Normalizers, source: XiSource<'_>) -> Result<Self> {
        let n_max = match source {
            XiSource::Exact => norm.n_max(),
            XiSource::Ensemble(runs) => Layout::of(runs, norm)?.n_max,
        };
        let var_s: Vec<f64> = match source {
            XiSource::Exact => compute_variance(params, &norm.ex_values()[..=n_max]),
            XiSource::Ensemble(runs) => ensemble_var_m(runs, norm, n_max)?
                .into_iter()
                .enumerate()
                .map(|(j, v)| v * norm.a(j) * norm.a(j))
                .collect(),
        };
        let mut xi_suffix = vec![0.0; n_max + 2];
        let mut acc = CompensatedSum::new();
        for k in (2..=n_max).rev() {
            let (slope, _) = params.step_coefficients(k - 1);
            let a = norm.a(k);
            acc += slope * slope * var_s[k - 1] / (a * a);
            xi_suffix[k] = acc.value();
        }
        xi_suffix[1] = acc.value();
        xi_suffix[0] = acc.value();

        let (tail, uncertainty, uses_a_inf) = match norm.a_inf() {
            Some(est) if est.n_used >= n_max => (
                est.value - norm.a2(n_max),
                est.tail_bound,
                true,
            ),
            _ => (0.0, 0.0, false),
        };
        let top = norm.a2(n_max);
        let denom = (0..=n_max).map(|n| top - norm.a2(n) + tail).collect();
        Ok(TailVariance {
            n_max,
            denom,
            xi_suffix,
            uncertainty,
            uses_a_inf,
        })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn uses_a_inf(&self) -> bool {
        self.uses_a_inf
    }

    /// Uncertainty attached to every denominator.
    pub fn uncertainty(&self) -> f64 {
        self.uncertainty
    }

    /// `A_∞^2 − A_n^2` (or its finite-horizon stand-in).
    pub fn denominator(&self, n: usize) -> f64 {
        self.denom[n]
    }

    /// `ŝ_{n+1}^2` for `n < n_max`.
    pub fn s2_after(&self, n: usize) -> f64 {
        self.denom[n] - self.xi_suffix[n + 1]
    }

    /// `ŝ_n^2` for `1 <= n <= n_max`.
    pub fn s2(&self, n: usize) -> f64 {
        self.s2_after(n - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Row {
    pub n: usize,
    pub s2_next: f64,
    pub denominator: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Report {
    pub rows: Vec<Lemma1Row>,
    pub uses_a_inf: bool,
    /// Grid points dropped because the denominator does not clear its
    /// uncertainty or lies outside `1..n_max`.
    pub skipped: Vec<usize>,
}

/// `ŝ_{n+1}^2 / (A_∞^2 − A_n^2)` at each grid point.
pub fn lemma1_ratio_report(tail: &TailVariance, grid: &[usize]) -> Lemma1Report {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for &n in grid {
        if n == 0 || n >= tail.n_max || !(tail.denominator(n) > tail.uncertainty) {
            skipped.push(n);
            continue;
        }
        let s2_next = tail.s2_after(n);
        let denominator = tail.denominator(n);
        rows.push(Lemma1Row {
            n,
            s2_next,
            denominator,
            ratio: s2_next / denominator,
        });
    }
    Lemma1Report {
        rows,
        uses_a_inf: tail.uses_a_inf,
        skipped,
    }
}

/// Partial sums at `n` with the last-increment-to-sum ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummabilityRow {
    pub n: usize,
    pub sum_inv_a2: f64,
    pub ratio_inv_a2: f64,
    pub sum_inv_a4: f64,
    pub ratio_inv_a4: f64,
    /// `Σ 1/(ŝ_k^4 a_k^4)`; `None` once some `ŝ_k^2 <= 0`.
    pub sum_inv_s4a4: Option<f64>,
    pub ratio_inv_s4a4: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummabilityReport {
    pub rows: Vec<SummabilityRow>,
}

/// Partial sums of `1/a_n^2`, `1/a_n^4` and, given tail variances,
/// `1/(ŝ_n^4 a_n^4)`. Rows at the grid points up to the horizon, plus the
/// horizon itself.
pub fn summability_report(
    norm: &Normalizers,
    tail: Option<&TailVariance>,
    grid: &[usize],
) -> SummabilityReport {
    let n_max = tail.map_or(norm.n_max(), |t| t.n_max.min(norm.n_max()));
    let mut wanted: Vec<usize> = grid
        .iter()
        .copied()
        .filter(|&n| n >= 1 && n <= n_max)
        .collect();
    wanted.push(n_max);
    wanted.sort_unstable();
    wanted.dedup();

    let (mut s2, mut s4, mut s4t) = (
        CompensatedSum::new(),
        CompensatedSum::new(),
        CompensatedSum::new(),
    );
    let mut s4t_defined = tail.is_some();
    let mut rows = Vec::with_capacity(wanted.len());
    let mut next = wanted.iter().peekable();
    for n in 1..=n_max {
        let a2 = norm.a(n) * norm.a(n);
        let inv2 = 1.0 / a2;
        let inv4 = inv2 * inv2;
        s2 += inv2;
        s4 += inv4;
        let mut inv_t = f64::NAN;
        if let Some(t) = tail {
            let sq = t.s2(n);
            if sq > 0.0 && s4t_defined {
                inv_t = inv4 / (sq * sq);
                s4t += inv_t;
            } else {
                s4t_defined = false;
            }
        }
        if next.peek() == Some(&&n) {
            next.next();
            let (sum2, sum4, sum4t) = (s2.value(), s4.value(), s4t.value());
            rows.push(SummabilityRow {
                n,
                sum_inv_a2: sum2,
                ratio_inv_a2: inv2 / sum2,
                sum_inv_a4: sum4,
                ratio_inv_a4: inv4 / sum4,
                sum_inv_s4a4: s4t_defined.then_some(sum4t),
                ratio_inv_s4a4: s4t_defined.then_some(inv_t / sum4t),
            });
        }
    }
    SummabilityReport { rows }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceFloorRow {
    pub n: usize,
    /// `1 − E[X_n]^2` from the exact moments.
    pub exact: f64,
    /// `1 − X̄_n^2` over paths with `n − 1` and `n` both checkpoints.
    pub ensemble: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceFloorReport {
    pub range: (usize, usize),
    pub rows: Vec<VarianceFloorRow>,
    /// `min Var[X_n]` over every `n` in the range.
    pub floor: f64,
    pub floor_at: usize,
}

pub fn variance_floor_report(
    norm: &Normalizers,
    range: (usize, usize),
    grid: &[usize],
    runs: Option<&[PathRun]>,
) -> Result<VarianceFloorReport> {
    let lo = range.0.max(1);
    let hi = range.1.min(norm.n_max());
    if lo > hi {
        return Err(Error::WindowEmpty {
            lo: range.0,
            hi: range.1,
        });
    }
    let var_x = |n: usize| {
        let e = norm.ex(n);
        (1.0 - e) * (1.0 + e)
    };
    let (floor_at, floor) = (lo..=hi)
        .map(|n| (n, var_x(n)))
        .fold((lo, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });

    let layout = runs.map(|r| Layout::of(r, norm)).transpose()?;
    let mut rows = Vec::new();
    for &n in grid.iter().filter(|&&n| n >= lo && n <= hi) {
        let ensemble = match (runs, layout) {
            (Some(runs), Some(layout)) => {
                let pair = (layout.index(n - 1).or((n == 1).then_some(usize::MAX)), layout.index(n));
                match pair {
                    (Some(i), Some(j)) => {
                        let sum: i64 = runs
                            .iter()
                            .map(|r| r.s_at[j] - if i == usize::MAX { 0 } else { r.s_at[i] })
                            .sum();
                        let mean = sum as f64 / runs.len() as f64;
                        Some((1.0 - mean) * (1.0 + mean))
                    }
                    _ => None,
                }
            }
            _ => None,
        };
        rows.push(VarianceFloorRow {
            n,
            exact: var_x(n),
            ensemble,
        });
    }
    Ok(VarianceFloorReport {
        range: (lo, hi),
        rows,
        floor,
        floor_at,
    })
}
