//! Exact moment recursions and the normalizing sequences built on them.
//!
//! All arrays are indexed by `n` directly and carry the `n = 0` conventions
//! `a_0 = 1`, `E[X_0] = E[S_0] = 0`, `A_0^2 = B_0^2 = 0`.

use serde::{Deserialize, Serialize};

use super::params::ModelParams;
use crate::error::{Error, Result};
use crate::summation::CompensatedSum;

/// Half-width of the excluded band around `t = 1/e` and `t = e` for the
/// iterated-logarithm envelope.
pub const DEFAULT_ENVELOPE_GUARD: f64 = 1e-3;

fn check_n_max(n_max: usize) -> Result<()> {
    if n_max == 0 {
        Err(Error::InvalidParameter("n_max must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// `a_n = Π_{k=1}^{n-1} (1 + (2p − 1) α_{k+1} / k)` for `n = 0..=n_max`.
pub fn compute_a(params: &ModelParams, n_max: usize) -> Result<Vec<f64>> {
    check_n_max(n_max)?;
    let mut a = Vec::with_capacity(n_max + 1);
    a.push(1.0);
    a.push(1.0);
    for n in 1..n_max {
        let factor = 1.0 + params.memory_gain(n + 1) / n as f64;
        if factor <= 0.0 {
            return Err(Error::DegenerateNormalizer { step: n, factor });
        }
        a.push(a[n] * factor);
    }
    Ok(a)
}

/// `(E[X_n], E[S_n])` for `n = 0..=n_max` from the conditional-mean
/// recursion taken in expectation.
pub fn compute_moments(params: &ModelParams, n_max: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    check_n_max(n_max)?;
    let mut ex = Vec::with_capacity(n_max + 1);
    let mut es = Vec::with_capacity(n_max + 1);
    ex.push(0.0);
    es.push(0.0);
    let mut running = CompensatedSum::new();
    for n in 0..n_max {
        let next = params.conditional_mean(n, es[n]);
        running += next;
        ex.push(next);
        es.push(running.value());
    }
    Ok((ex, es))
}

/// Running sums `A_n^2 = Σ (1 − E[X_k]^2) / a_k^2` and `B_n^2 = Σ 1 / a_k^2`.
pub fn compute_a2_b2(a: &[f64], ex: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if a.len() != ex.len() || a.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "a and E[X] arrays differ in length ({} vs {})",
            a.len(),
            ex.len()
        )));
    }
    let mut a2 = Vec::with_capacity(a.len());
    let mut b2 = Vec::with_capacity(a.len());
    a2.push(0.0);
    b2.push(0.0);
    let mut sum_a = CompensatedSum::new();
    let mut sum_b = CompensatedSum::new();
    for k in 1..a.len() {
        let inv = 1.0 / (a[k] * a[k]);
        sum_a += (1.0 - ex[k]) * (1.0 + ex[k]) * inv;
        sum_b += inv;
        a2.push(sum_a.value());
        b2.push(sum_b.value());
    }
    Ok((a2, b2))
}

/// Exact `Var[S_n]` for `n = 0..=n_max`.
///
/// Uses `Cov(S_n, X_{n+1}) = slope_n Var[S_n]`, so
/// `Var[S_{n+1}] = (1 + 2 slope_n) Var[S_n] + 1 − E[X_{n+1}]^2`.
pub fn compute_variance(params: &ModelParams, ex: &[f64]) -> Vec<f64> {
    let mut var = Vec::with_capacity(ex.len());
    var.push(0.0);
    for n in 0..ex.len().saturating_sub(1) {
        let (slope, _) = params.step_coefficients(n);
        let next = ex[n + 1];
        let v = (1.0 + 2.0 * slope) * var[n] + (1.0 - next) * (1.0 + next);
        var.push(v.max(0.0));
    }
    var
}

/// Stopping rule for the `A_∞^2` extension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AInfOptions {
    /// Stop once the certified tail is at most `rel_tol * A_N^2` ...
    pub rel_tol: f64,
    /// ... or at most `abs_tol`.
    pub abs_tol: f64,
    /// Never stop before this many terms.
    pub min_terms: usize,
    /// Give up with `BudgetExceeded` beyond this many terms.
    pub max_terms: usize,
}

impl Default for AInfOptions {
    fn default() -> Self {
        Self {
            rel_tol: 5e-3,
            abs_tol: 1e-7,
            min_terms: 1,
            max_terms: 200_000_000,
        }
    }
}

impl AInfOptions {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }
}

/// Certified enclosure `A_∞^2 ∈ [lower, lower + tail_bound]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AInfEstimate {
    /// Midpoint of the enclosure.
    pub value: f64,
    /// Width of the enclosure: a certified bound on `A_∞^2 − A_{n_used}^2`.
    pub tail_bound: f64,
    /// `A_{n_used}^2`.
    pub lower: f64,
    pub n_used: usize,
}

impl AInfEstimate {
    pub fn upper(&self) -> f64 {
        self.lower + self.tail_bound
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper()
    }
}

/// Certified bound on `Σ_{k>n} (1 − E[X_k]^2) / a_k^2`.
///
/// With `g = inf_{l > n} (2p − 1) α_l > 1/2`, `a_k >= a_n Π_{l=n}^{k-1} (1 + g/l)`
/// and `ln(1 + x) >= x − x^2/2` give `a_k >= a_n (k/n)^g e^{-g^2/(2(n-1))}`,
/// and comparison with `∫_n^∞ x^{-2g} dx` bounds the tail by
/// `n e^{g^2/(n-1)} / (a_n^2 (2g − 1))`.
fn tail_bound(n: usize, a_n: f64, gain: f64) -> f64 {
    debug_assert!(n >= 2 && gain > 0.5);
    let n_f = n as f64;
    n_f / (a_n * a_n * (2.0 * gain - 1.0)) * (gain * gain / (n_f - 1.0)).exp()
}

/// Extends the `A_n^2` sum until the certified tail bound meets the tolerance.
///
/// Fails with `NotSummable` when `(2p − 1) liminf α <= 1/2`.
pub fn estimate_a_inf(params: &ModelParams, opts: &AInfOptions) -> Result<AInfEstimate> {
    if !(opts.rel_tol >= 0.0 && opts.abs_tol >= 0.0) {
        return Err(Error::InvalidParameter("A_inf tolerances must be non-negative".into()));
    }
    let (alpha_inf, _) = params.alpha.limits()?;
    let asymptotic_gain = (2.0 * params.p - 1.0) * alpha_inf;
    if asymptotic_gain <= 0.5 {
        return Err(Error::NotSummable {
            gain: asymptotic_gain,
        });
    }

    const CHECK_EVERY: usize = 256;
    let start = opts.min_terms.max(2);
    let slope_factor = 2.0 * params.p - 1.0;

    let mut n = 1usize;
    let mut a = 1.0f64;
    let mut es = CompensatedSum::new();
    let ex1 = params.first_step_mean().clamp(-1.0, 1.0);
    es += ex1;
    let mut a2 = CompensatedSum::new();
    a2 += (1.0 - ex1) * (1.0 + ex1);
    let mut last_bound = f64::INFINITY;

    loop {
        if n >= start && (n == start || n % CHECK_EVERY == 0) {
            let gain = slope_factor * params.alpha.inf_from(n + 1)?;
            if gain > 0.5 {
                let bound = tail_bound(n, a, gain);
                last_bound = bound;
                let sum = a2.value();
                if bound <= opts.rel_tol * sum || bound <= opts.abs_tol {
                    return Ok(AInfEstimate {
                        value: sum + 0.5 * bound,
                        tail_bound: bound,
                        lower: sum,
                        n_used: n,
                    });
                }
            }
        }
        if n >= opts.max_terms {
            return Err(Error::BudgetExceeded {
                cap: opts.max_terms,
                tail_bound: last_bound,
            });
        }
        let factor = 1.0 + params.memory_gain(n + 1) / n as f64;
        if factor <= 0.0 {
            return Err(Error::DegenerateNormalizer { step: n, factor });
        }
        let ex = params.conditional_mean(n, es.value());
        a *= factor;
        es += ex;
        a2 += (1.0 - ex) * (1.0 + ex) / (a * a);
        n += 1;
    }
}

/// Exact normalizing arrays for `n = 0..=n_max`, plus an optional `A_∞^2`
/// enclosure that starts no earlier than `n_max`.
#[derive(Debug, Clone)]
pub struct Normalizers {
    n_max: usize,
    a: Vec<f64>,
    ex: Vec<f64>,
    es: Vec<f64>,
    a2: Vec<f64>,
    b2: Vec<f64>,
    sum_inv_a4: f64,
    a_inf: Option<AInfEstimate>,
}

impl Normalizers {
    pub fn compute(params: &ModelParams, n_max: usize) -> Result<Self> {
        let a = compute_a(params, n_max)?;
        let (ex, es) = compute_moments(params, n_max)?;
        let (a2, b2) = compute_a2_b2(&a, &ex)?;
        let sum_inv_a4 = a[1..].iter().map(|x| (x * x).powi(-2)).sum::<CompensatedSum>().value();
        Ok(Self {
            n_max,
            a,
            ex,
            es,
            a2,
            b2,
            sum_inv_a4,
            a_inf: None,
        })
    }

    /// Arrays plus the `A_∞^2` enclosure; fails when the sum diverges.
    pub fn compute_with_a_inf(params: &ModelParams, n_max: usize, opts: &AInfOptions) -> Result<Self> {
        let mut norm = Self::compute(params, n_max)?;
        norm.attach_a_inf(params, opts)?;
        Ok(norm)
    }

    pub fn attach_a_inf(&mut self, params: &ModelParams, opts: &AInfOptions) -> Result<()> {
        let opts = AInfOptions {
            min_terms: opts.min_terms.max(self.n_max),
            max_terms: opts.max_terms.max(self.n_max),
            ..*opts
        };
        self.a_inf = Some(estimate_a_inf(params, &opts)?);
        Ok(())
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    fn check(&self, n: usize) -> Result<()> {
        if n > self.n_max {
            Err(Error::NormalizerTooShort {
                need: n,
                have: self.n_max,
            })
        } else {
            Ok(())
        }
    }

    #[inline]
    pub fn a(&self, n: usize) -> f64 {
        self.a[n]
    }
    #[inline]
    pub fn ex(&self, n: usize) -> f64 {
        self.ex[n]
    }
    #[inline]
    pub fn es(&self, n: usize) -> f64 {
        self.es[n]
    }
    #[inline]
    pub fn a2(&self, n: usize) -> f64 {
        self.a2[n]
    }
    #[inline]
    pub fn b2(&self, n: usize) -> f64 {
        self.b2[n]
    }

    pub fn a_values(&self) -> &[f64] {
        &self.a
    }
    pub fn ex_values(&self) -> &[f64] {
        &self.ex
    }
    pub fn es_values(&self) -> &[f64] {
        &self.es
    }
    pub fn a2_values(&self) -> &[f64] {
        &self.a2
    }
    pub fn b2_values(&self) -> &[f64] {
        &self.b2
    }

    /// `Σ_{k <= n_max} 1 / a_k^4`.
    pub fn sum_inv_a4(&self) -> f64 {
        self.sum_inv_a4
    }

    pub fn a_inf(&self) -> Option<&AInfEstimate> {
        self.a_inf.as_ref()
    }

    pub fn a_inf2(&self) -> Option<f64> {
        self.a_inf.map(|e| e.value)
    }

    /// Certified bound on `A_∞^2 − A_{n_max}^2`.
    pub fn a_inf_tail_bound(&self) -> Option<f64> {
        self.a_inf.map(|e| e.upper() - self.a2[self.n_max])
    }

    /// `A_∞^2 − A_n^2` together with the uncertainty of `A_∞^2`.
    pub fn residual_variance(&self, n: usize) -> Result<(f64, f64)> {
        self.check(n)?;
        let est = self.a_inf.ok_or_else(|| {
            Error::NotApplicable("A_inf^2 has not been estimated for these normalizers".into())
        })?;
        Ok((est.value - self.a2[n], est.tail_bound))
    }

    /// `a_n √(A_∞^2 − A_n^2)`, the drift-subtracted fluctuation scale.
    pub fn fluctuation_scale(&self, n: usize) -> Result<f64> {
        let (t, uncertainty) = self.residual_variance(n)?;
        scale_from_variance(n, self.a[n], t, uncertainty)
    }

    /// `a_n √(2 t log|log t|)` with `t = A_∞^2 − A_n^2`.
    pub fn lil_envelope(&self, n: usize, guard: f64) -> Result<f64> {
        let (t, uncertainty) = self.residual_variance(n)?;
        envelope_from_variance(n, self.a[n], t, uncertainty, guard)
    }

    /// `a_n A_n`, the weak-elephant CLT scale.
    pub fn weak_clt_scale(&self, n: usize) -> Result<f64> {
        self.check(n)?;
        let a2 = self.a2[n];
        if !(a2 > 0.0) {
            return Err(Error::ScaleDegenerate {
                n,
                residual: a2,
                uncertainty: 0.0,
            });
        }
        Ok(self.a[n] * a2.sqrt())
    }

    /// `a_n A_n √(2 log log A_n)` with `A_n = √(A_n^2)`.
    pub fn weak_lil_scale(&self, n: usize) -> Result<f64> {
        let clt = self.weak_clt_scale(n)?;
        let a_n = self.a2[n].sqrt();
        let loglog = a_n.ln().ln();
        if !(a_n > std::f64::consts::E && loglog > 0.0) {
            return Err(Error::EnvelopeUndefined { n, t: a_n });
        }
        Ok(clt * (2.0 * loglog).sqrt())
    }

    /// `(a_n A_n, a_n A_n √(2 log log A_n))`.
    pub fn weak_scales(&self, n: usize) -> Result<(f64, f64)> {
        Ok((self.weak_clt_scale(n)?, self.weak_lil_scale(n)?))
    }

    /// `M_n = (S_n − E[S_n]) / a_n`.
    #[inline]
    pub fn martingale(&self, n: usize, s: i64) -> f64 {
        (s as f64 - self.es[n]) / self.a[n]
    }
}

/// `a_n √t`, rejecting `t` that does not clear the stated uncertainty.
pub fn scale_from_variance(n: usize, a_n: f64, t: f64, uncertainty: f64) -> Result<f64> {
    if !(t > uncertainty && t > 0.0) {
        return Err(Error::ScaleDegenerate {
            n,
            residual: t,
            uncertainty,
        });
    }
    Ok(a_n * t.sqrt())
}

/// `a_n √(2 t log|log t|)`.
///
/// `log|log t|` is non-positive on `[1/e, e]`; that interval, widened by the
/// relative `guard` at both ends, is reported as `EnvelopeUndefined`.
pub fn envelope_from_variance(n: usize, a_n: f64, t: f64, uncertainty: f64, guard: f64) -> Result<f64> {
    scale_from_variance(n, a_n, t, uncertainty)?;
    let e = std::f64::consts::E;
    let defined = t < (1.0 - guard) / e || t > e * (1.0 + guard);
    let loglog = t.ln().abs().ln();
    if !defined || !(loglog > 0.0) {
        return Err(Error::EnvelopeUndefined { n, t });
    }
    Ok(a_n * (2.0 * t * loglog).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SequenceSpec;
    use crate::special::ln_constant_gain_normalizer;

    fn strong() -> ModelParams {
        ModelParams::constant(0.9, 0.5, 0.8, 0.7).unwrap()
    }

    #[test]
    fn telescoping_product_for_unit_gain() {
        let params = ModelParams::constant(1.0, 1.0, 1.0, 0.5).unwrap();
        let a = compute_a(&params, 10).unwrap();
        assert_eq!(a[0], 1.0);
        assert_eq!(a[1], 1.0);
        assert!((a[10] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn half_repeat_probability_freezes_a() {
        let params = ModelParams::new(
            0.5,
            0.3,
            SequenceSpec::Periodic {
                values: vec![0.1, 0.9],
            },
            SequenceSpec::constant(0.2),
        )
        .unwrap();
        let a = compute_a(&params, 100).unwrap();
        assert!(a.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn constant_alpha_matches_log_gamma() {
        let params = strong();
        let a = compute_a(&params, 1000).unwrap();
        let closed = ln_constant_gain_normalizer(1000, 0.8 * 0.8).exp();
        assert!(((a[1000] - closed) / closed).abs() < 1e-10);
    }

    #[test]
    fn degenerate_first_factor() {
        let params = ModelParams::constant(0.0, 0.5, 1.0, 0.5).unwrap();
        assert!(matches!(
            compute_a(&params, 5),
            Err(Error::DegenerateNormalizer { step: 1, .. })
        ));
    }

    #[test]
    fn deterministic_walk_moments() {
        let params = ModelParams::constant(1.0, 1.0, 1.0, 0.5).unwrap();
        let (ex, es) = compute_moments(&params, 50).unwrap();
        for n in 1..=50 {
            assert_eq!(ex[n], 1.0);
            assert!((es[n] - n as f64).abs() < 1e-12);
        }
        let a = compute_a(&params, 50).unwrap();
        let (a2, _) = compute_a2_b2(&a, &ex).unwrap();
        assert!(a2.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pure_drift_moments() {
        let params = ModelParams::constant(0.9, 0.5, 0.0, 0.7).unwrap();
        let (ex, es) = compute_moments(&params, 200).unwrap();
        for n in 1..=200 {
            assert!((ex[n] - 0.4).abs() < 1e-15);
            assert!((es[n] - 0.4 * n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn five_step_moments_by_hand() {
        // E[X1] = 0.2 * 0.4 = 0.08; E[X_{n+1}] = 0.64 ES_n / n + 0.08
        let (ex, es) = compute_moments(&strong(), 5).unwrap();
        let mut s = 0.08;
        let mut expected = vec![0.08];
        for n in 1..5 {
            let x = 0.64 * s / n as f64 + 0.08;
            expected.push(x);
            s += x;
        }
        for n in 1..=5 {
            assert!((ex[n] - expected[n - 1]).abs() < 1e-15);
        }
        assert!((es[5] - s).abs() < 1e-14);
    }

    #[test]
    fn classical_walk_sums() {
        let params = ModelParams::constant(0.5, 0.5, 1.0, 0.3).unwrap();
        let norm = Normalizers::compute(&params, 100).unwrap();
        assert_eq!(norm.a2(100), 100.0);
        assert_eq!(norm.b2(100), 100.0);
        let (clt, _) = (norm.weak_clt_scale(100).unwrap(), ());
        assert_eq!(clt, 10.0);
    }

    #[test]
    fn variance_recursion_for_classical_walk() {
        let params = ModelParams::constant(0.5, 0.5, 1.0, 0.3).unwrap();
        let (ex, _) = compute_moments(&params, 40).unwrap();
        let var = compute_variance(&params, &ex);
        for n in 0..=40 {
            assert_eq!(var[n], n as f64);
        }
    }

    #[test]
    fn a_inf_gate_and_zero_case() {
        let weak = ModelParams::constant(0.7, 0.5, 0.9, 0.5).unwrap();
        assert!(matches!(
            estimate_a_inf(&weak, &AInfOptions::default()),
            Err(Error::NotSummable { .. })
        ));
        let det = ModelParams::constant(1.0, 1.0, 1.0, 0.5).unwrap();
        let est = estimate_a_inf(&det, &AInfOptions::default()).unwrap();
        assert_eq!(est.lower, 0.0);
        assert!(est.contains(0.0));
    }

    #[test]
    fn a_inf_budget_exceeded() {
        let opts = AInfOptions {
            rel_tol: 1e-9,
            abs_tol: 0.0,
            min_terms: 1,
            max_terms: 10_000,
        };
        assert!(matches!(
            estimate_a_inf(&strong(), &opts),
            Err(Error::BudgetExceeded { cap: 10_000, .. })
        ));
    }

    #[test]
    fn envelope_substitution_and_guard() {
        let t = (-2.0f64).exp();
        let env = envelope_from_variance(1, 3.0, t, 0.0, DEFAULT_ENVELOPE_GUARD).unwrap();
        let expected = 3.0 * (2.0 * t * 2f64.ln()).sqrt();
        assert!((env - expected).abs() < 1e-15);
        let inv_e = (-1.0f64).exp();
        assert!(matches!(
            envelope_from_variance(1, 1.0, inv_e, 0.0, DEFAULT_ENVELOPE_GUARD),
            Err(Error::EnvelopeUndefined { .. })
        ));
        assert!(envelope_from_variance(1, 1.0, 1.0, 0.0, 0.0).is_err());
        assert!(envelope_from_variance(1, 1.0, 0.5, 0.0, 0.0).is_err());
        assert!(envelope_from_variance(1, 1.0, 20.0, 0.0, 0.0).is_ok());
    }

    #[test]
    fn weak_lil_factor_at_e_squared() {
        // A_n = e^2  =>  √(2 log log A_n) = √(2 log 2)
        let a2 = (4.0f64).exp();
        let params = ModelParams::constant(0.5, 0.5, 1.0, 0.5).unwrap();
        let n = a2.ceil() as usize;
        let norm = Normalizers::compute(&params, n).unwrap();
        let (clt, lil) = norm.weak_scales(n).unwrap();
        let factor = (2.0 * (n as f64).sqrt().ln().ln()).sqrt();
        assert!((lil / clt - factor).abs() < 1e-14);
        // direct substitution at exactly A_n = e^2
        assert!(((2.0 * (a2.sqrt()).ln().ln()).sqrt() - (2.0 * 2f64.ln()).sqrt()).abs() < 1e-15);
        assert!(matches!(norm.weak_lil_scale(5), Err(Error::EnvelopeUndefined { .. })));
    }

    #[test]
    fn n_zero_conventions() {
        let mut norm = Normalizers::compute(&strong(), 1000).unwrap();
        norm.attach_a_inf(&strong(), &AInfOptions::with_rel_tol(1e-2)).unwrap();
        let scale0 = norm.fluctuation_scale(0).unwrap();
        assert!((scale0 - norm.a_inf2().unwrap().sqrt()).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for n in [0usize, 1, 10, 100, 1000] {
            let r = norm.fluctuation_scale(n).unwrap() / norm.a(n);
            assert!(r <= prev);
            prev = r;
        }
        assert!(matches!(
            norm.fluctuation_scale(1001),
            Err(Error::NormalizerTooShort { .. })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn recursion_identities(
                p in 0.0..=1.0f64,
                q in 0.0..=1.0f64,
                alpha in 0.0..0.99f64,
                beta in 0.0..=1.0f64,
                n_max in 2usize..3000,
            ) {
                let params = ModelParams::constant(p, q, alpha, beta).unwrap();
                let norm = Normalizers::compute(&params, n_max).unwrap();
                for n in 1..n_max {
                    let ratio = norm.a(n + 1) / norm.a(n);
                    prop_assert!((ratio - (1.0 + params.memory_gain(n + 1) / n as f64)).abs() < 1e-12);
                    prop_assert!(norm.ex(n).abs() <= 1.0);
                    let db = norm.b2(n + 1) - norm.b2(n);
                    prop_assert!((db * norm.a(n + 1).powi(2) - 1.0).abs() < 1e-6);
                    prop_assert!(norm.a2(n + 1) >= norm.a2(n));
                }
                prop_assert!(norm.a2(n_max) <= norm.b2(n_max) * (1.0 + 1e-12));
                let direct: f64 = (1..=n_max).map(|k| norm.ex(k)).sum();
                prop_assert!((norm.es(n_max) - direct).abs() < 1e-9 * n_max as f64);
            }
        }
    }
}
