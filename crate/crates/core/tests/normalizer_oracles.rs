use derw_core::model::{
    classify_regime, compute_a, compute_a2_b2, compute_moments, estimate_a_inf, AInfOptions,
    ModelParams, Normalizers, SequenceSpec,
};
use derw_core::simulate::exact_distribution;
use derw_core::Error;

fn strong() -> ModelParams {
    ModelParams::constant(0.9, 0.5, 0.8, 0.7).unwrap()
}

fn strong_ii() -> ModelParams {
    ModelParams::constant(1.0, 0.5, 0.8, 0.6).unwrap()
}

/// Error-free `a + b` as a (sum, error) pair.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Double-double accumulator.
#[derive(Default, Clone, Copy)]
struct Dd(f64, f64);

impl Dd {
    fn add(&mut self, x: f64) {
        let (s, e) = two_sum(self.0, x);
        let (hi, lo) = two_sum(s, e + self.1);
        *self = Dd(hi, lo);
    }
    fn value(self) -> f64 {
        self.0 + self.1
    }
}

/// Hand-rolled constant-parameter recursion: returns `A_n^2` for `n = n_terms`.
fn brute_a2(p: f64, q: f64, alpha: f64, beta: f64, n_terms: usize) -> f64 {
    let gain = (2.0 * p - 1.0) * alpha;
    let eps = 2.0 * beta - 1.0;
    let mut a = 1.0f64;
    let mut es = Dd::default();
    let mut a2 = Dd::default();
    for k in 1..=n_terms {
        let ex = if k == 1 {
            alpha * (2.0 * q - 1.0) + (1.0 - alpha) * eps
        } else {
            gain * es.value() / (k - 1) as f64 + (1.0 - alpha) * eps
        };
        a2.add((1.0 - ex * ex) / (a * a));
        es.add(ex);
        a *= 1.0 + gain / k as f64;
    }
    a2.value()
}

#[test]
fn a_inf_interval_contains_brute_force_sum() {
    let n_terms = 100_000_000;
    for (params, rel_tol) in [(strong(), 5e-3), (strong_ii(), 1e-4)] {
        let est = estimate_a_inf(&params, &AInfOptions::with_rel_tol(rel_tol)).unwrap();
        assert!(est.n_used <= n_terms);
        let brute = brute_a2(params.p, params.q, 0.8, params.beta.value(1), n_terms);
        assert!(
            est.lower <= brute && brute <= est.upper(),
            "{est:?} vs brute {brute}"
        );
        assert!(est.tail_bound <= rel_tol * est.lower * (1.0 + 1e-12));
    }
}

#[test]
fn a2_b2_against_double_double_recomputation() {
    let params = strong();
    let n = 10_000;
    let a = compute_a(&params, n).unwrap();
    let (ex, _) = compute_moments(&params, n).unwrap();
    let (a2, b2) = compute_a2_b2(&a, &ex).unwrap();
    let brute = brute_a2(0.9, 0.5, 0.8, 0.7, n);
    assert!((a2[n] - brute).abs() <= 1e-9 * brute);
    let mut inv = Dd::default();
    let mut prod = 1.0f64;
    for k in 1..=n {
        inv.add(1.0 / (prod * prod));
        prod *= 1.0 + 0.64 / k as f64;
    }
    assert!((b2[n] - inv.value()).abs() <= 1e-9 * inv.value());
}

#[test]
fn lemma_ten_gate_on_a_grid() {
    let quick = AInfOptions {
        max_terms: 2_000,
        ..AInfOptions::default()
    };
    for i in 0..=20 {
        let p = 0.5 + 0.025 * i as f64;
        for j in 0..=20 {
            let alpha = 0.05 * j as f64;
            let params = ModelParams::constant(p, 0.5, alpha, 0.5).unwrap();
            let result = estimate_a_inf(&params, &quick);
            let gated = matches!(result, Err(Error::NotSummable { .. }));
            assert_eq!(gated, (2.0 * p - 1.0) * alpha <= 0.5, "p={p} alpha={alpha}");
        }
    }
}

#[test]
fn rotation_running_extremes_approach_limits() {
    let spec = SequenceSpec::Rotation {
        theta: std::f64::consts::SQRT_2 - 1.0,
        lo: 0.5,
        hi: 0.9,
        irrational: true,
    };
    assert_eq!(spec.limits().unwrap(), (0.5, 0.9));
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for n in 1..=1_000_000 {
        let v = spec.value(n);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    assert!((lo - 0.5).abs() < 1e-3 && (hi - 0.9).abs() < 1e-3);
}

#[test]
fn moments_match_exact_distribution_mean() {
    let sets = [
        strong(),
        strong_ii(),
        ModelParams::constant(0.8, 0.5, 0.5, 0.5).unwrap(),
        ModelParams::constant(0.3, 0.9, 0.6, 0.2).unwrap(),
        ModelParams::new(
            0.95,
            0.2,
            SequenceSpec::Periodic {
                values: vec![0.9, 0.3, 0.7],
            },
            SequenceSpec::PowerConvergent {
                limit: 0.6,
                amplitude: 0.3,
                exponent: 0.5,
            },
        )
        .unwrap(),
    ];
    for params in &sets {
        let (_, es) = compute_moments(params, 200).unwrap();
        for n in [1, 2, 7, 50, 200] {
            let dist = exact_distribution(params, n, 2000).unwrap();
            assert!((dist.total_mass() - 1.0).abs() < 1e-12);
            assert!((dist.mean() - es[n]).abs() < 1e-10, "{params:?} n={n}");
        }
    }
}

#[test]
fn scales_from_the_oracle() {
    let params = strong();
    let opts = AInfOptions::with_rel_tol(5e-3);
    let norm = Normalizers::compute_with_a_inf(&params, 10_000, &opts).unwrap();
    let brute = brute_a2(0.9, 0.5, 0.8, 0.7, 100_000_000);
    let tail = norm.a_inf().unwrap().tail_bound;
    for n in [1000, 10_000] {
        let t = brute - norm.a2(n);
        let expected = norm.a(n) * t.sqrt();
        let slack = tail / t;
        let got = norm.fluctuation_scale(n).unwrap();
        assert!((got / expected - 1.0).abs() <= slack, "{got} vs {expected}");
    }
    // t ≈ 0.39 at n = 1000 sits inside [1/e, e], where log|log t| <= 0
    assert!(matches!(
        norm.lil_envelope(1000, 1e-3),
        Err(Error::EnvelopeUndefined { n: 1000, .. })
    ));
    let t = brute - norm.a2(10_000);
    let env = norm.lil_envelope(10_000, 1e-3).unwrap();
    let expected_env = norm.a(10_000) * (2.0 * t * t.ln().abs().ln()).sqrt();
    assert!((env / expected_env - 1.0).abs() <= 5.0 * tail / t);
}

#[test]
fn weak_scales_by_recomputation() {
    let params = ModelParams::constant(0.8, 0.5, 0.5, 0.5).unwrap();
    let n = 10_000;
    let norm = Normalizers::compute(&params, n).unwrap();
    // β = q = 1/2 makes every E[X_k] vanish, so A_n^2 = B_n^2 = Σ 1/a_k^2
    let mut a = 1.0f64;
    let mut sum = Dd::default();
    for k in 1..=n {
        sum.add(1.0 / (a * a));
        if k < n {
            a *= 1.0 + 0.3 / k as f64;
        }
    }
    let clt = a * sum.value().sqrt();
    let (c, l) = norm.weak_scales(n).unwrap();
    assert!((c / clt - 1.0).abs() < 1e-10);
    let an = sum.value().sqrt();
    assert!((l / (clt * (2.0 * an.ln().ln()).sqrt()) - 1.0).abs() < 1e-10);
}

#[test]
fn regime_examples() {
    let r = classify_regime(&ModelParams::constant(0.8, 0.5, 0.9, 0.5).unwrap()).unwrap();
    assert_eq!(r.to_string(), "superdiffusive, strong elephant, Theorem 3(I)");
    let r = classify_regime(&ModelParams::constant(0.5, 0.5, 0.9, 0.5).unwrap()).unwrap();
    assert_eq!(r.to_string(), "diffusive, no theorem applies");
    let r = classify_regime(&ModelParams::constant(0.75, 0.5, 0.9, 0.5).unwrap()).unwrap();
    assert_eq!(r.to_string(), "critical, no theorem applies");
}
