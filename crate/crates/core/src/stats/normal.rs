use std::f64::consts::SQRT_2;

use statrs::function::erf::erfc;

/// Standard normal CDF.
///
/// Evaluated as `erfc(|x|/√2) / 2` on the tail side (statrs' `erfc` is a
/// rational minimax fit with ~1e-16 relative error), so `Φ(x) + Φ(−x) = 1`
/// holds exactly in floating point.
pub fn normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let tail = 0.5 * erfc(x.abs() / SQRT_2);
    if x >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Composite Gauss–Legendre (5 points) of the density on `[0, x]`.
    fn quadrature_cdf(x: f64) -> f64 {
        const NODES: [f64; 5] = [
            0.0,
            -0.538_469_310_105_683_1,
            0.538_469_310_105_683_1,
            -0.906_179_845_938_664,
            0.906_179_845_938_664,
        ];
        const WEIGHTS: [f64; 5] = [
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_1,
            0.236_926_885_056_189_1,
        ];
        let panels = 2000;
        let h = x / panels as f64;
        let density = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut total = 0.0;
        for i in 0..panels {
            let mid = (i as f64 + 0.5) * h;
            for (node, w) in NODES.iter().zip(WEIGHTS) {
                total += w * density(mid + 0.5 * h * node);
            }
        }
        0.5 + 0.5 * h * total
    }

    #[test]
    fn center_and_quantile() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.959_963_985) - 0.975).abs() < 1e-8);
        assert!((quadrature_cdf(1.959_963_985) - 0.975).abs() < 1e-8);
    }

    #[test]
    fn agrees_with_quadrature() {
        for &x in &[0.1, 0.5, 1.0, 2.0, 3.0, 4.5, 6.0] {
            let q = quadrature_cdf(x);
            assert!((normal_cdf(x) - q).abs() < 1e-10, "x = {x}");
            assert!((normal_cdf(-x) - (1.0 - q)).abs() < 1e-10, "x = -{x}");
        }
    }

    proptest! {
        #[test]
        fn exact_symmetry(x in -40.0..40.0f64) {
            prop_assert_eq!(normal_cdf(x) + normal_cdf(-x), 1.0);
        }

        #[test]
        fn monotone_in_unit_interval(x in -40.0..40.0f64, dx in 0.0..5.0f64) {
            let (lo, hi) = (normal_cdf(x), normal_cdf(x + dx));
            prop_assert!((0.0..=1.0).contains(&lo));
            prop_assert!(lo <= hi);
        }
    }
}
