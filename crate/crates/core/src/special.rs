//! Log-gamma evaluations used as closed-form references for `a_n`.
//!
//! Both functions shift the argument upward with the recurrence
//! `Γ(z + 1) = z Γ(z)` until the Stirling series is accurate to roughly
//! machine precision, then evaluate the series. The ratio form expands the
//! difference `ln Γ(x + g) − ln Γ(x)` directly so that nothing of size
//! `x ln x` is ever cancelled.

use std::f64::consts::PI;

/// Stirling series starts being used at this argument.
const STIRLING_MIN: f64 = 15.0;

/// `B_{2k} / (2k (2k − 1))` for k = 1..=7.
const STIRLING_COEFFS: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
];

fn stirling_tail(z: f64) -> f64 {
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let mut power = inv;
    let mut acc = 0.0;
    for c in STIRLING_COEFFS {
        acc += c * power;
        power *= inv2;
    }
    acc
}

/// `ln Γ(z)` for `z > 0`.
pub fn ln_gamma(z: f64) -> f64 {
    assert!(z > 0.0, "ln_gamma needs a positive argument, got {z}");
    let mut shift = 0.0;
    let mut z = z;
    while z < STIRLING_MIN {
        shift += z.ln();
        z += 1.0;
    }
    (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + stirling_tail(z) - shift
}

/// `ln Γ(x + g) − ln Γ(x)` for `x > 0`, `g >= 0`.
pub fn ln_gamma_ratio(x: f64, g: f64) -> f64 {
    assert!(x > 0.0 && g >= 0.0, "ln_gamma_ratio domain: x = {x}, g = {g}");
    if g == 0.0 {
        return 0.0;
    }
    let mut shift = 0.0;
    let mut x = x;
    while x < STIRLING_MIN {
        shift += (g / x).ln_1p();
        x += 1.0;
    }
    let main = (x + g - 0.5) * (g / x).ln_1p() + g * x.ln() - g;
    main + (stirling_tail(x + g) - stirling_tail(x)) - shift
}

/// Closed form of `a_n` for a constant memory gain `γ = (2p − 1)α`:
/// `Γ(n + γ) / (Γ(n) Γ(1 + γ))`, returned as its logarithm.
pub fn ln_constant_gain_normalizer(n: usize, gain: f64) -> f64 {
    assert!(n >= 1);
    assert!(gain > -1.0);
    if gain >= 0.0 {
        ln_gamma_ratio(n as f64, gain) - ln_gamma(1.0 + gain)
    } else if n == 1 {
        0.0
    } else {
        // Γ(n) = (n − 1) Γ(n − 1) keeps the ratio form with shift 1 + γ > 0.
        let m = (n - 1) as f64;
        ln_gamma_ratio(m, 1.0 + gain) - m.ln() - ln_gamma(1.0 + gain)
    }
}
