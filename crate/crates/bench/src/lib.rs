//! Shared fixtures for the criterion benches.

use derw_core::{ModelParams, Normalizers};

/// Strong elephant: p = 0.9, α ≡ 0.8, β ≡ 0.7.
pub fn strong() -> ModelParams {
    ModelParams::constant(0.9, 0.5, 0.8, 0.7).expect("valid parameters")
}

/// Symmetric Theorem 3(II) walk: p = 1, α ≡ 0.8, β ≡ 0.5.
pub fn symmetric() -> ModelParams {
    ModelParams::constant(1.0, 0.5, 0.8, 0.5).expect("valid parameters")
}

pub fn normalizers(params: &ModelParams, n_max: usize) -> Normalizers {
    Normalizers::compute(params, n_max).expect("normalizers")
}

/// Deterministic standard-normal-ish samples (sum of 12 uniforms minus 6).
pub fn pseudo_normal(len: usize, seed: u64) -> Vec<f64> {
    let mut state = seed;
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    (0..len).map(|_| (0..12).map(|_| next()).sum::<f64>() - 6.0).collect()
}
