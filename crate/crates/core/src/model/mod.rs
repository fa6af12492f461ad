//! Deterministic mathematics of the walk: parameter sequences, exact moment
//! recursions, normalizing sequences and regime classification.

mod normalizers;
mod params;
mod regime;
mod sequence;

pub use normalizers::{
    compute_a, compute_a2_b2, compute_moments, compute_variance, envelope_from_variance,
    estimate_a_inf, scale_from_variance, AInfEstimate, AInfOptions, Normalizers,
    DEFAULT_ENVELOPE_GUARD,
};
pub use params::{ModelParams, StepTable};
pub use regime::{
    classify_regime, elephant_threshold, Applicability, Diffusivity, ElephantStrength, Finiteness,
    RegimeReport,
};
pub use sequence::SequenceSpec;
