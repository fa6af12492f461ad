use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("rotation limits need an irrational angle; theta = {theta} is not flagged irrational")]
    RationalRotationUnsupported { theta: f64 },

    #[error("normalizer factor at step {step} is {factor}; a_n collapses to zero")]
    DegenerateNormalizer { step: usize, factor: f64 },

    #[error("A_inf^2 is not finite: effective memory gain {gain} <= 1/2 (Lemma 10)")]
    NotSummable { gain: f64 },

    #[error("A_inf^2 tail bound did not reach tolerance within {cap} terms (bound {tail_bound} at the cap)")]
    BudgetExceeded { cap: usize, tail_bound: f64 },

    #[error("fluctuation scale degenerate at n = {n}: residual variance {residual} <= uncertainty {uncertainty}")]
    ScaleDegenerate { n: usize, residual: f64, uncertainty: f64 },

    #[error("envelope undefined at n = {n}: log|log t| is not positive for t = {t}")]
    EnvelopeUndefined { n: usize, t: f64 },

    #[error("normalizers cover n <= {have} but n = {need} was requested")]
    NormalizerTooShort { need: usize, have: usize },

    #[error("exact distribution requested for n = {n} above the cap {cap}")]
    CapExceeded { n: usize, cap: usize },

    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { got: usize, need: usize },

    #[error("no checkpoint in the window [{lo}, {hi}] has a defined envelope")]
    WindowEmpty { lo: usize, hi: usize },

    #[error("invalid checkpoints: {0}")]
    InvalidCheckpoints(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),
}
