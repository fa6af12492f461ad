//! Simulation and analysis of the dynamic elephant random walk.
//!
//! A ±1 walk whose step `n + 1` repeats (or flips) a uniformly chosen past
//! step with probability `α_{n+1}`, and otherwise takes a fresh step with
//! bias `β_{n+1}`. The crate computes its exact moments and normalizers,
//! simulates seeded ensembles, and turns them into limit-theorem verdicts.

pub mod error;
pub mod model;
pub mod simulate;
pub mod special;
pub mod stats;
pub mod summation;

pub use error::{Error, Result};
pub use model::{
    classify_regime, AInfEstimate, AInfOptions, ModelParams, Normalizers, RegimeReport,
    SequenceSpec,
};
pub use simulate::{run_ensemble, EnsembleConfig, PathRun, SimBackend};
