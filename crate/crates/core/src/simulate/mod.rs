//! Path generation by two equivalent mechanisms, the exact finite-`n` law,
//! and seeded parallel ensembles.

mod ensemble;
mod exact;
mod path;
mod rng;

pub use ensemble::{run_ensemble, EnsembleConfig};
pub use exact::{exact_distribution, ExactDist, DEFAULT_EXACT_CAP};
pub use path::{simulate_path, PathRun, PathSimulator, SimBackend};
pub use rng::{derive_path_seed, path_rng, PathRng};
