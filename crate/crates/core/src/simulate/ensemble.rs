use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::path::{PathRun, PathSimulator, SimBackend};
use super::rng::derive_path_seed;
use crate::error::{Error, Result};
use crate::model::{ModelParams, Normalizers};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_max: usize,
    pub checkpoints: Vec<usize>,
    pub n_paths: usize,
    pub master_seed: u64,
    pub backend: SimBackend,
    /// Worker threads; 0 lets the pool pick.
    pub worker_count: usize,
}

/// Simulates `n_paths` independent paths in parallel.
///
/// Path `i` uses `derive_path_seed(master_seed, i)` and results come back in
/// path order, so the output does not depend on `worker_count`.
pub fn run_ensemble(
    params: &ModelParams,
    norm: &Normalizers,
    config: &EnsembleConfig,
) -> Result<Vec<PathRun>> {
    if config.n_paths == 0 {
        return Err(Error::InvalidParameter("n_paths must be at least 1".into()));
    }
    let sim = PathSimulator::new(params, norm, config.n_max, &config.checkpoints)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.worker_count)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    let runs = pool.install(|| {
        (0..config.n_paths as u64)
            .into_par_iter()
            .map(|i| sim.run(derive_path_seed(config.master_seed, i), config.backend))
            .collect()
    });
    Ok(runs)
}
