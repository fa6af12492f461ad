//! Run manifests: everything needed to reproduce a run's files.

use std::path::Path;

use derw_core::model::Normalizers;
use serde::{Deserialize, Serialize};

use crate::commands::Task;
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::{sha256_hex, FileEntry};

pub const MANIFEST_VERSION: u32 = 1;
pub const TOOL: &str = "derw-lab";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizerSummary {
    pub n_max: usize,
    pub a_n_max: f64,
    pub es_n_max: f64,
    pub a2_n_max: f64,
    pub b2_n_max: f64,
    pub sum_inv_a4: f64,
    /// Midpoint of the certified `A_∞^2` enclosure, when it was estimated.
    pub a_inf2: Option<f64>,
    /// Certified bound on `A_∞^2 − A_{n_max}^2`.
    pub a_inf2_tail_bound: Option<f64>,
    pub a_inf2_terms: Option<usize>,
}

impl NormalizerSummary {
    pub fn of(norm: &Normalizers) -> Self {
        let n = norm.n_max();
        NormalizerSummary {
            n_max: n,
            a_n_max: norm.a(n),
            es_n_max: norm.es(n),
            a2_n_max: norm.a2(n),
            b2_n_max: norm.b2(n),
            sum_inv_a4: norm.sum_inv_a4(),
            a_inf2: norm.a_inf2(),
            a_inf2_tail_bound: norm.a_inf_tail_bound(),
            a_inf2_terms: norm.a_inf().map(|e| e.n_used),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub manifest_version: u32,
    pub tool: String,
    pub version: String,
    pub command: Task,
    /// SHA-256 of the canonical JSON of `config`.
    pub config_hash: String,
    /// The effective configuration, overrides applied.
    pub config: ExperimentConfig,
    pub seed: Option<u64>,
    pub workers: usize,
    pub started_at: String,
    pub finished_at: String,
    /// The classification as JSON; infinite thresholds appear as `null`.
    pub regime: serde_json::Value,
    pub normalizers: Option<NormalizerSummary>,
    pub files: Vec<FileEntry>,
}

pub fn config_hash(config: &ExperimentConfig) -> String {
    sha256_hex(config.canonical_json().as_bytes())
}

pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let manifest: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if manifest.manifest_version != MANIFEST_VERSION {
            return Err(CliError::Config(format!(
                "{}: manifest version {} is not supported",
                path.display(),
                manifest.manifest_version
            )));
        }
        let hash = config_hash(&manifest.config);
        if hash != manifest.config_hash {
            return Err(CliError::Config(format!(
                "{}: config does not match its recorded hash",
                path.display()
            )));
        }
        manifest.config.validate()?;
        Ok(manifest)
    }
}
