//! Experiment configuration.
//!
//! TOML is the primary encoding; a file ending in `.json` is read as JSON
//! with the same schema. Unknown keys are errors everywhere.
//!
//! ```toml
//! [model]
//! p = 0.9
//! q = 0.5
//! alpha = { kind = "constant", value = 0.8 }
//! beta = { kind = "constant", value = 0.7 }
//!
//! [run]
//! n_max = 100000
//! checkpoints = ["dyadic", 100, 1000]
//! n_paths = 10000
//! master_seed = 7
//! backend = "state-only"
//! separation_factor = 100
//!
//! [analysis]
//! scale_kind = "thm3-strong"
//! lil_window = [1000, 100000]
//!
//! [output]
//! directory = "out/strong"
//! formats = ["csv", "json"]
//!
//! [scan]
//! p = { from = 0.5, to = 1.0, steps = 50 }
//! alpha = { from = 0.0, to = 1.0, steps = 50 }
//! ```

use std::path::{Path, PathBuf};

use derw_core::model::ModelParams;
use derw_core::simulate::SimBackend;
use derw_core::stats::ScaleKind;
use serde::{Deserialize, Serialize};

use crate::checkpoints::CheckpointSpec;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunSection>,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSection>,
}

fn default_n_paths() -> usize {
    1000
}
fn default_separation() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub n_max: usize,
    #[serde(default)]
    pub checkpoints: CheckpointSpec,
    #[serde(default = "default_n_paths")]
    pub n_paths: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_backend")]
    pub backend: SimBackend,
    /// Overridden by `--workers`; falls back to `DERW_LAB_THREADS`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worker_count: Option<usize>,
    #[serde(default = "default_separation")]
    pub separation_factor: usize,
}

fn default_backend() -> SimBackend {
    SimBackend::StateOnly
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum XiChoice {
    /// Sample variances of the simulated ensemble.
    Ensemble,
    /// Exact second-moment recursion; no simulation.
    Exact,
}

/// CLT acceptance thresholds; a row passes when all hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    pub ks_p_min: f64,
    pub mean_abs_max: f64,
    pub variance_range: [f64; 2],
    pub skew_abs_max: f64,
    pub ex_kurt_abs_max: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            ks_p_min: 1e-3,
            mean_abs_max: 0.05,
            variance_range: [0.9, 1.1],
            skew_abs_max: 0.1,
            ex_kurt_abs_max: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    pub scale_kind: ScaleKind,
    pub drift_horizon: bool,
    /// Refuse theorem-specific analyses the regime does not license.
    pub enforce_regime: bool,
    /// Restrict the CLT table to these checkpoints.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clt_checkpoints: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lil_window: Option<[usize; 2]>,
    pub eps_out: f64,
    pub eps_in: f64,
    pub envelope_guard: f64,
    pub rel_tol: f64,
    pub a_inf_max_terms: usize,
    pub xi_source: XiChoice,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lemma_grid: Option<CheckpointSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub floor_range: Option<[usize; 2]>,
    pub thresholds: Thresholds,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            scale_kind: ScaleKind::Thm3Strong,
            drift_horizon: true,
            enforce_regime: true,
            clt_checkpoints: None,
            lil_window: None,
            eps_out: 0.5,
            eps_in: 0.1,
            envelope_guard: derw_core::model::DEFAULT_ENVELOPE_GUARD,
            rel_tol: 5e-3,
            a_inf_max_terms: 200_000_000,
            xi_source: XiChoice::Ensemble,
            lemma_grid: None,
            floor_range: None,
            thresholds: Thresholds::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            directory: None,
            formats: vec![OutputFormat::Csv, OutputFormat::Json],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxis {
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl GridAxis {
    /// `steps` evenly spaced values from `from` to `to` inclusive.
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.from];
        }
        let width = self.to - self.from;
        (0..self.steps)
            .map(|i| self.from + width * i as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub p: GridAxis,
    pub alpha: GridAxis,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        };
        parsed.map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, why: String| Err(CliError::Config(format!("{field}: {why}")));
        if let Err(e) = self.model.validate() {
            return bad("model", e.to_string());
        }
        if let Some(run) = &self.run {
            if run.n_max == 0 {
                return bad("run.n_max", "must be at least 1".into());
            }
            if run.n_paths == 0 {
                return bad("run.n_paths", "must be at least 1".into());
            }
            if run.worker_count == Some(0) {
                return bad("run.worker_count", "must be at least 1".into());
            }
            if run.separation_factor == 0 {
                return bad("run.separation_factor", "must be at least 1".into());
            }
            if let Err(e) = run.checkpoints.expand(run.n_max, run.separation_factor) {
                return bad("run.checkpoints", e);
            }
        }
        let a = &self.analysis;
        if !(a.rel_tol > 0.0) {
            return bad("analysis.rel_tol", format!("must be positive, got {}", a.rel_tol));
        }
        if !(a.eps_out >= 0.0) || !(0.0..=1.0).contains(&a.eps_in) {
            return bad("analysis.eps_out/eps_in", "need eps_out >= 0 and eps_in in [0, 1]".into());
        }
        if !(0.0..1.0).contains(&a.envelope_guard) {
            return bad("analysis.envelope_guard", "must lie in [0, 1)".into());
        }
        if let Some([lo, hi]) = a.lil_window {
            if lo > hi {
                return bad("analysis.lil_window", format!("[{lo}, {hi}] is empty"));
            }
        }
        if let Some([lo, hi]) = a.floor_range {
            if lo > hi {
                return bad("analysis.floor_range", format!("[{lo}, {hi}] is empty"));
            }
        }
        let [v_lo, v_hi] = a.thresholds.variance_range;
        if v_lo > v_hi {
            return bad("analysis.thresholds.variance_range", "lower end above upper end".into());
        }
        if self.output.formats.is_empty() {
            return bad("output.formats", "at least one format is needed".into());
        }
        if let Some(scan) = &self.scan {
            for (name, axis) in [("scan.p", scan.p), ("scan.alpha", scan.alpha)] {
                if axis.steps == 0 {
                    return bad(name, "steps must be at least 1".into());
                }
                let ok = |x: f64| (0.0..=1.0).contains(&x);
                if !ok(axis.from) || !ok(axis.to) {
                    return bad(name, "grid must lie in [0, 1]".into());
                }
            }
        }
        Ok(())
    }

    pub fn run(&self) -> Result<&RunSection, CliError> {
        self.run
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [run] section".into()))
    }

    /// Canonical JSON encoding, the input of the config hash.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
