//! Subcommand implementations.
//!
//! Each command reads the effective configuration, writes its report files
//! into the output directory and finishes with `<command>.manifest.json`.
//! A stale manifest for the same command is deleted first, so the
//! manifest's presence marks a completed run.
//!
//! | command       | files                                                |
//! |---------------|------------------------------------------------------|
//! | `regime`      | `regime.json`                                        |
//! | `normalizers` | `normalizers.csv`, `normalizers.json`                |
//! | `simulate`    | `paths.csv` and/or `paths.json`                      |
//! | `clt`         | `clt.csv`, `clt.json`                                |
//! | `lil`         | `lil.csv`, `lil_paths.csv`, `lil.json`               |
//! | `mconv`       | `mconv.csv`, `mconv.json`                            |
//! | `lemmas`      | `lemmas.csv`, `lemmas.json`                          |
//! | `phase-scan`  | `phase.csv`, `phase.json`                            |
//!
//! CSV columns:
//!
//! - `normalizers.csv`: `n, a_n, EX, ES, A2, B2`
//! - `paths.csv`: `path_index, checkpoint, S, M_hat` (long format, one row per
//!   path and checkpoint; `M_hat` repeats along a path)
//! - `clt.csv`: `n, samples, mean, var, skew, ex_kurt, ks_stat, ks_p, scale,
//!   horizon_factor, lattice_step, pass`
//! - `lil.csv`: `kind, level, plus, minus` with `kind` one of `quantile`
//!   (level = probability), `exceed` (level = `1 + eps_out`), `reach`
//!   (level = `1 − eps_in`)
//! - `lil_paths.csv`: `path_index, sup_plus, sup_minus`
//! - `mconv.csv`: `n, mean_sq, std_error` for the increments `M_{2n} − M_n`
//! - `lemmas.csv`: `n, ratio_lemma1, partial_sum_lemma2, var_floor`
//! - `phase.csv`: `p, alpha, threshold, diffusivity, elephant_strength,
//!   b_inf_finite, thm1, thm3, variance_floor_expected`

use std::io::Write;
use std::path::{Path, PathBuf};

use derw_core::model::{
    classify_regime, AInfOptions, Applicability, Finiteness, ModelParams, Normalizers,
    RegimeReport, SequenceSpec,
};
use derw_core::simulate::{run_ensemble, EnsembleConfig, PathRun};
use derw_core::stats::{
    clt_report, lemma1_ratio_report, lil_report, m_convergence_report, summability_report,
    variance_floor_report, CltOptions, CltRow, LilOptions, ScaleKind, TailVariance, XiSource,
};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, OutputFormat, Thresholds, XiChoice};
use crate::error::CliError;
use crate::manifest::{config_hash, timestamp, NormalizerSummary, RunManifest, MANIFEST_VERSION, TOOL};
use crate::output::{opt_real, real, FileEntry, OutputDir};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, clap::Subcommand)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Task {
    /// Classify the model: phase, elephant strength, theorem conditions.
    Regime,
    /// Tabulate a_n, E[X_n], E[S_n], A_n^2, B_n^2.
    Normalizers {
        /// Also estimate A_inf^2 (exit 2 when the sum diverges).
        #[arg(long)]
        #[serde(default)]
        a_inf: bool,
        /// One row per n instead of one per checkpoint.
        #[arg(long)]
        #[serde(default)]
        all_rows: bool,
    },
    /// Simulate the ensemble and dump S_n at the checkpoints.
    Simulate,
    /// Normality of the rescaled fluctuations at each checkpoint.
    Clt,
    /// Envelope statistics over the LIL window.
    Lil,
    /// Convergence of the martingale M_n.
    Mconv,
    /// Lemma 1 ratios, Lemma 2 partial sums and the variance floor.
    Lemmas,
    /// Classify a (p, constant alpha) grid.
    PhaseScan,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Regime => "regime",
            Task::Normalizers { .. } => "normalizers",
            Task::Simulate => "simulate",
            Task::Clt => "clt",
            Task::Lil => "lil",
            Task::Mconv => "mconv",
            Task::Lemmas => "lemmas",
            Task::PhaseScan => "phase-scan",
        }
    }

    pub fn manifest_name(&self) -> String {
        format!("{}.manifest.json", self.name())
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    /// Value of `DERW_LAB_THREADS`, if set.
    pub env_threads: Option<String>,
}

pub const DEFAULT_OUT_DIR: &str = "derw-out";

/// A fully resolved command: effective config, worker count, destination.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub task: Task,
    /// Seed and format overrides applied; `run.worker_count` and
    /// `output.directory` cleared, since neither changes any output byte.
    pub config: ExperimentConfig,
    pub workers: usize,
    pub out_dir: PathBuf,
}

impl Invocation {
    pub fn new(task: Task, mut config: ExperimentConfig, ov: &Overrides) -> Result<Self, CliError> {
        let from_env = match ov.env_threads.as_deref().map(str::trim) {
            None | Some("") => None,
            Some(s) => match s.parse::<usize>() {
                Ok(n) if n >= 1 => Some(n),
                _ => {
                    return Err(CliError::Config(format!(
                        "DERW_LAB_THREADS must be a positive integer, got `{s}`"
                    )))
                }
            },
        };
        if ov.workers == Some(0) {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        let from_config = config.run.as_ref().and_then(|r| r.worker_count);
        let workers = ov
            .workers
            .or(from_config)
            .or(from_env)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        let out_dir = ov
            .out_dir
            .clone()
            .or_else(|| config.output.directory.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));

        if let Some(run) = config.run.as_mut() {
            if let Some(seed) = ov.seed {
                run.master_seed = seed;
            }
            run.worker_count = None;
        }
        if let Some(format) = ov.format {
            config.output.formats = vec![format];
        }
        config.output.directory = None;
        config.validate()?;
        Ok(Invocation {
            task,
            config,
            workers,
            out_dir,
        })
    }
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    workers: usize,
    regime: RegimeReport,
    out: OutputDir,
    stdout: &'a mut dyn Write,
    summary: Option<NormalizerSummary>,
}

impl Ctx<'_> {
    fn say(&mut self, line: impl AsRef<str>) -> Result<(), CliError> {
        match writeln!(self.stdout, "{}", line.as_ref()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::io("stdout", e)),
            _ => Ok(()),
        }
    }

    fn wants(&self, format: OutputFormat) -> bool {
        self.cfg.output.formats.contains(&format)
    }

    fn enforce(&self) -> bool {
        self.cfg.analysis.enforce_regime
    }

    /// Normalizers up to `run.n_max`. `A_∞^2` is attached when `need` is set
    /// (errors propagate) or, on a best-effort basis, when `B_∞^2` is finite.
    fn normalizers(&mut self, need_a_inf: bool) -> Result<Normalizers, CliError> {
        let n_max = self.cfg.run()?.n_max;
        let mut norm = Normalizers::compute(&self.cfg.model, n_max)?;
        let opts = AInfOptions {
            rel_tol: self.cfg.analysis.rel_tol,
            max_terms: self.cfg.analysis.a_inf_max_terms,
            ..AInfOptions::default()
        };
        if need_a_inf {
            norm.attach_a_inf(&self.cfg.model, &opts)?;
        } else if self.regime.b_inf_finite == Finiteness::Finite {
            let _ = norm.attach_a_inf(&self.cfg.model, &opts);
        }
        self.summary = Some(NormalizerSummary::of(&norm));
        Ok(norm)
    }

    fn checkpoints(&self, extra: &[usize]) -> Result<Vec<usize>, CliError> {
        let run = self.cfg.run()?;
        let mut cps = run
            .checkpoints
            .expand(run.n_max, run.separation_factor)
            .map_err(|e| CliError::Config(format!("run.checkpoints: {e}")))?;
        if let Some(&bad) = extra.iter().find(|&&n| n > run.n_max) {
            return Err(CliError::Config(format!("checkpoint {bad} exceeds n_max = {}", run.n_max)));
        }
        cps.extend_from_slice(extra);
        cps.sort_unstable();
        cps.dedup();
        Ok(cps)
    }

    fn ensemble(&self, norm: &Normalizers, extra: &[usize]) -> Result<Vec<PathRun>, CliError> {
        let run = self.cfg.run()?;
        let config = EnsembleConfig {
            n_max: run.n_max,
            checkpoints: self.checkpoints(extra)?,
            n_paths: run.n_paths,
            master_seed: run.master_seed,
            backend: run.backend,
            worker_count: self.workers,
        };
        Ok(run_ensemble(&self.cfg.model, norm, &config)?)
    }

    fn lemma10_reason(&self) -> String {
        let r = &self.regime;
        let p = self.cfg.model.p;
        if p <= 0.75 {
            format!("Lemma 10 gives B_inf^2 = inf since p = {p} <= 3/4")
        } else {
            format!(
                "Lemma 10 gives B_inf^2 = inf since limsup alpha = {} < 1/(4p-2) = {}",
                r.alpha_limits.1, r.threshold
            )
        }
    }

    fn refuse(&self, what: &str, theorem: &str) -> CliError {
        let reason = match self.regime.b_inf_finite {
            Finiteness::Infinite => self.lemma10_reason(),
            _ => format!("its conditions do not hold for this model ({})", self.regime),
        };
        CliError::NotApplicable(format!("{what} relies on {theorem}, but {reason}"))
    }

    fn require_thm3(&self, what: &str) -> Result<(), CliError> {
        if self.enforce() && !self.regime.thm3_applicable.applies() {
            return Err(self.refuse(what, "Theorem 3"));
        }
        Ok(())
    }

    fn require_thm1(&self, what: &str) -> Result<(), CliError> {
        if self.enforce() && !self.regime.thm1_applicable.applies() {
            return Err(self.refuse(what, "Theorem 1"));
        }
        Ok(())
    }
}

/// Runs one command and writes its manifest.
pub fn execute(inv: &Invocation, stdout: &mut dyn Write) -> Result<RunManifest, CliError> {
    let started_at = timestamp();
    let cfg = &inv.config;
    let regime = classify_regime(&cfg.model)?;
    let out = OutputDir::create(&inv.out_dir)?;
    let manifest_name = inv.task.manifest_name();
    out.remove_if_present(&manifest_name)?;
    let mut ctx = Ctx {
        cfg,
        workers: inv.workers,
        regime,
        out,
        stdout,
        summary: None,
    };
    match &inv.task {
        Task::Regime => cmd_regime(&mut ctx)?,
        Task::Normalizers { a_inf, all_rows } => cmd_normalizers(&mut ctx, *a_inf, *all_rows)?,
        Task::Simulate => cmd_simulate(&mut ctx)?,
        Task::Clt => cmd_clt(&mut ctx)?,
        Task::Lil => cmd_lil(&mut ctx)?,
        Task::Mconv => cmd_mconv(&mut ctx)?,
        Task::Lemmas => cmd_lemmas(&mut ctx)?,
        Task::PhaseScan => cmd_phase_scan(&mut ctx)?,
    }
    let manifest = RunManifest {
        manifest_version: MANIFEST_VERSION,
        tool: TOOL.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: inv.task.clone(),
        config_hash: config_hash(cfg),
        config: cfg.clone(),
        seed: cfg.run.as_ref().map(|r| r.master_seed),
        workers: inv.workers,
        started_at,
        finished_at: timestamp(),
        regime: serde_json::to_value(regime).expect("regime serializes"),
        normalizers: ctx.summary.clone(),
        files: ctx.out.files().to_vec(),
    };
    ctx.out.write_json_untracked(&manifest_name, &manifest)?;
    Ok(manifest)
}

/// Files whose hash differs from, or is missing relative to, the recorded run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayMismatch {
    pub name: String,
    pub recorded: Option<String>,
    pub replayed: Option<String>,
}

/// Re-runs the command recorded in a manifest and compares file hashes.
///
/// Output goes to `out_dir`, defaulting to `replay/` beside the manifest.
pub fn replay(
    manifest_path: &Path,
    out_dir: Option<PathBuf>,
    workers: Option<usize>,
    stdout: &mut dyn Write,
) -> Result<(RunManifest, Vec<ReplayMismatch>), CliError> {
    let recorded = RunManifest::load(manifest_path)?;
    let out_dir = out_dir.unwrap_or_else(|| {
        manifest_path
            .parent()
            .unwrap_or(Path::new("."))
            .join("replay")
    });
    let inv = Invocation {
        task: recorded.command.clone(),
        config: recorded.config.clone(),
        workers: workers.unwrap_or(recorded.workers).max(1),
        out_dir,
    };
    let fresh = execute(&inv, stdout)?;
    Ok((fresh.clone(), compare_files(&recorded.files, &fresh.files)))
}

fn compare_files(recorded: &[FileEntry], replayed: &[FileEntry]) -> Vec<ReplayMismatch> {
    let find = |list: &[FileEntry], name: &str| {
        list.iter().find(|f| f.name == name).map(|f| f.sha256.clone())
    };
    let mut names: Vec<&str> = recorded.iter().chain(replayed).map(|f| f.name.as_str()).collect();
    names.sort_unstable();
    names.dedup();
    names
        .into_iter()
        .filter_map(|name| {
            let (a, b) = (find(recorded, name), find(replayed, name));
            (a != b).then(|| ReplayMismatch {
                name: name.into(),
                recorded: a,
                replayed: b,
            })
        })
        .collect()
}

fn enum_label<T: Serialize>(x: &T) -> String {
    match serde_json::to_value(x) {
        Ok(serde_json::Value::String(s)) => s,
        other => format!("{other:?}"),
    }
}

fn cmd_regime(ctx: &mut Ctx) -> Result<(), CliError> {
    let regime = ctx.regime;
    let json = serde_json::to_string_pretty(&regime).expect("regime serializes");
    ctx.say(regime.to_string())?;
    ctx.say(&json)?;
    ctx.out.write_json("regime.json", &regime)
}

fn cmd_normalizers(ctx: &mut Ctx, a_inf: bool, all_rows: bool) -> Result<(), CliError> {
    let norm = ctx.normalizers(a_inf)?;
    let n_max = norm.n_max();
    let rows: Vec<usize> = if all_rows {
        (1..=n_max).collect()
    } else {
        ctx.checkpoints(&[n_max])?
    };
    if ctx.wants(OutputFormat::Csv) {
        let body = rows.iter().map(|&n| {
            vec![
                n.to_string(),
                real(norm.a(n)),
                real(norm.ex(n)),
                real(norm.es(n)),
                real(norm.a2(n)),
                real(norm.b2(n)),
            ]
        });
        ctx.out.write_csv("normalizers.csv", &["n", "a_n", "EX", "ES", "A2", "B2"], body)?;
    }
    let summary = ctx.summary.clone().expect("set by normalizers()");
    if ctx.wants(OutputFormat::Json) {
        ctx.out.write_json("normalizers.json", &summary)?;
    }
    ctx.say(format!(
        "n_max = {n_max}: a = {}, E[S] = {}, A2 = {}, B2 = {}",
        summary.a_n_max, summary.es_n_max, summary.a2_n_max, summary.b2_n_max
    ))?;
    if let (Some(v), Some(t)) = (summary.a_inf2, summary.a_inf2_tail_bound) {
        ctx.say(format!("A_inf^2 = {v} (certified tail bound {t})"))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PathDump<'a> {
    n_max: usize,
    checkpoints: &'a [usize],
    paths: Vec<PathRecord<'a>>,
}

#[derive(Serialize)]
struct PathRecord<'a> {
    path_index: usize,
    seed: u64,
    s: &'a [i64],
    m_hat: f64,
}

fn cmd_simulate(ctx: &mut Ctx) -> Result<(), CliError> {
    let norm = ctx.normalizers(false)?;
    let runs = ctx.ensemble(&norm, &[])?;
    let checkpoints: &[usize] = runs.first().map_or(&[], |r| &r.checkpoints);
    if ctx.wants(OutputFormat::Csv) {
        let body = runs.iter().enumerate().flat_map(|(i, r)| {
            let m = real(r.m_hat);
            r.checkpoints
                .iter()
                .zip(&r.s_at)
                .map(move |(n, s)| vec![i.to_string(), n.to_string(), s.to_string(), m.clone()])
        });
        ctx.out.write_csv("paths.csv", &["path_index", "checkpoint", "S", "M_hat"], body)?;
    }
    if ctx.wants(OutputFormat::Json) {
        let dump = PathDump {
            n_max: norm.n_max(),
            checkpoints,
            paths: runs
                .iter()
                .enumerate()
                .map(|(i, r)| PathRecord {
                    path_index: i,
                    seed: r.seed,
                    s: &r.s_at,
                    m_hat: r.m_hat,
                })
                .collect(),
        };
        ctx.out.write_json("paths.json", &dump)?;
    }
    ctx.say(format!(
        "simulated {} paths to n = {} ({} checkpoints)",
        runs.len(),
        norm.n_max(),
        checkpoints.len()
    ))
}

fn row_passes(row: &CltRow, t: &Thresholds) -> bool {
    let [v_lo, v_hi] = t.variance_range;
    row.ks_p_value >= t.ks_p_min
        && row.mean.abs() <= t.mean_abs_max
        && (v_lo..=v_hi).contains(&row.variance)
        && row.skewness.abs() <= t.skew_abs_max
        && row.excess_kurtosis.abs() <= t.ex_kurt_abs_max
}

#[derive(Serialize)]
struct CltOutput<'a> {
    report: &'a derw_core::stats::CltReport,
    pass: Vec<bool>,
    thresholds: &'a Thresholds,
}

fn cmd_clt(ctx: &mut Ctx) -> Result<(), CliError> {
    let a = &ctx.cfg.analysis;
    let kind = a.scale_kind;
    match kind {
        ScaleKind::Thm3Strong => ctx.require_thm3("scale_kind thm3-strong")?,
        ScaleKind::KubotaTakeiRootN => ctx.require_thm3("scale_kind kubota-takei-root-n")?,
        ScaleKind::Thm1Weak => ctx.require_thm1("scale_kind thm1-weak")?,
    }
    let need_a_inf = match kind {
        ScaleKind::Thm3Strong => !a.drift_horizon,
        ScaleKind::KubotaTakeiRootN => a.drift_horizon,
        ScaleKind::Thm1Weak => false,
    };
    let opts = CltOptions {
        scale_kind: kind,
        drift_horizon: a.drift_horizon,
        separation_factor: ctx.cfg.run()?.separation_factor,
        checkpoints: a.clt_checkpoints.clone(),
    };
    let thresholds = a.thresholds.clone();
    let norm = ctx.normalizers(need_a_inf)?;
    let runs = ctx.ensemble(&norm, opts.checkpoints.as_deref().unwrap_or(&[]))?;
    let report = clt_report(&runs, &norm, &ctx.cfg.model, &opts)?;
    let pass: Vec<bool> = report.rows.iter().map(|r| row_passes(r, &thresholds)).collect();

    if ctx.wants(OutputFormat::Csv) {
        let header = [
            "n", "samples", "mean", "var", "skew", "ex_kurt", "ks_stat", "ks_p", "scale",
            "horizon_factor", "lattice_step", "pass",
        ];
        let body = report.rows.iter().zip(&pass).map(|(r, ok)| {
            vec![
                r.n.to_string(),
                r.sample_count.to_string(),
                real(r.mean),
                real(r.variance),
                real(r.skewness),
                real(r.excess_kurtosis),
                real(r.ks_statistic),
                real(r.ks_p_value),
                real(r.scale),
                opt_real(r.horizon_factor),
                opt_real(r.lattice_step),
                ok.to_string(),
            ]
        });
        ctx.out.write_csv("clt.csv", &header, body)?;
    }
    if ctx.wants(OutputFormat::Json) {
        let out = CltOutput {
            report: &report,
            pass: pass.clone(),
            thresholds: &thresholds,
        };
        ctx.out.write_json("clt.json", &out)?;
    }
    for (r, ok) in report.rows.iter().zip(&pass) {
        ctx.say(format!(
            "n = {:>9}  mean {:+.4}  var {:.4}  skew {:+.4}  ex_kurt {:+.4}  ks_p {:.3e}  {}",
            r.n,
            r.mean,
            r.variance,
            r.skewness,
            r.excess_kurtosis,
            r.ks_p_value,
            if *ok { "pass" } else { "FAIL" }
        ))?;
    }
    if !report.skipped.is_empty() {
        ctx.say(format!("skipped checkpoints: {:?}", report.skipped))?;
    }
    Ok(())
}

fn cmd_lil(ctx: &mut Ctx) -> Result<(), CliError> {
    ctx.require_thm3("the LIL envelope")?;
    let a = ctx.cfg.analysis.clone();
    let norm = ctx.normalizers(!a.drift_horizon)?;
    let runs = ctx.ensemble(&norm, &[])?;
    let cps = &runs[0].checkpoints;
    let window = match a.lil_window {
        Some([lo, hi]) => (lo, hi),
        None => (cps[0], cps[cps.len() - 1]),
    };
    let opts = LilOptions {
        window,
        eps_out: a.eps_out,
        eps_in: a.eps_in,
        guard: a.envelope_guard,
        drift_horizon: a.drift_horizon,
    };
    let report = lil_report(&runs, &norm, &opts)?;
    let s = &report.summary;
    if ctx.wants(OutputFormat::Csv) {
        let mut rows: Vec<Vec<String>> = s
            .quantiles
            .iter()
            .map(|q| vec!["quantile".into(), real(q.level), real(q.plus), real(q.minus)])
            .collect();
        rows.push(vec![
            "exceed".into(),
            real(1.0 + a.eps_out),
            real(s.exceed_plus),
            real(s.exceed_minus),
        ]);
        rows.push(vec![
            "reach".into(),
            real(1.0 - a.eps_in),
            real(s.reach_plus),
            real(s.reach_minus),
        ]);
        ctx.out.write_csv("lil.csv", &["kind", "level", "plus", "minus"], rows)?;
        let paths = report.paths.iter().enumerate().map(|(i, p)| {
            vec![i.to_string(), real(p.sup_plus), real(p.sup_minus)]
        });
        ctx.out.write_csv("lil_paths.csv", &["path_index", "sup_plus", "sup_minus"], paths)?;
    }
    if ctx.wants(OutputFormat::Json) {
        ctx.out.write_json("lil.json", &report)?;
    }
    ctx.say(format!(
        "window [{}, {}]: {} checkpoints used, {} excluded",
        window.0,
        window.1,
        report.used.len(),
        report.excluded.len()
    ))?;
    if let Some(median) = s.quantiles.iter().find(|q| q.level == 0.5) {
        ctx.say(format!("median sup R = {:.4}, sup -R = {:.4}", median.plus, median.minus))?;
    }
    ctx.say(format!(
        "exceed 1+eps_out: {:.4} / {:.4}; reach 1-eps_in: {:.4} / {:.4}",
        s.exceed_plus, s.exceed_minus, s.reach_plus, s.reach_minus
    ))
}

fn cmd_mconv(ctx: &mut Ctx) -> Result<(), CliError> {
    if ctx.enforce() && ctx.regime.b_inf_finite != Finiteness::Finite {
        let reason = match ctx.regime.b_inf_finite {
            Finiteness::Infinite => ctx.lemma10_reason(),
            _ => "B_inf^2 < inf cannot be established for this model".into(),
        };
        return Err(CliError::NotApplicable(format!(
            "convergence of M_n needs B_inf^2 < inf, but {reason}"
        )));
    }
    let norm = ctx.normalizers(false)?;
    let runs = ctx.ensemble(&norm, &[])?;
    let report = m_convergence_report(&runs, &norm)?;
    if ctx.wants(OutputFormat::Csv) {
        let body = report
            .rows
            .iter()
            .map(|r| vec![r.n.to_string(), real(r.mean_sq), real(r.std_error)]);
        ctx.out.write_csv("mconv.csv", &["n", "mean_sq", "std_error"], body)?;
    }
    if ctx.wants(OutputFormat::Json) {
        ctx.out.write_json("mconv.json", &report)?;
    }
    ctx.say(format!(
        "{} increment pairs, decreasing: {}; Var(M_hat) = {:.4e} +- {:.1e}{}",
        report.rows.len(),
        report.residuals_decreasing,
        report.m_hat_variance,
        report.m_hat_variance_se,
        if report.degenerate { " (degenerate)" } else { "" }
    ))
}

#[derive(Serialize)]
struct LemmasOutput {
    xi_source: XiChoice,
    lemma1: derw_core::stats::Lemma1Report,
    summability: derw_core::stats::SummabilityReport,
    variance_floor: derw_core::stats::VarianceFloorReport,
}

fn cmd_lemmas(ctx: &mut Ctx) -> Result<(), CliError> {
    let a = ctx.cfg.analysis.clone();
    let run = ctx.cfg.run()?.clone();
    let norm = ctx.normalizers(false)?;
    let grid = match &a.lemma_grid {
        Some(spec) => spec
            .expand(run.n_max, run.separation_factor)
            .map_err(|e| CliError::Config(format!("analysis.lemma_grid: {e}")))?,
        None => ctx.checkpoints(&[])?,
    };
    let runs = match a.xi_source {
        XiChoice::Ensemble => Some(ctx.ensemble(&norm, &[])?),
        XiChoice::Exact => None,
    };
    let source = match &runs {
        Some(r) => XiSource::Ensemble(r),
        None => XiSource::Exact,
    };
    let tail = TailVariance::new(&ctx.cfg.model, &norm, source)?;
    let lemma1 = lemma1_ratio_report(&tail, &grid);
    let summability = summability_report(&norm, Some(&tail), &grid);
    let range = match a.floor_range {
        Some([lo, hi]) => (lo, hi),
        None => (grid[0].max(1), run.n_max),
    };
    let floor = variance_floor_report(&norm, range, &grid, runs.as_deref())?;

    if ctx.wants(OutputFormat::Csv) {
        let mut ns: Vec<usize> = grid.iter().copied().filter(|&n| n >= 1).collect();
        ns.extend(summability.rows.iter().map(|r| r.n));
        ns.sort_unstable();
        ns.dedup();
        let body = ns.iter().map(|&n| {
            let ratio = lemma1.rows.iter().find(|r| r.n == n).map(|r| r.ratio);
            let partial = summability
                .rows
                .iter()
                .find(|r| r.n == n)
                .and_then(|r| r.sum_inv_s4a4);
            let e = norm.ex(n);
            vec![n.to_string(), opt_real(ratio), opt_real(partial), real((1.0 - e) * (1.0 + e))]
        });
        ctx.out.write_csv(
            "lemmas.csv",
            &["n", "ratio_lemma1", "partial_sum_lemma2", "var_floor"],
            body,
        )?;
    }
    if let Some(last) = lemma1.rows.last() {
        ctx.say(format!("Lemma 1 ratio at n = {}: {:.6}", last.n, last.ratio))?;
    }
    if let Some(last) = summability.rows.last() {
        ctx.say(format!(
            "sum 1/(s^4 a^4) to n = {}: {}",
            last.n,
            last.sum_inv_s4a4.map_or("undefined".into(), |v| format!("{v:.6e}"))
        ))?;
    }
    ctx.say(format!(
        "min Var[X_n] over [{}, {}]: {:.6} at n = {}",
        floor.range.0, floor.range.1, floor.floor, floor.floor_at
    ))?;
    if ctx.wants(OutputFormat::Json) {
        let out = LemmasOutput {
            xi_source: a.xi_source,
            lemma1,
            summability,
            variance_floor: floor,
        };
        ctx.out.write_json("lemmas.json", &out)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct PhasePoint {
    p: f64,
    alpha: f64,
    threshold: f64,
    diffusivity: String,
    elephant_strength: String,
    b_inf_finite: String,
    thm1: String,
    thm3: String,
    variance_floor_expected: bool,
}

fn applicability(a: Applicability) -> String {
    enum_label(&a)
}

fn cmd_phase_scan(ctx: &mut Ctx) -> Result<(), CliError> {
    let scan = ctx
        .cfg
        .scan
        .clone()
        .ok_or_else(|| CliError::Config("phase-scan needs a [scan] section".into()))?;
    let model = &ctx.cfg.model;
    let mut points = Vec::new();
    for p in scan.p.values() {
        for alpha in scan.alpha.values() {
            let params = ModelParams::new(p, model.q, SequenceSpec::constant(alpha), model.beta.clone())
                .map_err(|e| CliError::Config(format!("scan point (p = {p}, alpha = {alpha}): {e}")))?;
            let r = classify_regime(&params)?;
            points.push(PhasePoint {
                p,
                alpha,
                threshold: r.threshold,
                diffusivity: enum_label(&r.diffusivity),
                elephant_strength: enum_label(&r.elephant_strength),
                b_inf_finite: enum_label(&r.b_inf_finite),
                thm1: applicability(r.thm1_applicable),
                thm3: applicability(r.thm3_applicable),
                variance_floor_expected: r.variance_floor_expected,
            });
        }
    }
    if ctx.wants(OutputFormat::Csv) {
        let header = [
            "p",
            "alpha",
            "threshold",
            "diffusivity",
            "elephant_strength",
            "b_inf_finite",
            "thm1",
            "thm3",
            "variance_floor_expected",
        ];
        let body = points.iter().map(|pt| {
            vec![
                real(pt.p),
                real(pt.alpha),
                real(pt.threshold),
                pt.diffusivity.clone(),
                pt.elephant_strength.clone(),
                pt.b_inf_finite.clone(),
                pt.thm1.clone(),
                pt.thm3.clone(),
                pt.variance_floor_expected.to_string(),
            ]
        });
        ctx.out.write_csv("phase.csv", &header, body)?;
    }
    if ctx.wants(OutputFormat::Json) {
        ctx.out.write_json("phase.json", &points)?;
    }
    let finite = points.iter().filter(|pt| pt.b_inf_finite == "finite").count();
    ctx.say(format!(
        "{} grid points, {} with B_inf^2 finite",
        points.len(),
        finite
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_names_round_trip_through_json() {
        let tasks = [
            Task::Regime,
            Task::Normalizers { a_inf: true, all_rows: false },
            Task::PhaseScan,
        ];
        for t in tasks {
            let json = serde_json::to_string(&t).unwrap();
            assert!(json.contains(t.name()), "{json}");
            assert_eq!(serde_json::from_str::<Task>(&json).unwrap(), t);
        }
    }

    #[test]
    fn replay_comparison_reports_changed_and_missing_files() {
        let f = |name: &str, sha: &str| FileEntry {
            name: name.into(),
            bytes: 1,
            sha256: sha.into(),
        };
        let recorded = [f("a", "1"), f("b", "2")];
        let replayed = [f("a", "1"), f("b", "3"), f("c", "4")];
        let diff = compare_files(&recorded, &replayed);
        let names: Vec<_> = diff.iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, ["b", "c"]);
    }
}
