use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use derw_cli::config::OutputFormat;
use derw_cli::{execute, replay, CliError, ExperimentConfig, Invocation, Overrides, Task};

/// Simulation and diagnostics for the elephant random walk with varying
/// memory and environment.
///
/// Exit codes: 0 success, 1 config error, 2 regime does not license the
/// analysis, 3 numerical failure.
#[derive(Parser)]
#[command(name = "derw-lab", version)]
struct Cli {
    /// Experiment config (TOML, or JSON for a `.json` file).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override run.master_seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads [default: run.worker_count, then DERW_LAB_THREADS, then all cores].
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory [default: output.directory, then ./derw-out].
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Write only this format.
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    #[command(flatten)]
    Task(Task),
    /// Re-run a recorded command from its manifest and compare file hashes.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Task(task) => {
            let path = cli
                .config
                .ok_or_else(|| CliError::Config("--config is required".into()))?;
            let config = ExperimentConfig::load(&path)?;
            let overrides = Overrides {
                seed: cli.seed,
                workers: cli.workers,
                out_dir: cli.out_dir,
                format: cli.format,
                env_threads: std::env::var("DERW_LAB_THREADS").ok(),
            };
            let inv = Invocation::new(task, config, &overrides)?;
            execute(&inv, &mut stdout)?;
        }
        Command::Replay { manifest } => {
            if cli.config.is_some() || cli.seed.is_some() || cli.format.is_some() {
                return Err(CliError::Config(
                    "replay takes everything from the manifest; drop --config/--seed/--format".into(),
                ));
            }
            if cli.workers == Some(0) {
                return Err(CliError::Config("--workers must be at least 1".into()));
            }
            let (fresh, mismatches) = replay(&manifest, cli.out_dir, cli.workers, &mut stdout)?;
            if !mismatches.is_empty() {
                let names: Vec<_> = mismatches.iter().map(|m| m.name.as_str()).collect();
                return Err(CliError::Numerical(format!(
                    "replay differs from the recorded run in: {}",
                    names.join(", ")
                )));
            }
            writeln!(stdout, "replay reproduced all {} files", fresh.files.len())
                .map_err(|e| CliError::io("stdout", e))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("derw-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
