//! Batch runner: parses a manifest, dispatches to one experiment, writes the
//! reports into a fresh run directory and maps the outcome to an exit code.
//!
//! Exit codes: `0` every check passed, `1` some check failed or a computation
//! broke down, `2` usage, config or precondition error.

pub mod commands;
pub mod tables;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use rates_lab::{CheckResult, LabError};
use serde::Serialize;
use thiserror::Error;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const JOBS_ENV: &str = "RATES_LAB_JOBS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Learning-rate sweep and slope fit.
    Rates,
    /// Packing family, KL bookkeeping and the testing game.
    LowerBound,
    /// Invariant suites for the supporting inequalities.
    Lemmas,
    /// Spectrum summary: decay, embedding constants, effective dimension.
    KernelInfo,
    /// Render rate reports, or the exponent table, as text and CSV.
    Tables,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Rates => "rates",
            Command::LowerBound => "lower-bound",
            Command::Lemmas => "lemmas",
            Command::KernelInfo => "kernel-info",
            Command::Tables => "tables",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rates-lab", version, about = "Learning-rate and lower-bound experiments for spectral LS-SVMs")]
pub struct Cli {
    /// Command to run (alternatively `--command`).
    #[arg(value_enum)]
    pub command: Option<Command>,

    /// Report files for `tables`.
    pub reports: Vec<PathBuf>,

    #[arg(long = "command", value_enum, value_name = "NAME")]
    pub command_flag: Option<Command>,

    /// Key-value config file; built-in defaults when omitted.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Parent directory for run directories.
    #[arg(long, value_name = "DIR", default_value = "runs")]
    pub out: PathBuf,

    /// Overrides the seed in the config.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,

    /// Worker threads (0 = all cores).
    #[arg(long, value_name = "N", env = JOBS_ENV)]
    pub jobs: Option<usize>,

    /// With `tables`: print the exponent table for the configured `p`, `alpha` and `betas`.
    #[arg(long)]
    pub exponents: bool,
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: Command,
    pub config_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub reports: Vec<PathBuf>,
    pub exponents: bool,
}

impl RunManifest {
    pub fn from_cli(cli: Cli) -> Result<Self, CliError> {
        let command = match (cli.command, cli.command_flag) {
            (Some(a), Some(b)) if a != b => {
                return Err(CliError::Usage(format!(
                    "conflicting commands `{}` and `{}`",
                    a.name(),
                    b.name()
                )))
            }
            (Some(c), _) | (None, Some(c)) => c,
            (None, None) => return Err(CliError::Usage("no command given".into())),
        };
        if command != Command::Tables && !cli.reports.is_empty() {
            return Err(CliError::Usage(format!(
                "unexpected argument `{}` for `{}`",
                cli.reports[0].display(),
                command.name()
            )));
        }
        Ok(RunManifest {
            command,
            config_path: cli.config,
            output_dir: cli.out,
            seed: cli.seed,
            jobs: cli.jobs,
            reports: cli.reports,
            exponents: cli.exponents,
        })
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Lab(#[from] LabError),
    #[error("cannot write `{path}`: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Output { .. } => EXIT_USAGE,
            CliError::Lab(e) => match e {
                LabError::Config(_)
                | LabError::Argument(_)
                | LabError::Precondition(_)
                | LabError::Domain(_)
                | LabError::Io(_)
                | LabError::Json(_) => EXIT_USAGE,
                LabError::Numerical(_) | LabError::Construction(_) | LabError::Cell { .. } => EXIT_FAIL,
            },
        }
    }
}

/// A named output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    pub fn new(name: impl Into<String>, contents: impl Into<String>) -> Self {
        Artifact {
            name: name.into(),
            contents: contents.into(),
        }
    }
}

/// Result of one command before anything is written.
#[derive(Debug, Clone, Default)]
pub struct CommandOutput {
    pub checks: Vec<CheckResult>,
    /// Informational stdout lines printed before the checks.
    pub info: Vec<String>,
    pub artifacts: Vec<Artifact>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub run_dir: Option<PathBuf>,
    pub lines: Vec<String>,
}

/// Runs the manifest on a pool of `jobs` threads and writes its reports.
pub fn run(manifest: &RunManifest) -> RunOutcome {
    match try_run(manifest) {
        Ok(outcome) => outcome,
        Err(e) => RunOutcome {
            exit_code: e.exit_code(),
            run_dir: None,
            lines: vec![format!("error: {e}")],
        },
    }
}

fn try_run(manifest: &RunManifest) -> Result<RunOutcome, CliError> {
    fs::create_dir_all(&manifest.output_dir).map_err(|source| CliError::Output {
        path: manifest.output_dir.clone(),
        source,
    })?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(manifest.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} worker threads: {e}", manifest.jobs.unwrap_or(0))))?;
    let output = pool.install(|| dispatch(manifest))?;
    let seed = effective_seed(manifest)?;
    let run_dir = create_run_dir(&manifest.output_dir, seed)?;
    let mut files = output.artifacts;
    files.push(Artifact::new(
        "manifest.json",
        serde_json::to_string_pretty(manifest).map_err(LabError::from)? + "\n",
    ));
    for a in &files {
        let path = run_dir.join(&a.name);
        fs::write(&path, &a.contents).map_err(|source| CliError::Output { path, source })?;
    }
    let mut lines = output.info;
    lines.extend(output.checks.iter().map(ToString::to_string));
    let passed = output.checks.iter().filter(|c| c.passed).count();
    lines.push(format!(
        "{}: {passed}/{} checks passed; reports in {}",
        manifest.command.name(),
        output.checks.len(),
        run_dir.display()
    ));
    Ok(RunOutcome {
        exit_code: if passed == output.checks.len() { EXIT_PASS } else { EXIT_FAIL },
        run_dir: Some(run_dir),
        lines,
    })
}

fn dispatch(m: &RunManifest) -> Result<CommandOutput, CliError> {
    let config = m.config_path.as_deref();
    match m.command {
        Command::Rates => commands::rates(config, m.seed),
        Command::LowerBound => commands::lower_bound(config, m.seed),
        Command::Lemmas => commands::lemmas(config, m.seed),
        Command::KernelInfo => commands::kernel_info(config),
        Command::Tables => commands::tables(config, &m.reports, m.exponents),
    }
}

/// Seed used in the run-directory name: the override, else the config's, else 0.
fn effective_seed(m: &RunManifest) -> Result<u64, CliError> {
    if let Some(s) = m.seed {
        return Ok(s);
    }
    match &m.config_path {
        Some(p) => Ok(rates_lab::config::KeyValueFile::from_path(p)?.get_or("seed", 0)?),
        None => Ok(0),
    }
}

/// `<parent>/<UTC timestamp>-seed<seed>`, with a numeric suffix if taken.
pub fn create_run_dir(parent: &Path, seed: u64) -> Result<PathBuf, CliError> {
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
    let base = format!("{stamp}-seed{seed}");
    for k in 0.. {
        let name = if k == 0 { base.clone() } else { format!("{base}-{k}") };
        let dir = parent.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(source) => return Err(CliError::Output { path: dir, source }),
        }
    }
    unreachable!("unbounded suffix search")
}
