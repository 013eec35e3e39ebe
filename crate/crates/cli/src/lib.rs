//! `ringlink` command-line front end: reads a JSON experiment config, runs
//! one pipeline and writes a self-describing result envelope.

// `!(x > 0.0)` is used on purpose: it rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod envelope;
pub mod error;
pub mod run;
pub mod trace;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::ExperimentConfig;
pub use envelope::{ResultEnvelope, Table};
pub use error::CliError;
pub use run::{Experiment, RunOutput};

/// Environment variable fixing the worker-thread count.
pub const THREADS_ENV: &str = "RINGLINK_THREADS";

#[derive(Debug, Parser)]
#[command(name = "ringlink", version, about = "Polarization-diverse microring link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct IoArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Result envelope path (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Also write the records table next to `--out` with a `.csv` extension.
    #[arg(long)]
    csv: bool,
    /// Stamp the envelope with the wall-clock time (breaks byte-identity).
    #[arg(long)]
    timestamp: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Drop and through spectra with resonance metrics.
    Spectrum(IoArgs),
    /// Orthogonally polarized single-sideband generation.
    Ossb(IoArgs),
    /// Microwave-photonic filter response.
    Equalizer(IoArgs),
    /// Fit a measured resonance or thermal drift.
    Fit(IoArgs),
    /// Sweep polarizer or input angle.
    SweepTheta(IoArgs),
    /// Sweep chip temperature.
    SweepTemp(IoArgs),
    /// Sweep carrier offset and track passband centres.
    SweepCarrier(IoArgs),
}

impl Command {
    fn split(self) -> (Experiment, IoArgs) {
        match self {
            Command::Spectrum(a) => (Experiment::Spectrum, a),
            Command::Ossb(a) => (Experiment::Ossb, a),
            Command::Equalizer(a) => (Experiment::Equalizer, a),
            Command::Fit(a) => (Experiment::Fit, a),
            Command::SweepTheta(a) => (Experiment::SweepTheta, a),
            Command::SweepTemp(a) => (Experiment::SweepTemp, a),
            Command::SweepCarrier(a) => (Experiment::SweepCarrier, a),
        }
    }
}

/// Run one experiment from a config file and assemble its envelope.
pub fn run(experiment: Experiment, config_path: &Path) -> Result<(ResultEnvelope, Option<Table>), CliError> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| CliError::config("<file>", format!("{}: {e}", config_path.display())))?;
    let base = config_path.parent().unwrap_or_else(|| Path::new("."));
    run_text(experiment, &text, base)
}

/// As [`run`], with the config given as text; relative trace paths resolve against `base_dir`.
pub fn run_text(experiment: Experiment, text: &str, base_dir: &Path) -> Result<(ResultEnvelope, Option<Table>), CliError> {
    let (cfg, raw) = ExperimentConfig::from_json(text)?;
    let out = run::execute(experiment, &cfg, base_dir)?;
    let env = ResultEnvelope {
        tool: envelope::TOOL.into(),
        tool_version: envelope::TOOL_VERSION.into(),
        experiment: experiment.name().into(),
        config_sha256: envelope::config_hash(&raw),
        config: raw,
        scalars: out.scalars,
        outputs: out.outputs,
        warnings: out.warnings,
        timestamp_unix_s: None,
    };
    Ok((env, out.table))
}

fn configure_threads() -> Result<(), CliError> {
    let Some(raw) = std::env::var_os(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .to_str()
        .and_then(|s| s.trim().parse().ok())
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    // a pool built earlier in this process keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn execute(cmd: Command) -> Result<(), CliError> {
    configure_threads()?;
    let (experiment, io) = cmd.split();
    let (mut env, table) = run(experiment, &io.config)?;
    if io.timestamp {
        env.timestamp_unix_s = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs());
    }
    envelope::write_atomic(&io.out, &envelope::to_pretty_bytes(&env))?;
    if io.csv {
        let csv = table.map(|t| t.to_csv()).unwrap_or_default();
        envelope::write_atomic(&io.out.with_extension("csv"), csv.as_bytes())?;
    }
    for w in &env.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

/// Parse `args` (including the program name), run, and return the exit status.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { error::EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
