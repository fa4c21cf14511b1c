//! `hk`: simulate Hegselmann-Krause dynamics, sweep consensus probability
//! over parameter grids, run the property suites, and compare the initial
//! disconnection frequency against its closed-form bound.
//!
//! Exit codes: 0 success, 1 usage or domain error, 2 non-convergence,
//! 3 verification failure.

mod commands;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    NonConvergence(String),
    Verification(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::NonConvergence(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::NonConvergence(m) => write!(f, "not converged: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<hk_core::HkError> for CliError {
    fn from(e: hk_core::HkError) -> Self {
        CliError::Usage(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "hk", version, about = "Hegselmann-Krause opinion dynamics on [0, 1]")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one trajectory and report its clusters
    Simulate(SimulateArgs),
    /// Estimate consensus probability over an (n, eps) grid, as CSV
    Sweep(SweepArgs),
    /// Run the randomized property suites
    Verify(VerifyArgs),
    /// Compare initial disconnection frequency with (1 - eps)^(n - 2)
    Bound(BoundArgs),
}

/// Options shared by all subcommands.
#[derive(Debug, Args)]
struct Common {
    /// Flat `key = value` file; command-line flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed
    #[arg(long)]
    seed: Option<String>,
    /// Arithmetic: float64 | exact-rational
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    max_steps: Option<String>,
    #[arg(long)]
    convergence_tol: Option<String>,
    #[arg(long)]
    consensus_tol: Option<String>,
    /// Worker threads (also HK_THREADS); never changes results
    #[arg(long)]
    threads: Option<String>,
    /// Output file (CSV or JSON); standard output when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn flags(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("seed", self.seed.clone()),
            ("mode", self.mode.clone()),
            ("max-steps", self.max_steps.clone()),
            ("convergence-tol", self.convergence_tol.clone()),
            ("consensus-tol", self.consensus_tol.clone()),
            ("threads", self.threads.clone()),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
        ]
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Number of agents (sampled uniformly unless --opinions is given)
    #[arg(long)]
    n: Option<String>,
    /// Confidence threshold
    #[arg(long)]
    eps: Option<String>,
    /// Explicit initial opinions, comma separated
    #[arg(long)]
    opinions: Option<String>,
    /// Write one JSON record per step to this file
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Include full opinion profiles in the trace
    #[arg(long)]
    trace_opinions: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Agent counts: `10,100` or `start:stop:step`
    #[arg(long)]
    n: Option<String>,
    /// Thresholds: `0.5`, `0.25,0.5` or `start:stop:step` (inclusive)
    #[arg(long)]
    eps: Option<String>,
    /// Trials per grid cell
    #[arg(long)]
    trials: Option<String>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Suite name, comma list, or `all`
    #[arg(long)]
    suite: Option<String>,
    /// Random cases per suite
    #[arg(long)]
    cases: Option<String>,
}

#[derive(Debug, Args)]
struct BoundArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    trials: Option<String>,
}

fn dispatch(command: Command) -> Result<(), CliError> {
    use config::Settings;
    match command {
        Command::Simulate(a) => {
            let mut flags = a.common.flags();
            flags.extend([
                ("n", a.n),
                ("eps", a.eps),
                ("opinions", a.opinions),
                ("trace", a.trace.map(|p| p.display().to_string())),
                ("trace-opinions", a.trace_opinions.then(|| "true".to_string())),
            ]);
            commands::simulate(&Settings::load(a.common.config.as_deref(), flags)?)
        }
        Command::Sweep(a) => {
            let mut flags = a.common.flags();
            flags.extend([("n", a.n), ("eps", a.eps), ("trials", a.trials)]);
            commands::sweep(&Settings::load(a.common.config.as_deref(), flags)?)
        }
        Command::Verify(a) => {
            let mut flags = a.common.flags();
            flags.extend([("suite", a.suite), ("cases", a.cases)]);
            commands::verify(&Settings::load(a.common.config.as_deref(), flags)?)
        }
        Command::Bound(a) => {
            let mut flags = a.common.flags();
            flags.extend([("n", a.n), ("eps", a.eps), ("trials", a.trials)]);
            commands::bound(&Settings::load(a.common.config.as_deref(), flags)?)
        }
    }
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
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
