//! `betaconv`: file-based jobs for beta-product convolutions.
//!
//! Exit status: 0 success, 1 usage or configuration error, 2 numerical
//! failure, 3 verification failure.

mod config;
mod run;

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Family;
use run::{Overrides, TailFlags};

#[derive(Parser, Debug)]
#[command(
    name = "betaconv",
    version,
    about = "Beta-product convolutions: transform, recover, tail index, simulate, verify"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON job descriptor.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config; default 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the config's `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Forward transform: writes scaled_cdf.csv, scaled_pdf.csv, meta.json.
    Transform(Common),
    /// Recover the base law from a scaled CDF or density.
    Recover(Common),
    /// Regular-variation index at 0 of a sample or a named law.
    TailIndex {
        #[command(flatten)]
        common: Common,
        /// Samples, one per line.
        #[arg(long, conflicts_with = "family")]
        input: Option<PathBuf>,
        /// Named law, e.g. `pure-power:gamma=2` or inline JSON.
        #[arg(long)]
        family: Option<String>,
        /// Quantile window `q1,q2`.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        window: Option<Vec<f64>>,
    },
    /// Monte Carlo minima experiments.
    Simulate(Common),
    /// Built-in identity suite; exits 3 when a check fails.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Run only these check groups (comma-separated or repeated).
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
        /// Loosen every threshold to at least this value.
        #[arg(long)]
        tol: Option<f64>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io { path: PathBuf, message: String },
    Core(betaconv_core::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Io { path, message } => write!(f, "{}: {message}", path.display()),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<betaconv_core::Error> for CliError {
    fn from(e: betaconv_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numeric_failure() => 2,
            _ => 1,
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("BETACONV_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("BETACONV_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size the worker pool: {e}")))
}

fn require(config: &Option<PathBuf>) -> Result<&PathBuf, CliError> {
    config
        .as_ref()
        .ok_or_else(|| CliError::Usage("--config is required for this command".into()))
}

fn dispatch(cli: Cli) -> Result<run::Outcome, CliError> {
    configure_threads()?;
    let overrides = |c: &Common| Overrides {
        seed: c.seed,
        out: c.out.clone(),
    };
    match cli.command {
        Command::Transform(c) => run::transform(require(&c.config)?, &overrides(&c)),
        Command::Recover(c) => run::recover(require(&c.config)?, &overrides(&c)),
        Command::TailIndex {
            common,
            input,
            family,
            window,
        } => {
            let flags = TailFlags {
                input,
                family: family.as_deref().map(Family::parse_flag).transpose()?,
                window: window.map(|w| [w[0], w[1]]),
            };
            run::tail_index(common.config.as_deref(), &flags, &overrides(&common))
        }
        Command::Simulate(c) => run::simulate(require(&c.config)?, &overrides(&c)),
        Command::Verify { common, only, tol } => run::verify(common.config.as_deref(), &only, tol, &overrides(&common)),
    }
}

/// Status for a finished dispatch; also reports to stdout and stderr.
fn finish(result: Result<run::Outcome, CliError>) -> u8 {
    match result {
        Ok(outcome) => {
            // a closed pipe (`| head`) is not an error worth a panic
            let text = serde_json::to_string_pretty(&outcome.document).unwrap_or_default();
            let _ = writeln!(std::io::stdout(), "{text}");
            if outcome.verification_failed {
                eprintln!("betaconv: verification failed");
                3
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("betaconv: {e}");
            e.exit_code()
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    ExitCode::from(finish(dispatch(cli)))
}
