//! `bt`: Bayesian event-study estimates with trend-violation priors.

mod commands;
mod error;
mod io;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Parser)]
#[command(name = "bt", version, about = "Posterior treatment effects when parallel trends may fail")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EbMode {
    Mle,
    Hierarchical,
}

#[derive(Args)]
pub struct InputArgs {
    /// Event study as JSON, or a `period,estimate` CSV (requires --cov).
    #[arg(long)]
    pub input: PathBuf,
    /// Sampling covariance as a headerless numeric CSV, for CSV estimates.
    #[arg(long)]
    pub cov: Option<PathBuf>,
}

#[derive(Args)]
pub struct OutputArgs {
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Report path; CSV output also writes a JSON sidecar next to it. Defaults to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Also write the event-study figure as SVG.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Posterior under a prior read from a JSON file.
    Posterior {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        prior: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Empirical Bayes with the random-walk prior.
    Eb {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value_t = EbMode::Mle)]
        mode: EbMode,
        /// Hyper-prior grid for hierarchical mode.
        #[arg(long)]
        hyper: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Hierarchical Bayes over a grid of random-walk parameters.
    Hb {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        hyper: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Coverage or consistency experiment described by a JSON config.
    Simulate {
        #[arg(long, alias = "config")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the credible level of a coverage experiment.
        #[arg(long)]
        level: Option<f64>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Checks that an event study (and optionally a prior) is well formed.
    Validate {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        prior: Option<PathBuf>,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("BT_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Parse(format!("BT_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Parse(format!("BT_THREADS: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Posterior { input, prior, output } => commands::posterior(&input, &prior, &output),
        Command::Eb {
            input,
            mode,
            hyper,
            output,
        } => match mode {
            EbMode::Mle if hyper.is_some() => Err(CliError::Parse("--hyper requires --mode hierarchical".into())),
            EbMode::Mle => commands::eb_mle(&input, &output),
            EbMode::Hierarchical => commands::hierarchical("eb", &input, hyper.as_deref(), &output),
        },
        Command::Hb { input, hyper, output } => commands::hierarchical("hb", &input, hyper.as_deref(), &output),
        Command::Simulate {
            input,
            out,
            seed,
            level,
            format,
        } => commands::simulate(&input, out.as_deref(), seed, level, format),
        Command::Validate { input, prior } => commands::validate(&input, prior.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
