//! `critfield` — command-line front end for the thin-film critical-field
//! analysis chain.
//!
//! Subcommands: `model`, `campaign`, `fit`, `budget`, `detect`, `bridge`.
//! Every command takes `--config <json>` plus optional positional data
//! files, writes plot-ready CSV/JSON into `--out` (default `./out`, or
//! the `CRITFIELD_OUT` environment variable), and is deterministic under
//! a fixed config and seed.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical
//! flag (non-convergence or validity waiver used), 3 I/O error.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use critfield::config::RunConfig;
use critfield::Error as CoreError;

#[derive(Parser)]
#[command(
    name = "critfield",
    version,
    about = "Thin-film critical-field analysis chain"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory [default: ./out, or $CRITFIELD_OUT].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed; overrides the config's `seed` field.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the critical-field model: simple film, in-cavity field,
    /// deviation ratio and validity report over a reduced-temperature grid.
    Model(CommonArgs),
    /// Generate a seeded synthetic measurement campaign (transition
    /// curves over a field ladder, reduced to critical points), or — when
    /// given existing curve CSVs — reduce those instead of generating.
    Campaign {
        /// Optional measured curve CSVs (`temperature_K,field_G,resistance_mOhm`)
        /// to reduce instead of generating synthetic ones.
        curves: Vec<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Fit critical-field points and emit parameters, covariance,
    /// residuals and confidence bands.
    Fit {
        /// Critical points CSV (`t,h_G[,sigma_h_G]`).
        points: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Derive temperature and alignment sensitivity requirements over a
    /// reduced-temperature window.
    Budget(CommonArgs),
    /// Decide whether the configured signal is detectable, either from a
    /// points file (per-point sensitivities) or from the configured
    /// scalar sensitivity.
    Detect {
        /// Optional critical points CSV with uncertainties.
        points: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Simulate the four-element film/cavity bridge over an applied-field
    /// sweep and trace its imbalance peak.
    Bridge(CommonArgs),
}

/// CLI failure modes, mapped onto the documented exit codes.
pub enum CliError {
    Usage(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Numerical(m) | CliError::Io(m) => m,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Config(_) | CoreError::Parse(_) => CliError::Usage(e.to_string()),
            CoreError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Everything a command needs: validated config, provenance, output
/// directory and the resolved seed.
pub struct Ctx {
    pub config: RunConfig,
    pub config_sha256: String,
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
}

impl Ctx {
    fn build(common: &CommonArgs) -> Result<Self, CliError> {
        if !common.config.exists() {
            return Err(CliError::Usage(format!(
                "config file {} does not exist",
                common.config.display()
            )));
        }
        let bytes = std::fs::read(&common.config)?;
        let config_sha256 = output::sha256_hex(&bytes);
        let text = String::from_utf8(bytes)
            .map_err(|e| CliError::Usage(format!("config is not UTF-8: {e}")))?;
        let config = RunConfig::from_json(&text)?;
        let out_dir = common
            .out
            .clone()
            .or_else(|| std::env::var_os("CRITFIELD_OUT").map(PathBuf::from))
            .or_else(|| config.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        let seed = common.seed.or(config.seed);
        Ok(Self {
            config,
            config_sha256,
            out_dir,
            seed,
        })
    }

    /// Seed for commands that draw randomness; required explicitly.
    pub fn require_seed(&self) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| {
            CliError::Usage(
                "this command needs a seed: pass --seed or set `seed` in the config".to_string(),
            )
        })
    }

    pub fn provenance_seed(&self) -> String {
        match self.seed {
            Some(s) => s.to_string(),
            None => "none".to_string(),
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Model(ref common) => commands::model::run(&Ctx::build(common)?),
        Command::Campaign {
            ref curves,
            ref common,
        } => commands::campaign::run(&Ctx::build(common)?, curves),
        Command::Fit {
            ref points,
            ref common,
        } => commands::fit::run(&Ctx::build(common)?, points),
        Command::Budget(ref common) => commands::budget::run(&Ctx::build(common)?),
        Command::Detect {
            ref points,
            ref common,
        } => commands::detect::run(&Ctx::build(common)?, points.as_deref()),
        Command::Bridge(ref common) => commands::bridge::run(&Ctx::build(common)?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not usage errors
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("critfield: error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
