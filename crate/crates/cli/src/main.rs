//! `mapgroups`: reproducible experiment runs emitting JSON and CSV reports.
//!
//! Exit codes: 0 all checks passed, 1 a check failed, 2 bad input or config.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mapgroups::sobolev::WeightConvention;

use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("output error: {0}")]
    Output(String),
    #[error(transparent)]
    Core(#[from] mapgroups::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ConventionArg {
    Paper,
    Standard,
}

#[derive(Debug, Parser)]
#[command(name = "mapgroups", version, about = "Sobolev mapping group experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for reports.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base seed; each probe suite derives its own stream from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Mode cutoff N.
    #[arg(long, global = true)]
    modes: Option<usize>,
    /// Weight exponent convention.
    #[arg(long, global = true, value_enum)]
    convention: Option<ConventionArg>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Probe suites for the four axioms; pass/fail JSON.
    VerifyAxioms,
    /// Sobolev norms of a field file or a seeded random field.
    Norms {
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// Minimum-norm extension of sampled data on a window.
    Extend {
        #[arg(long)]
        field: Option<PathBuf>,
        /// Sobolev order of the extension.
        #[arg(long, default_value_t = 1.0)]
        order: f64,
    },
    /// Group-law, exponential, adjoint and BCH checks on the mapping group.
    GroupDemo,
    /// Evolution of the regularity ODE along a curve file; writes eta1.json.
    Evolve {
        #[arg(long)]
        curve: PathBuf,
    },
    /// Rung spectra and critical-order fits.
    Ladder,
    /// Shrinking and enlarging certificates for a level-set domain.
    ShrinkDomain {
        #[arg(long, default_value = "disc")]
        domain: String,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::VerifyAxioms => "verify-axioms",
            Command::Norms { .. } => "norms",
            Command::Extend { .. } => "extend",
            Command::GroupDemo => "group-demo",
            Command::Evolve { .. } => "evolve",
            Command::Ladder => "ladder",
            Command::ShrinkDomain { .. } => "shrink-domain",
        }
    }
}

fn build_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(n) = cli.modes {
        cfg.modes = n;
    }
    if let Some(c) = cli.convention {
        cfg.convention = match c {
            ConventionArg::Paper => WeightConvention::PaperHalf,
            ConventionArg::Standard => WeightConvention::Standard,
        };
    }
    cfg.validate()?;
    cfg.check_tolerance_keys(commands::KNOWN_CHECKS)?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<report::Report, CliError> {
    let cfg = build_config(cli)?;
    std::fs::create_dir_all(&cfg.out).map_err(|e| CliError::Output(format!("{}: {e}", cfg.out.display())))?;
    let name = cli.command.name();
    log::info!("running {name} with seed {} and N = {}", cfg.seed, cfg.modes);
    let report = match &cli.command {
        Command::VerifyAxioms => commands::axioms::run(&cfg)?,
        Command::Norms { field } => commands::spaces::norms(&cfg, field.as_deref())?,
        Command::Extend { field, order } => commands::spaces::extend(&cfg, field.as_deref(), *order)?,
        Command::GroupDemo => commands::groups::group_demo(&cfg)?,
        Command::Evolve { curve } => commands::groups::evolve(&cfg, curve)?,
        Command::Ladder => commands::ladder::run(&cfg)?,
        Command::ShrinkDomain { domain } => commands::domains::run(&cfg, domain)?,
    };
    report.write(&cfg.out)?;
    Ok(report)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            print!("{}", report.summary());
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("mapgroups {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code())
        }
    }
}
