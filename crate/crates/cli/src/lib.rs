//! Command-line front end for the `dsm-core` solvers.
//!
//! Exit codes: 0 success, 1 a check did not pass, 2 a solver did not
//! converge, 3 configuration error, 4 I/O error.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{ExperimentConfig, Format, Method};
use crate::error::CliError;
use crate::output::Report;

#[derive(Debug, Parser)]
#[command(name = "dsm", version, about = "Regularized solvers for monotone equations with noisy data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Discrepancy-principle choice of the regularization parameter.
    Dp,
    /// Continuous regularized flows with a discrepancy stopping time.
    Flow,
    /// Regularized iterations with a discrepancy stopping index.
    Iterate,
    /// Newton-type iteration on the Hammerstein benchmark over noise levels.
    Bench,
    /// Validate (or search) a regularization schedule.
    ScheduleCheck,
    /// Check a differential or difference inequality bound.
    Ineq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Default, Args)]
pub struct Common {
    /// JSON experiment configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Run a single noise seed.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Directory for the report; stdout when absent.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
    /// dp, flow-newton, flow-gradient, flow-simple, iter-newton,
    /// iter-gradient or iter-simple.
    #[arg(long, global = true, value_name = "NAME")]
    pub method: Option<String>,
    /// Comma-separated relative noise levels.
    #[arg(long = "delta-rel", global = true, value_name = "LIST", value_delimiter = ',')]
    pub delta_rel: Option<Vec<f64>>,
}

/// The config file with command-line overrides applied.
pub fn resolve_config(common: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seeds = Some(vec![s]);
    }
    if let Some(d) = &common.delta_rel {
        cfg.delta_rels = Some(d.clone());
    }
    if let Some(m) = &common.method {
        cfg.method = Some(Method::parse(m)?);
    }
    if let Some(f) = common.format {
        cfg.output.format = Some(match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        });
    }
    if let Some(o) = &common.out {
        cfg.output.dir = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn execute(command: Command, cfg: &ExperimentConfig) -> Result<(Report, u8), CliError> {
    match command {
        Command::Dp => {
            if cfg.method.is_some_and(|m| m != Method::Dp) {
                return Err(CliError::Config("`dp` accepts only --method dp".into()));
            }
            commands::dp(cfg)
        }
        Command::Flow => commands::flow(cfg),
        Command::Iterate => commands::iterate(cfg),
        Command::Bench => commands::bench(cfg),
        Command::ScheduleCheck => commands::schedule_check(cfg),
        Command::Ineq => commands::ineq(cfg),
    }
}

/// Resolve, execute and emit; returns the process exit code.
pub fn run(cli: &Cli) -> Result<u8, CliError> {
    let cfg = resolve_config(&cli.common)?;
    let (report, code) = execute(cli.command, &cfg)?;
    let format = cfg.output.format.unwrap_or_default();
    if let Some(path) = report.emit(format, cfg.output.dir.as_deref())? {
        eprintln!("wrote {}", path.display());
    }
    Ok(code)
}
