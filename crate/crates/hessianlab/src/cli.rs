//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::experiments::{self, CommandOutcome, ExitStatus};

#[derive(Debug, Parser)]
#[command(name = "hessianlab", version, about = "Complex Hessian equations on flat tori")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the regularized equation at one t.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the t → 0 continuation and the decreasing-sequence certificate.
    Continuation {
        #[arg(long)]
        config: PathBuf,
    },
    /// Fit the sup-gap exponent over perturbation scales.
    Stability {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check lemmas, uniqueness, viscosity and the Laplacian monitor.
    Verify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Cone membership of a tuple or of a configured form.
    Conecheck {
        #[arg(long, required_unless_present = "tuple")]
        config: Option<PathBuf>,
        /// Eigenvalue tuple such as "(1, 2, -0.5)".
        #[arg(long, requires = "m", conflicts_with = "config")]
        tuple: Option<String>,
        #[arg(long)]
        m: Option<usize>,
    },
}

fn load(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::load(path)
}

/// Runs one parsed command.
pub fn execute(cmd: &Command) -> Result<CommandOutcome> {
    match cmd {
        Command::Solve { config } => experiments::cmd_solve(&load(config)?),
        Command::Continuation { config } => experiments::cmd_continuation(&load(config)?),
        Command::Stability { config } => experiments::cmd_stability(&load(config)?),
        Command::Verify { config } => experiments::cmd_verify(&load(config)?),
        Command::Conecheck { config: Some(config), .. } => experiments::cmd_conecheck(&load(config)?),
        Command::Conecheck { tuple: Some(tuple), m, .. } => {
            let m = m.ok_or_else(|| Error::Config("--tuple needs --m".into()))?;
            let report = experiments::tuple_report(&experiments::parse_tuple(tuple)?, m)?;
            Ok(CommandOutcome {
                status: ExitStatus::Ok,
                summary: serde_json::to_string_pretty(&report)?,
                report: None,
            })
        }
        Command::Conecheck { .. } => Err(Error::Config("conecheck needs --config or --tuple".into())),
    }
}

/// Parses `args`, runs the command, prints a summary and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitStatus::Config.code() } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(out) => {
            println!("{}", out.summary);
            if let Some(p) = &out.report {
                println!("report: {}", p.display());
            }
            out.status.code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitStatus::of_error(&e).code()
        }
    }
}
