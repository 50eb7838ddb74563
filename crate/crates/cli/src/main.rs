//! `torus-spectra`: batch front-end for connection Laplacian spectra, theta
//! functions and log-determinants on discrete and real tori.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for numerical or
//! output failures.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use torus_spectra::connection::seed_from_env;

use crate::commands::Overrides;
use crate::config::{Command, Mode, RunConfig};
use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "torus-spectra",
    version,
    about = "Spectra, theta functions and log-determinants of flat tori"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Eigenvalues of the connection Laplacian.
    Spectrum(Common),
    /// Closed-form spectrum against the dense eigensolver.
    OracleCheck(Common),
    /// Theta functions in both forms.
    Theta(Common),
    /// Regularized log-determinants.
    Logdet(Common),
    /// Convergence tables along a family of discrete tori.
    Converge(Common),
    /// Dispatch on the config's `command` key.
    Run(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Closed,
    Oracle,
    Both,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    config: PathBuf,
    /// Tolerance override for the command's main check.
    #[arg(long)]
    tol: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Also emit SVG plots.
    #[arg(long)]
    svg: bool,
}

fn execute(sub: Sub) -> Result<Vec<PathBuf>, CliError> {
    let (requested, common) = match sub {
        Sub::Spectrum(c) => (Some(Command::Spectrum), c),
        Sub::OracleCheck(c) => (Some(Command::OracleCheck), c),
        Sub::Theta(c) => (Some(Command::Theta), c),
        Sub::Logdet(c) => (Some(Command::Logdet), c),
        Sub::Converge(c) => (Some(Command::Converge), c),
        Sub::Run(c) => (None, c),
    };
    let cfg = RunConfig::load(&common.config)?;
    let command = match (requested, cfg.command) {
        (Some(r), Some(c)) if r != c => {
            return Err(CliError::Config(format!(
                "subcommand {} does not match config command {}",
                r.as_str(),
                c.as_str()
            )))
        }
        (Some(r), _) => r,
        (None, Some(c)) => c,
        (None, None) => {
            return Err(CliError::Config(
                "`run` needs a `command` key in the config".into(),
            ))
        }
    };
    let overrides = Overrides {
        tol: common.tol,
        out: common.out,
        mode: common.mode.map(|m| match m {
            ModeArg::Closed => Mode::Closed,
            ModeArg::Oracle => Mode::Oracle,
            ModeArg::Both => Mode::Both,
        }),
        svg: common.svg,
    };
    let sink = commands::run(&cfg, command, &overrides, seed_from_env())?;
    Ok(sink.written().to_vec())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("torus-spectra: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
