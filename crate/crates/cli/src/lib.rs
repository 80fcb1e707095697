//! Experiment driver for beam constructions: single runs, degree sweeps,
//! oracle suites, matrix export and localization tables.
//!
//! Exit codes: 0 every check passed, 1 a check failed, 2 usage error,
//! 3 numeric or resource error.

pub mod config;
pub mod error;
pub mod output;
pub mod report;
pub mod run;

use std::ffi::OsString;
use std::io::Write;

use clap::{Parser, Subcommand};

use config::{CommonArgs, ExperimentConfig, Format};
use error::CliError;
use report::RunReport;
use run::MatrixKind;

#[derive(Parser, Debug)]
#[command(name = "beamlp", version, about = "Orthonormal Gaussian-beam families of spherical harmonics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build one family and run every check on it.
    Construct(CommonArgs),
    /// Fit Lᵖ growth exponents over --k-list.
    Sweep(CommonArgs),
    /// Oracle cross-checks (closed forms against quadrature and series).
    Verify(CommonArgs),
    /// Export the Gram matrix or F.
    Gram {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value = "gram")]
        matrix: MatrixKind,
    },
    /// Tube masses of the family and of a single beam.
    Localize(CommonArgs),
}

pub const EXIT_PASS: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

fn emit(cfg: &ExperimentConfig, body: &str) -> Result<(), CliError> {
    match &cfg.out {
        Some(path) => std::fs::write(path, body).map_err(|e| CliError::io(path, e)),
        None => std::io::stdout()
            .write_all(body.as_bytes())
            .map_err(|e| CliError::Output(e.to_string())),
    }
}

fn finish(cfg: &ExperimentConfig, rep: &RunReport, default: Format, text: Option<&str>) -> Result<u8, CliError> {
    let body = output::render(rep, cfg.format.unwrap_or(default), text)?;
    emit(cfg, &body)?;
    for c in rep.failed_checks() {
        eprintln!("check failed: {} = {:e} (required {} {:e})", c.name, c.value, c.relation, c.bound);
    }
    Ok(if rep.pass { EXIT_PASS } else { EXIT_CHECK_FAILED })
}

fn dispatch(cfg: &ExperimentConfig, command: &Command) -> Result<u8, CliError> {
    match command {
        Command::Construct(_) => finish(cfg, &run::run_construct(cfg)?, Format::Json, None),
        Command::Sweep(_) => finish(cfg, &run::run_sweep(cfg)?, Format::Json, None),
        Command::Verify(_) => finish(cfg, &run::run_verify(cfg)?, Format::Json, None),
        Command::Localize(_) => finish(cfg, &run::run_localize(cfg)?, Format::Json, None),
        Command::Gram { matrix, .. } => {
            let (rep, text) = run::run_gram(cfg, *matrix)?;
            finish(cfg, &rep, Format::Text, Some(&text))
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    let (kind, common) = match &cli.command {
        Command::Construct(c) => ("construct", c),
        Command::Sweep(c) => ("sweep", c),
        Command::Verify(c) => ("verify", c),
        Command::Gram { common, .. } => ("gram", common),
        Command::Localize(c) => ("localize", c),
    };
    let cfg = match ExperimentConfig::resolve(common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("beamlp: {e}");
            return e.exit_code();
        }
    };
    match dispatch(&cfg, &cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("beamlp: {e}");
            if !matches!(e, CliError::Usage(_)) {
                let rep = RunReport::failed(kind, &cfg, &e);
                let format = match cfg.format {
                    Some(Format::Csv) => Format::Csv,
                    _ => Format::Json,
                };
                if let Ok(body) = output::render(&rep, format, None) {
                    let _ = emit(&cfg, &body);
                }
            }
            e.exit_code()
        }
    }
}
