//! Experiment runner for the `adasdca` solvers: gap traces as CSV and
//! epochs-to-threshold comparisons.

pub mod args;
pub mod experiment;
pub mod summary;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use adasdca::{DataError, ModelError, SolverError};
use thiserror::Error;

pub use args::{Cli, Command};
pub use experiment::{run_experiment, DataSource, Experiment, ExperimentConfig, LambdaMode};
pub use summary::{summarize, VariantSummary};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("data: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("output: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) | CliError::Output(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        let msg = e.to_string();
        match e {
            SolverError::NumericalFailure(_) => CliError::Numerical(msg),
            SolverError::Data(_)
            | SolverError::BadLabels(_)
            | SolverError::Model(ModelError::BadHingeLabel(_))
            | SolverError::Model(ModelError::InfeasibleDual { .. }) => CliError::Data(msg),
            _ => CliError::Usage(msg),
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Output(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

/// Executes a parsed command. Text goes to `stdout`; files go to `--out`.
pub fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let config = args.common.into_config(args.seeds)?;
            let experiment = run_experiment(&config)?;
            match &config.out {
                Some(p) => {
                    let mut out = open_out(Some(p))?;
                    experiment.write_trace(&mut out)?;
                    out.flush()?;
                }
                None => experiment.write_trace(&mut *stdout)?,
            }
        }
        Command::Compare(args) => {
            let (config, threshold) = args.into_config()?;
            let experiment = run_experiment(&config)?;
            let rows = summarize(&experiment, threshold);
            write!(stdout, "{}", summary::render_table(&rows, threshold, config.max_epochs))?;
            if let Some(p) = &config.out {
                let mut out = open_out(Some(p))?;
                summary::write_summary_csv(&rows, &mut out)?;
                out.flush()?;
            }
        }
    }
    Ok(())
}
