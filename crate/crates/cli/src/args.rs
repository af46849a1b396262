use std::path::PathBuf;

use adasdca::{Loss, SolverVariant};
use clap::{Args, Parser, Subcommand};

use crate::experiment::{DataSource, ExperimentConfig, LambdaMode, SyntheticArg};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "adasdca", version, about = "SDCA with adaptive sampling: traces and comparisons")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every (variant, seed) pair and write the evaluation trace as CSV.
    Run(RunArgs),
    /// Summarize epochs and wall time needed to reach a gap threshold.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// LIBSVM file to train on.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    pub data: Option<PathBuf>,

    /// Synthetic instance as `n,d,density,spread`.
    #[arg(long)]
    pub synthetic: Option<SyntheticArg>,

    /// Seed of the synthetic generator.
    #[arg(long, default_value_t = 1, requires = "synthetic")]
    pub data_seed: u64,

    /// Feature dimension override for LIBSVM input.
    #[arg(long, requires = "data")]
    pub dim: Option<usize>,

    /// `quadratic` or `smooth-hinge`.
    #[arg(long, default_value = "quadratic")]
    pub loss: Loss,

    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,

    /// Regularization strength; defaults to 1/n.
    #[arg(long)]
    pub lambda: Option<f64>,

    /// Solver variant, e.g. `uniform`, `iprox`, `adasdca`, `adasdca-plus-I:m=10`.
    #[arg(long = "variant", required = true)]
    pub variants: Vec<SolverVariant>,

    #[arg(long, default_value_t = 100)]
    pub epochs: usize,

    /// Stop once the duality gap is at most this.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,

    /// Evaluate the gap every this many epochs.
    #[arg(long, default_value_t = 1)]
    pub eval_every: usize,

    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Solver seed (repeatable).
    #[arg(long = "seed", default_values_t = [0])]
    pub seeds: Vec<u64>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Solver seed (repeatable); defaults to 0 through 9.
    #[arg(long = "seed")]
    pub seeds: Vec<u64>,

    /// Gap threshold for epochs-to-threshold; defaults to `--tol`.
    #[arg(long)]
    pub threshold: Option<f64>,
}

pub const DEFAULT_COMPARE_SEEDS: u64 = 10;

impl CommonArgs {
    pub fn into_config(self, seeds: Vec<u64>) -> Result<ExperimentConfig, CliError> {
        let data = match (self.data, self.synthetic) {
            (Some(path), None) => DataSource::File { path, dim: self.dim },
            (None, Some(spec)) => DataSource::Synthetic { spec, seed: self.data_seed },
            _ => return Err(CliError::Usage("give exactly one of --data and --synthetic".into())),
        };
        let lambda = match self.lambda {
            Some(l) => LambdaMode::Explicit(l),
            None => LambdaMode::OneOverN,
        };
        let config = ExperimentConfig {
            data,
            loss: self.loss,
            gamma: self.gamma,
            lambda,
            variants: self.variants,
            max_epochs: self.epochs,
            gap_tol: self.tol,
            eval_every: self.eval_every,
            seeds,
            out: self.out,
        };
        config.validate()?;
        Ok(config)
    }
}

impl CompareArgs {
    pub fn into_config(self) -> Result<(ExperimentConfig, f64), CliError> {
        let seeds = if self.seeds.is_empty() {
            (0..DEFAULT_COMPARE_SEEDS).collect()
        } else {
            self.seeds
        };
        let threshold = self.threshold.unwrap_or(self.common.tol);
        if threshold.is_nan() || threshold <= 0.0 {
            return Err(CliError::Usage("--threshold must be positive".into()));
        }
        let mut config = self.common.into_config(seeds)?;
        if config.variants.len() < 2 {
            return Err(CliError::Usage("compare needs at least two --variant".into()));
        }
        if config.seeds.len() < 3 {
            return Err(CliError::Usage("compare needs at least three --seed".into()));
        }
        config.gap_tol = threshold;
        Ok((config, threshold))
    }
}
