use std::fmt;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;
use std::str::FromStr;

use adasdca::{
    generate_synthetic, parse_libsvm, run, Dataset, LabelMode, Loss, ProblemSpec, RunConfig,
    RunResult, SolverVariant, SyntheticSpec,
};

use crate::CliError;

pub const CSV_HEADER: [&str; 9] = [
    "variant",
    "seed",
    "epoch",
    "iterations",
    "elapsed_s",
    "primal",
    "dual",
    "gap",
    "theta",
];

/// `n,d,density,spread` from `--synthetic`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticArg {
    pub n: usize,
    pub d: usize,
    pub density: f64,
    pub spread: f64,
}

impl FromStr for SyntheticArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [n, d, density, spread] = parts[..] else {
            return Err(format!("expected n,d,density,spread, got {s:?}"));
        };
        let bad = |what: &str, v: &str| format!("bad {what} {v:?}");
        Ok(SyntheticArg {
            n: n.parse().map_err(|_| bad("n", n))?,
            d: d.parse().map_err(|_| bad("d", d))?,
            density: density.parse().map_err(|_| bad("density", density))?,
            spread: spread.parse().map_err(|_| bad("spread", spread))?,
        })
    }
}

impl fmt::Display for SyntheticArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.n, self.d, self.density, self.spread)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    File { path: PathBuf, dim: Option<usize> },
    Synthetic { spec: SyntheticArg, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaMode {
    Explicit(f64),
    OneOverN,
}

impl LambdaMode {
    pub fn resolve(self, n: usize) -> f64 {
        match self {
            LambdaMode::Explicit(l) => l,
            LambdaMode::OneOverN => 1.0 / n as f64,
        }
    }

    fn label(self) -> &'static str {
        match self {
            LambdaMode::Explicit(_) => "explicit",
            LambdaMode::OneOverN => "one-over-n",
        }
    }
}

/// Everything one invocation needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub loss: Loss,
    pub gamma: f64,
    pub lambda: LambdaMode,
    pub variants: Vec<SolverVariant>,
    pub max_epochs: usize,
    pub gap_tol: f64,
    pub eval_every: usize,
    pub seeds: Vec<u64>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: &str| Err(CliError::Usage(m.into()));
        if self.variants.is_empty() {
            return usage("at least one --variant is required");
        }
        if self.seeds.is_empty() {
            return usage("at least one --seed is required");
        }
        if self.eval_every == 0 {
            return usage("--eval-every must be at least 1");
        }
        if self.gap_tol.is_nan() || self.gap_tol <= 0.0 {
            return usage("--tol must be positive");
        }
        if let LambdaMode::Explicit(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return usage("--lambda must be positive");
            }
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return usage("--gamma must be positive");
        }
        for v in &self.variants {
            v.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        }
        Ok(())
    }

    pub fn load_dataset(&self) -> Result<Dataset, CliError> {
        match &self.data {
            DataSource::File { path, dim } => {
                let file = File::open(path)
                    .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
                parse_libsvm(BufReader::new(file), *dim)
                    .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
            }
            DataSource::Synthetic { spec, seed } => {
                let label_mode = match self.loss {
                    Loss::Quadratic => LabelMode::Regression,
                    Loss::SmoothedHinge => LabelMode::Binary,
                };
                generate_synthetic(&SyntheticSpec {
                    n: spec.n,
                    d: spec.d,
                    density: spec.density,
                    norm_spread: spec.spread,
                    label_mode,
                    seed: *seed,
                })
                .map_err(|e| CliError::Usage(format!("--synthetic: {e}")))
            }
        }
    }

    pub fn problem(&self, dataset: &Dataset) -> Result<ProblemSpec, CliError> {
        ProblemSpec::new(self.loss, self.gamma, self.lambda.resolve(dataset.n()))
            .map_err(|e| CliError::Usage(e.to_string()))
    }
}

/// Result of running every (variant, seed) pair.
#[derive(Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub n: usize,
    pub d: usize,
    pub nnz: usize,
    pub lambda: f64,
    pub runs: Vec<RunResult>,
}

/// Loads the data and runs every (variant, seed) pair in order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Experiment, CliError> {
    let dataset = config.load_dataset()?;
    let spec = config.problem(&dataset)?;
    let mut runs = Vec::with_capacity(config.variants.len() * config.seeds.len());
    for variant in &config.variants {
        for &seed in &config.seeds {
            let rc = RunConfig {
                max_epochs: config.max_epochs,
                gap_tol: config.gap_tol,
                eval_every_epochs: config.eval_every,
                seed,
                alpha0: None,
            };
            runs.push(run(&dataset, &spec, *variant, &rc)?);
        }
    }
    Ok(Experiment {
        config: config.clone(),
        n: dataset.n(),
        d: dataset.d(),
        nnz: dataset.matrix().nnz(),
        lambda: spec.lambda(),
        runs,
    })
}

/// Shortest round-trip form; never locale dependent. Negative zero prints as `0.0`.
pub fn fmt_real(x: f64) -> String {
    format!("{:?}", x + 0.0)
}

impl Experiment {
    /// `# key: value` lines describing the run.
    pub fn metadata(&self) -> Vec<String> {
        let c = &self.config;
        let data = match &c.data {
            DataSource::File { path, .. } => format!("file {}", path.display()),
            DataSource::Synthetic { spec, seed } => format!("synthetic {spec} seed {seed}"),
        };
        let mut lines = vec![
            format!("# data: {data}"),
            format!("# n: {}, d: {}, nnz: {}", self.n, self.d, self.nnz),
            format!("# loss: {}", c.loss),
            format!("# gamma: {}", fmt_real(c.gamma)),
            format!("# lambda: {}", fmt_real(self.lambda)),
            format!("# lambda_mode: {}", c.lambda.label()),
            format!(
                "# max_epochs: {}, gap_tol: {}, eval_every: {}",
                c.max_epochs,
                fmt_real(c.gap_tol),
                c.eval_every
            ),
        ];
        for r in self.sorted_runs() {
            lines.push(format!(
                "# run {} seed {}: terminated_by {}",
                r.variant, r.seed, r.terminated_by
            ));
        }
        lines
    }

    /// Runs ordered by (variant id, seed).
    pub fn sorted_runs(&self) -> Vec<&RunResult> {
        let mut runs: Vec<&RunResult> = self.runs.iter().collect();
        runs.sort_by(|a, b| {
            a.variant
                .to_string()
                .cmp(&b.variant.to_string())
                .then(a.seed.cmp(&b.seed))
        });
        runs
    }

    /// Writes metadata comments followed by the trace CSV.
    pub fn write_trace<W: Write>(&self, mut out: W) -> Result<(), CliError> {
        for line in self.metadata() {
            writeln!(out, "{line}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in self.sorted_runs() {
            let variant = r.variant.to_string();
            for t in &r.trace {
                w.write_record([
                    variant.clone(),
                    r.seed.to_string(),
                    fmt_real(t.epoch),
                    t.iterations.to_string(),
                    fmt_real(t.elapsed_seconds),
                    fmt_real(t.primal),
                    fmt_real(t.dual),
                    fmt_real(t.gap),
                    t.theta.map(fmt_real).unwrap_or_default(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
