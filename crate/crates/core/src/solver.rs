//! SDCA run loop and its four sampling strategies.
//!
//! Every variant shares [`sdca_step`]: pick a coordinate `i`, maximize the dual
//! exactly along `eᵢ`, and fold the change into `ᾱ = Aα/(λn)`. Under the L2
//! regularizer `w = ∇g*(ᾱ) = ᾱ`, so one vector serves as both.
//!
//! | variant          | sampling distribution                                  | epoch cost          |
//! |------------------|--------------------------------------------------------|---------------------|
//! | `Uniform`        | `1/n`                                                  | `O(nnz)`            |
//! | `IProx`          | `pᵢ ∝ vᵢ + nλγ`, fixed                                 | `O(nnz + n log n)`  |
//! | `AdaSdca`        | `pᵢ ∝ |κᵢ|√(vᵢ + nλγ)`, recomputed every iteration     | `O(n · nnz)`        |
//! | `AdaSdcaPlus`    | reset each epoch, sampled weight divided by `m`        | `O(nnz + n log n)`  |

use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::data::{DataError, Dataset};
use crate::model::{Loss, ModelError, ProblemSpec, Regularizer, L2};
use crate::sampling::{SamplingError, WeightTree};
use crate::theory::{self, TheoryError};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid variant {0:?}")]
    InvalidVariant(String),
    #[error("labels cannot be mapped to {{-1, +1}}: {0}")]
    BadLabels(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

/// How AdaSDCA+ resets its weights at the start of each epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlusOption {
    /// Option I: `|κᵢ|√(vᵢ + nλγ)`.
    Adaptive,
    /// Option II: `vᵢ + nλγ`.
    Importance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverVariant {
    /// Plain SDCA with uniform sampling.
    Uniform,
    /// SDCA with fixed importance sampling.
    IProx,
    /// Fully adaptive sampling; recomputes the dual residue every iteration.
    AdaSdca,
    /// Epoch-reset heuristic with multiplicative decay `1/m` of the sampled weight.
    AdaSdcaPlus { option: PlusOption, m: f64 },
}

pub const DEFAULT_M: f64 = 10.0;

impl SolverVariant {
    pub fn validate(&self) -> Result<(), SolverError> {
        match *self {
            SolverVariant::AdaSdcaPlus { m, .. } if !(m > 1.0 && m.is_finite()) => Err(
                SolverError::InvalidVariant(format!("AdaSDCA+ needs m > 1, got {m}")),
            ),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for SolverVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverVariant::Uniform => f.write_str("uniform"),
            SolverVariant::IProx => f.write_str("iprox"),
            SolverVariant::AdaSdca => f.write_str("adasdca"),
            SolverVariant::AdaSdcaPlus { option, m } => {
                let opt = match option {
                    PlusOption::Adaptive => "I",
                    PlusOption::Importance => "II",
                };
                write!(f, "adasdca-plus-{opt}:m={m}")
            }
        }
    }
}

impl FromStr for SolverVariant {
    type Err = SolverError;

    /// Accepts `uniform`, `iprox`, `adasdca` and `adasdca-plus-{I,II}[:m=<real>]`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SolverError::InvalidVariant(s.to_string());
        let (name, params) = match s.split_once(':') {
            Some((name, params)) => (name, Some(params)),
            None => (s, None),
        };
        let variant = match name {
            "uniform" | "sdca" => SolverVariant::Uniform,
            "iprox" | "iprox-sdca" => SolverVariant::IProx,
            "adasdca" => SolverVariant::AdaSdca,
            "adasdca-plus-I" | "adasdca-plus-i" | "adasdca+I" => {
                SolverVariant::AdaSdcaPlus { option: PlusOption::Adaptive, m: DEFAULT_M }
            }
            "adasdca-plus-II" | "adasdca-plus-ii" | "adasdca+II" => {
                SolverVariant::AdaSdcaPlus { option: PlusOption::Importance, m: DEFAULT_M }
            }
            _ => return Err(bad()),
        };
        let variant = match (variant, params) {
            (v, None) => v,
            (SolverVariant::AdaSdcaPlus { option, .. }, Some(params)) => {
                let m = params
                    .strip_prefix("m=")
                    .and_then(|m| m.parse::<f64>().ok())
                    .ok_or_else(bad)?;
                SolverVariant::AdaSdcaPlus { option, m }
            }
            (_, Some(_)) => return Err(bad()),
        };
        variant.validate()?;
        Ok(variant)
    }
}

/// Instrumented operation counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WorkCounter {
    /// Stored matrix entries read or written.
    pub column_entries: u64,
    /// Dense length-`n` vector entries touched (residues, probabilities).
    pub vector_entries: u64,
    /// Weight-tree nodes built or visited.
    pub tree_nodes: u64,
}

impl WorkCounter {
    pub fn total(&self) -> u64 {
        self.column_entries + self.vector_entries + self.tree_nodes
    }
}

#[derive(Debug, Clone)]
pub struct SolverState {
    alpha: Vec<f64>,
    /// `ᾱ = Aα/(λn)`, which is also the primal point `w` under L2.
    alpha_bar: Vec<f64>,
    iteration: u64,
    rng: ChaCha8Rng,
    tree: Option<WeightTree>,
    work: WorkCounter,
}

impl SolverState {
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn alpha_bar(&self) -> &[f64] {
        &self.alpha_bar
    }

    /// Primal point `w = ∇g*(ᾱ)`.
    pub fn w(&self) -> &[f64] {
        &self.alpha_bar
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn work(&self) -> WorkCounter {
        self.work
    }

    pub fn tree(&self) -> Option<&WeightTree> {
        self.tree.as_ref()
    }
}

/// Maps labels to `{-1, +1}` for the smoothed hinge loss.
///
/// Labels already in `{-1, +1}` pass through. Any other two-valued labelling
/// sends the smaller value to `-1` and the larger to `+1`.
pub fn hinge_labels(labels: &[f64]) -> Result<Vec<f64>, SolverError> {
    if labels.iter().all(|&y| y == 1.0 || y == -1.0) {
        return Ok(labels.to_vec());
    }
    let lo = labels.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = labels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi || labels.iter().any(|&y| y != lo && y != hi) {
        return Err(SolverError::BadLabels(format!(
            "expected exactly two distinct values, range [{lo}, {hi}]"
        )));
    }
    Ok(labels.iter().map(|&y| if y == hi { 1.0 } else { -1.0 }).collect())
}

/// Returns the dataset with labels suitable for `spec`'s loss.
pub fn prepare_dataset<'a>(
    dataset: &'a Dataset,
    spec: &ProblemSpec,
) -> Result<Cow<'a, Dataset>, SolverError> {
    match spec.loss() {
        Loss::Quadratic => Ok(Cow::Borrowed(dataset)),
        Loss::SmoothedHinge => {
            let labels = hinge_labels(dataset.labels())?;
            if labels == dataset.labels() {
                Ok(Cow::Borrowed(dataset))
            } else {
                Ok(Cow::Owned(dataset.with_labels(labels)?))
            }
        }
    }
}

/// Starting state with `ᾱ⁰ = Aα⁰/(λn)`; `α⁰` defaults to zero.
pub fn init_state(
    dataset: &Dataset,
    spec: &ProblemSpec,
    alpha0: Option<&[f64]>,
    seed: u64,
) -> Result<SolverState, SolverError> {
    let n = dataset.n();
    let alpha = match alpha0 {
        Some(a) if a.len() != n => {
            return Err(SolverError::InvalidConfig(format!(
                "alpha0 has length {}, expected {n}",
                a.len()
            )))
        }
        Some(a) => a.to_vec(),
        None => vec![0.0; n],
    };
    if spec.loss() == Loss::SmoothedHinge {
        if let Some(&y) = dataset.labels().iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(ModelError::BadHingeLabel(y).into());
        }
    }
    for (&a, &y) in alpha.iter().zip(dataset.labels()) {
        if !spec.is_dual_feasible(y, a) {
            return Err(ModelError::InfeasibleDual { alpha: a, label: y }.into());
        }
    }
    let alpha_bar = L2.conjugate_gradient(&theory::alpha_bar(dataset, spec, &alpha));
    Ok(SolverState {
        alpha,
        alpha_bar,
        iteration: 0,
        rng: ChaCha8Rng::seed_from_u64(seed),
        tree: None,
        work: WorkCounter::default(),
    })
}

/// One exact coordinate maximization on coordinate `i`. Returns `Δ`.
pub fn sdca_step(
    state: &mut SolverState,
    dataset: &Dataset,
    spec: &ProblemSpec,
    i: usize,
) -> Result<f64, SolverError> {
    let n = dataset.n();
    if i >= n {
        return Err(DataError::IndexOutOfRange { index: i, len: n }.into());
    }
    let a = dataset.matrix();
    let nnz = a.column_nnz(i) as u64;
    let margin = a.dot(i, &state.alpha_bar);
    let delta = spec.coordinate_step(
        dataset.labels()[i],
        state.alpha[i],
        margin,
        dataset.norms()[i],
        n,
    )?;
    state.work.column_entries += nnz;
    if delta != 0.0 {
        state.alpha[i] += delta;
        a.axpy(i, delta / (spec.lambda() * n as f64), &mut state.alpha_bar);
        state.work.column_entries += nnz;
    }
    state.iteration += 1;
    Ok(delta)
}

/// Recomputes `ᾱ` (and `w`) from `α`, discarding accumulated drift.
pub fn refresh_alpha_bar(state: &mut SolverState, dataset: &Dataset, spec: &ProblemSpec) {
    let fresh = theory::alpha_bar(dataset, spec, &state.alpha);
    L2.conjugate_gradient_into(&fresh, &mut state.alpha_bar);
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub max_epochs: usize,
    pub gap_tol: f64,
    pub eval_every_epochs: usize,
    pub seed: u64,
    pub alpha0: Option<Vec<f64>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            max_epochs: 100,
            gap_tol: 1e-10,
            eval_every_epochs: 1,
            seed: 0,
            alpha0: None,
        }
    }
}

/// One evaluation point of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// Iterations divided by `n`.
    pub epoch: f64,
    pub iterations: u64,
    pub elapsed_seconds: f64,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    /// Most recent `θ(κ, p)`, for variants that compute `κ`.
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GapTol,
    MaxEpochs,
    OptimalResidue,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::GapTol => "gap_tol",
            Termination::MaxEpochs => "max_epochs",
            Termination::OptimalResidue => "optimal_residue",
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub variant: SolverVariant,
    pub seed: u64,
    pub trace: Vec<TraceRecord>,
    pub final_state: SolverState,
    pub terminated_by: Termination,
    /// `θ(κ, p)` at every probability construction that computed `κ`:
    /// each iteration for AdaSDCA, each epoch start for AdaSDCA+ Option I.
    pub theta_log: Vec<f64>,
    /// Work counted per completed epoch, excluding evaluations.
    pub epoch_work: Vec<u64>,
}

impl RunResult {
    pub fn final_gap(&self) -> f64 {
        self.trace.last().map_or(f64::INFINITY, |r| r.gap)
    }
}

struct Evaluator<'a> {
    dataset: &'a Dataset,
    spec: &'a ProblemSpec,
    start: Instant,
}

impl Evaluator<'_> {
    fn record(&self, state: &mut SolverState, theta: Option<f64>) -> Result<TraceRecord, SolverError> {
        refresh_alpha_bar(state, self.dataset, self.spec);
        if state.alpha.iter().any(|a| a.is_nan()) {
            return Err(SolverError::NumericalFailure(format!(
                "NaN in dual variables at iteration {}",
                state.iteration
            )));
        }
        let primal = theory::primal_value(self.dataset, self.spec, &state.alpha_bar);
        let dual = theory::dual_value(self.dataset, self.spec, &state.alpha, &state.alpha_bar);
        if primal.is_nan() || dual.is_nan() {
            return Err(SolverError::NumericalFailure(format!(
                "NaN objective at iteration {}",
                state.iteration
            )));
        }
        Ok(TraceRecord {
            epoch: state.iteration as f64 / self.dataset.n() as f64,
            iterations: state.iteration,
            elapsed_seconds: self.start.elapsed().as_secs_f64(),
            primal,
            dual,
            gap: primal - dual,
            theta,
        })
    }
}

fn sample_tree(state: &mut SolverState) -> Result<usize, SolverError> {
    let u: f64 = state.rng.random();
    let tree = state.tree.as_ref().expect("sampling tree present");
    Ok(tree.sample(u)?)
}

fn sync_tree_work(state: &mut SolverState) {
    if let Some(tree) = &state.tree {
        state.work.tree_nodes += tree.node_touches();
        tree.reset_touches();
    }
}

fn install_tree(state: &mut SolverState, weights: &[f64]) -> Result<(), SolverError> {
    let tree = WeightTree::build(weights)?;
    state.work.tree_nodes += tree.node_count() as u64;
    state.tree = Some(tree);
    Ok(())
}

/// Dual residue at the current state, with its cost charged to the counter.
fn residue(state: &mut SolverState, dataset: &Dataset, spec: &ProblemSpec) -> theory::ResidueVector {
    state.work.column_entries += dataset.matrix().nnz() as u64;
    state.work.vector_entries += dataset.n() as u64;
    theory::dual_residue(dataset, spec, &state.alpha, &state.alpha_bar)
}

/// Runs `variant` until the duality gap reaches `config.gap_tol`, the epoch
/// budget is spent, or the dual residue vanishes.
///
/// The trace holds an evaluation at `t = 0`, every `eval_every_epochs`
/// epochs, and at termination. An epoch is `n` coordinate updates.
pub fn run(
    dataset: &Dataset,
    spec: &ProblemSpec,
    variant: SolverVariant,
    config: &RunConfig,
) -> Result<RunResult, SolverError> {
    run_observed(dataset, spec, variant, config, |_, _, _| {})
}

/// [`run`], calling `observer(state, i, Δ)` after every coordinate update.
pub fn run_observed<F>(
    dataset: &Dataset,
    spec: &ProblemSpec,
    variant: SolverVariant,
    config: &RunConfig,
    mut observer: F,
) -> Result<RunResult, SolverError>
where
    F: FnMut(&SolverState, usize, f64),
{
    variant.validate()?;
    if config.gap_tol.is_nan() || config.gap_tol <= 0.0 {
        return Err(SolverError::InvalidConfig("gap_tol must be positive".into()));
    }
    if config.eval_every_epochs == 0 {
        return Err(SolverError::InvalidConfig("eval_every_epochs must be at least 1".into()));
    }
    let dataset = prepare_dataset(dataset, spec)?;
    let dataset: &Dataset = &dataset;
    let n = dataset.n();
    let v = dataset.norms();
    let (lambda, gamma) = (spec.lambda(), spec.gamma());

    let mut state = init_state(dataset, spec, config.alpha0.as_deref(), config.seed)?;
    let eval = Evaluator { dataset, spec, start: Instant::now() };
    let mut trace = vec![eval.record(&mut state, None)?];
    let mut theta_log = Vec::new();
    let mut epoch_work = Vec::new();
    let mut last_theta = None;

    if trace[0].gap <= config.gap_tol {
        return Ok(RunResult {
            variant,
            seed: config.seed,
            trace,
            final_state: state,
            terminated_by: Termination::GapTol,
            theta_log,
            epoch_work,
        });
    }

    if variant == SolverVariant::IProx {
        install_tree(&mut state, &theory::importance_probabilities(v, lambda, gamma))?;
    }

    let mut terminated_by = Termination::MaxEpochs;
    let mut optimal = false;
    'epochs: for epoch in 0..config.max_epochs {
        let work_before = state.work.total();

        if let SolverVariant::AdaSdcaPlus { option, .. } = variant {
            let weights = match option {
                PlusOption::Adaptive => {
                    let kappa = residue(&mut state, dataset, spec);
                    if kappa.is_optimal() {
                        optimal = true;
                        break 'epochs;
                    }
                    let p = theory::adaptive_probabilities(&kappa, v, lambda, gamma)?;
                    let th = theory::theta(&kappa, &p, v, lambda, gamma)?;
                    theta_log.push(th);
                    last_theta = Some(th);
                    state.work.vector_entries += n as u64;
                    theory::adaptive_weights(&kappa, v, lambda, gamma)
                }
                PlusOption::Importance => {
                    state.work.vector_entries += n as u64;
                    let nlg = n as f64 * lambda * gamma;
                    v.iter().map(|vi| vi + nlg).collect()
                }
            };
            install_tree(&mut state, &weights)?;
        }

        for _ in 0..n {
            let i = match variant {
                SolverVariant::Uniform => state.rng.random_range(0..n),
                SolverVariant::IProx | SolverVariant::AdaSdcaPlus { .. } => sample_tree(&mut state)?,
                SolverVariant::AdaSdca => {
                    let kappa = residue(&mut state, dataset, spec);
                    if kappa.is_optimal() {
                        optimal = true;
                        break 'epochs;
                    }
                    let p = theory::adaptive_probabilities(&kappa, v, lambda, gamma)?;
                    let th = theory::theta(&kappa, &p, v, lambda, gamma)?;
                    theta_log.push(th);
                    last_theta = Some(th);
                    state.work.vector_entries += n as u64;
                    install_tree(&mut state, &p)?;
                    sample_tree(&mut state)?
                }
            };
            let delta = sdca_step(&mut state, dataset, spec, i)?;
            observer(&state, i, delta);
            if let SolverVariant::AdaSdcaPlus { m, .. } = variant {
                state
                    .tree
                    .as_mut()
                    .expect("sampling tree present")
                    .scale_weight(i, 1.0 / m)?;
            }
            sync_tree_work(&mut state);
        }
        epoch_work.push(state.work.total() - work_before);

        let done = epoch + 1;
        if done % config.eval_every_epochs == 0 || done == config.max_epochs {
            let record = eval.record(&mut state, last_theta)?;
            let gap = record.gap;
            trace.push(record);
            if gap <= config.gap_tol {
                terminated_by = Termination::GapTol;
                break;
            }
        }
    }

    if optimal {
        sync_tree_work(&mut state);
        let record = eval.record(&mut state, last_theta)?;
        terminated_by = if record.gap <= config.gap_tol {
            Termination::GapTol
        } else {
            Termination::OptimalResidue
        };
        trace.push(record);
    }

    Ok(RunResult {
        variant,
        seed: config.seed,
        trace,
        final_state: state,
        terminated_by,
        theta_log,
        epoch_work,
    })
}
