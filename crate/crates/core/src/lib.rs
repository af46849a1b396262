//! Stochastic dual coordinate ascent (SDCA) for L2-regularized empirical risk
//! minimization, with adaptive coordinate sampling.
//!
//! The crate solves
//!
//! ```text
//! min_w  P(w) = (1/n) Σ φᵢ(Aᵢᵀw) + λ g(w)
//! ```
//!
//! through its dual, updating one dual coordinate at a time. Four samplers are
//! provided: uniform, fixed importance sampling ([`SolverVariant::IProx`]),
//! fully adaptive residue-driven sampling ([`SolverVariant::AdaSdca`]) and the
//! cheap epoch-reset heuristic ([`SolverVariant::AdaSdcaPlus`]).
//!
//! Module map:
//! - [`data`]: sparse column-major datasets, LIBSVM ingestion, synthetic instances.
//! - [`model`]: losses, conjugates and the exact one-coordinate dual maximizer.
//! - [`sampling`]: a dynamic weight tree for `O(log n)` sampling and updates.
//! - [`theory`]: objectives, dual residues, sampling distributions, rate
//!   function and numerical checks of the ascent inequalities.
//! - [`solver`]: the coordinate ascent kernel and run loop.

pub mod data;
pub mod model;
pub mod sampling;
pub mod solver;
pub mod theory;

pub use data::{
    generate_synthetic, parse_libsvm, parse_libsvm_str, squared_column_norms, write_libsvm,
    DataError, Dataset, LabelMode, SparseColumnMatrix, SyntheticSpec,
};
pub use model::{Loss, ModelError, ProblemSpec, Regularizer, L2};
pub use sampling::{SamplingError, WeightTree};
pub use solver::{
    init_state, refresh_alpha_bar, run, run_observed, sdca_step, PlusOption, RunConfig, RunResult,
    SolverError, SolverState, SolverVariant, Termination, TraceRecord, WorkCounter,
};
pub use theory::{GapReport, ResidueVector, TheoryError};
