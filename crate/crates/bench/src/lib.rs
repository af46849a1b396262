//! Fixtures shared by the benchmarks.

use adasdca::{
    generate_synthetic, Dataset, LabelMode, Loss, ProblemSpec, SolverVariant, SyntheticSpec,
};

/// Synthetic problem with `γ = 1` and `λ = 1/n`.
pub fn fixture(n: usize, d: usize, density: f64, spread: f64, loss: Loss) -> (Dataset, ProblemSpec) {
    let label_mode = match loss {
        Loss::Quadratic => LabelMode::Regression,
        Loss::SmoothedHinge => LabelMode::Binary,
    };
    let ds = generate_synthetic(&SyntheticSpec {
        n,
        d,
        density,
        norm_spread: spread,
        label_mode,
        seed: 1,
    })
    .expect("valid synthetic spec");
    let spec = ProblemSpec::new(loss, 1.0, 1.0 / n as f64).expect("valid problem");
    (ds, spec)
}

/// The variants compared in the benchmarks, by id.
pub const VARIANT_IDS: [&str; 5] = [
    "uniform",
    "iprox",
    "adasdca",
    "adasdca-plus-I:m=10",
    "adasdca-plus-II:m=10",
];

pub fn variants() -> Vec<SolverVariant> {
    VARIANT_IDS
        .iter()
        .map(|s| s.parse().expect("known variant id"))
        .collect()
}
