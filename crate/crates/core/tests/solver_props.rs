mod common;

use adasdca::theory::{dual_value_fresh, theta_star};
use adasdca::{
    generate_synthetic, init_state, refresh_alpha_bar, run, sdca_step, Dataset, LabelMode, Loss,
    PlusOption, ProblemSpec, RunConfig, SolverVariant, SparseColumnMatrix, SyntheticSpec,
};
use common::{random_problem, rng};
use rand::Rng;

fn all_variants() -> Vec<SolverVariant> {
    vec![
        SolverVariant::Uniform,
        SolverVariant::IProx,
        SolverVariant::AdaSdca,
        SolverVariant::AdaSdcaPlus { option: PlusOption::Adaptive, m: 10.0 },
        SolverVariant::AdaSdcaPlus { option: PlusOption::Importance, m: 2.5 },
    ]
}

#[test]
fn dual_never_decreases_along_steps() {
    let mut rng = rng(41);
    for loss in [Loss::Quadratic, Loss::SmoothedHinge] {
        for _ in 0..10 {
            let n = rng.random_range(2..40);
            let d = rng.random_range(1..12);
            let (ds, spec) = random_problem(&mut rng, n, d, loss);
            let mut state = init_state(&ds, &spec, None, 0).unwrap();
            let mut prev = dual_value_fresh(&ds, &spec, state.alpha());
            for _ in 0..20 * n {
                let i = rng.random_range(0..n);
                sdca_step(&mut state, &ds, &spec, i).unwrap();
                let now = dual_value_fresh(&ds, &spec, state.alpha());
                assert!(now >= prev - 1e-12 * (1.0 + prev.abs()), "{loss}: {now} < {prev}");
                if loss == Loss::SmoothedHinge {
                    for (a, y) in state.alpha().iter().zip(ds.labels()) {
                        assert!((0.0..=1.0).contains(&(a * y)));
                    }
                }
                prev = now;
            }
        }
    }
}

#[test]
fn dual_trace_is_monotone_for_every_variant() {
    let mut rng = rng(42);
    for loss in [Loss::Quadratic, Loss::SmoothedHinge] {
        let (ds, spec) = random_problem(&mut rng, 60, 10, loss);
        for variant in all_variants() {
            let cfg = RunConfig { max_epochs: 30, gap_tol: 1e-14, ..RunConfig::default() };
            let res = run(&ds, &spec, variant, &cfg).unwrap();
            for pair in res.trace.windows(2) {
                let (a, b) = (pair[0].dual, pair[1].dual);
                assert!(b >= a - 1e-12 * (1.0 + a.abs()), "{variant} {loss}: {b} < {a}");
                assert!(pair[1].gap >= -1e-12);
            }
        }
    }
}

#[test]
fn runs_are_deterministic_per_seed() {
    let mut rng = rng(43);
    let (ds, spec) = random_problem(&mut rng, 50, 8, Loss::SmoothedHinge);
    for variant in all_variants() {
        let cfg = RunConfig { max_epochs: 10, seed: 99, ..RunConfig::default() };
        let a = run(&ds, &spec, variant, &cfg).unwrap();
        let b = run(&ds, &spec, variant, &cfg).unwrap();
        assert_eq!(a.final_state.alpha(), b.final_state.alpha());
        assert_eq!(a.theta_log, b.theta_log);
        let gaps = |r: &adasdca::RunResult| r.trace.iter().map(|t| t.gap).collect::<Vec<_>>();
        assert_eq!(gaps(&a), gaps(&b));
        let other = run(&ds, &spec, variant, &RunConfig { seed: 100, ..cfg.clone() }).unwrap();
        assert_ne!(a.final_state.alpha(), other.final_state.alpha(), "{variant}");
    }
}

#[test]
fn incremental_alpha_bar_drift_is_small() {
    let mut rng = rng(44);
    let (ds, spec) = random_problem(&mut rng, 100, 20, Loss::Quadratic);
    let mut state = init_state(&ds, &spec, None, 0).unwrap();
    for _ in 0..100_000 {
        let i = rng.random_range(0..ds.n());
        sdca_step(&mut state, &ds, &spec, i).unwrap();
    }
    let incremental = state.alpha_bar().to_vec();
    refresh_alpha_bar(&mut state, &ds, &spec);
    let fresh = state.alpha_bar();
    let scale = 1.0 + fresh.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let drift = incremental
        .iter()
        .zip(fresh)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(drift <= 1e-8 * scale, "drift {drift}");
}

#[test]
fn adasdca_theta_never_below_importance_rate() {
    for seed in 0..10 {
        let mut rng = rng(1000 + seed);
        let loss = if seed % 2 == 0 { Loss::Quadratic } else { Loss::SmoothedHinge };
        let (ds, spec) = random_problem(&mut rng, 50, 10, loss);
        let cfg = RunConfig { max_epochs: 10, gap_tol: 1e-14, seed, ..RunConfig::default() };
        let res = run(&ds, &spec, SolverVariant::AdaSdca, &cfg).unwrap();
        let floor = theta_star(ds.norms(), spec.lambda(), spec.gamma());
        assert!(!res.theta_log.is_empty());
        for (k, th) in res.theta_log.iter().enumerate() {
            assert!(*th >= floor * (1.0 - 1e-12), "seed {seed} it {k}: {th} < {floor}");
        }
    }
}

#[test]
fn iprox_on_equal_norms_is_uniform() {
    let cols: Vec<Vec<(usize, f64)>> = (0..6).map(|i| vec![(i % 3, 2.0)]).collect();
    let ds = Dataset::new(SparseColumnMatrix::from_columns(3, cols).unwrap(), vec![1.0; 6]).unwrap();
    let spec = ProblemSpec::new(Loss::Quadratic, 1.0, 0.1).unwrap();
    let cfg = RunConfig { max_epochs: 1, ..RunConfig::default() };
    let res = run(&ds, &spec, SolverVariant::IProx, &cfg).unwrap();
    let tree = res.final_state.tree().unwrap();
    for i in 0..6 {
        assert!((tree.probability(i) - 1.0 / 6.0).abs() < 1e-15);
    }
}

#[test]
fn unit_start_gives_scaled_column() {
    let ds = generate_synthetic(&SyntheticSpec {
        n: 7,
        d: 5,
        density: 0.6,
        norm_spread: 3.0,
        label_mode: LabelMode::Regression,
        seed: 4,
    })
    .unwrap();
    let spec = ProblemSpec::new(Loss::Quadratic, 1.0, 0.2).unwrap();
    let mut e1 = vec![0.0; 7];
    e1[0] = 1.0;
    let state = init_state(&ds, &spec, Some(&e1), 0).unwrap();
    let col = ds.matrix().densify_column(0);
    let ln = spec.lambda() * 7.0;
    for (got, x) in state.alpha_bar().iter().zip(&col) {
        assert!((got - x / ln).abs() <= 1e-15 * (1.0 + got.abs()));
    }
}

#[test]
fn infeasible_start_is_rejected() {
    let mut rng = rng(45);
    let (ds, spec) = random_problem(&mut rng, 4, 3, Loss::SmoothedHinge);
    let alpha0 = vec![-ds.labels()[0], 0.0, 0.0, 0.0];
    assert!(init_state(&ds, &spec, Some(&alpha0), 0).is_err());
    let cfg = RunConfig { alpha0: Some(vec![0.0; 3]), ..RunConfig::default() };
    assert!(run(&ds, &spec, SolverVariant::Uniform, &cfg).is_err());
}

#[test]
fn plus_requires_m_above_one() {
    let mut rng = rng(46);
    let (ds, spec) = random_problem(&mut rng, 4, 3, Loss::Quadratic);
    let v = SolverVariant::AdaSdcaPlus { option: PlusOption::Adaptive, m: 1.0 };
    assert!(run(&ds, &spec, v, &RunConfig::default()).is_err());
}
