//! Oracles and fixtures shared by the integration suites. Nothing here calls
//! the closed-form maximizer or the probability constructions under test.
#![allow(dead_code)]

use adasdca::{generate_synthetic, Dataset, LabelMode, Loss, ProblemSpec, SyntheticSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Double-double number `hi + lo` (about 106 significant bits).
#[derive(Clone, Copy, Debug)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        let err = (a - (s - bb)) + (b - bb);
        Dd { hi: s, lo: err }
    }

    fn add(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, o.hi);
        let t = Dd::two_sum(self.lo, o.lo);
        let hi = s.hi;
        let lo = s.lo + t.hi;
        let r = Dd::two_sum(hi, lo);
        Dd::two_sum(r.hi, r.lo + t.lo)
    }

    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let err = self.hi.mul_add(o.hi, -p);
        let err = err + (self.hi * o.lo + self.lo * o.hi);
        Dd::two_sum(p, err)
    }

    fn less(self, o: Dd) -> bool {
        let d = self.sub(o);
        d.hi < 0.0 || (d.hi == 0.0 && d.lo < 0.0)
    }
}

/// `2λn · G(Δ)` where `G(Δ) = −φ*(−(α + Δ)) − aΔ − vΔ²/(2λn)` is the
/// one-coordinate dual objective; the positive factor keeps the argmax.
/// Inside the conjugate's domain `−φ*(−β) = yβ − γβ²/2` for both losses.
fn scaled_step_objective(spec: &ProblemSpec, n: usize, y: f64, alpha: f64, a: f64, v: f64, delta: f64) -> Dd {
    let beta = Dd::from(alpha).add(Dd::from(delta));
    let d = Dd::from(delta);
    let half_gamma = Dd::from(spec.gamma() * 0.5);
    let conj = Dd::from(y).mul(beta).sub(half_gamma.mul(beta).mul(beta));
    let two_ln = Dd::from(2.0 * spec.lambda()).mul(Dd::from(n as f64));
    two_ln
        .mul(conj.sub(Dd::from(a).mul(d)))
        .sub(Dd::from(v).mul(d).mul(d))
}

/// Ternary search, in double-double precision, for the maximizer of the
/// one-coordinate dual objective over its domain.
pub fn coordinate_step_oracle(
    spec: &ProblemSpec,
    n: usize,
    y: f64,
    alpha: f64,
    a: f64,
    v: f64,
) -> f64 {
    let (mut lo, mut hi) = match spec.loss() {
        Loss::Quadratic => (-1e6, 1e6),
        Loss::SmoothedHinge => {
            // y(α + Δ) ∈ [0, 1]
            let (e0, e1) = (-alpha, y - alpha);
            (e0.min(e1), e0.max(e1))
        }
    };
    let g = |x: f64| scaled_step_objective(spec, n, y, alpha, a, v, x);
    for _ in 0..400 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if !(lo < m1 && m1 < m2 && m2 < hi) {
            break;
        }
        if g(m1).less(g(m2)) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let mid = 0.5 * (lo + hi);
    let mut best = lo;
    for x in [mid, hi] {
        if g(best).less(g(x)) {
            best = x;
        }
    }
    best
}

/// Numeric `sup_x {ux − φ(x)}` by golden-section search on a wide bracket.
/// Returns `None` if the objective keeps growing on expanding brackets.
pub fn conjugate_oracle(spec: &ProblemSpec, y: f64, u: f64) -> Option<f64> {
    let f = |x: f64| u * x - spec.loss_value(y, x);
    // Divergence probe.
    let probe = [1e3, 1e5, 1e7, 1e9]
        .iter()
        .map(|r| f(*r).max(f(-*r)))
        .collect::<Vec<_>>();
    if probe[3] > 1e6 && probe[3] > probe[2] && probe[2] > probe[1] {
        return None;
    }
    let (mut lo, mut hi) = (-1e4, 1e4);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..300 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        if f(m1) < f(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    Some(f(0.5 * (lo + hi)))
}

/// Random problem with `n` samples for the given loss, with `λ` and `γ` drawn
/// from moderate ranges.
pub fn random_problem(rng: &mut ChaCha8Rng, n: usize, d: usize, loss: Loss) -> (Dataset, ProblemSpec) {
    let density = rng.random_range(0.2..=1.0f64).max(1.0 / d as f64);
    let label_mode = match loss {
        Loss::Quadratic => LabelMode::Regression,
        Loss::SmoothedHinge => LabelMode::Binary,
    };
    let ds = generate_synthetic(&SyntheticSpec {
        n,
        d,
        density,
        norm_spread: rng.random_range(1.0..20.0),
        label_mode,
        seed: rng.random(),
    })
    .unwrap();
    let gamma = rng.random_range(0.2..2.0);
    let lambda = rng.random_range(0.1..3.0) / n as f64;
    (ds, ProblemSpec::new(loss, gamma, lambda).unwrap())
}

/// A random dual point that is feasible for `spec`'s loss.
pub fn random_feasible_alpha(rng: &mut ChaCha8Rng, ds: &Dataset, spec: &ProblemSpec) -> Vec<f64> {
    ds.labels()
        .iter()
        .map(|&y| match spec.loss() {
            Loss::Quadratic => rng.random_range(-2.0..2.0),
            Loss::SmoothedHinge => y * rng.random_range(0.0..=1.0),
        })
        .collect()
}

/// Dense `d × n` copy of the data matrix, row-major.
pub fn densify(ds: &Dataset) -> Vec<Vec<f64>> {
    (0..ds.n()).map(|j| ds.matrix().densify_column(j)).collect()
}

pub fn dense_dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A random point of the probability simplex that is positive exactly on `support`
/// (plus, randomly, on some other indices).
pub fn random_simplex_point(rng: &mut ChaCha8Rng, n: usize, support: &[usize]) -> Vec<f64> {
    let mut q: Vec<f64> = (0..n)
        .map(|_| if rng.random_bool(0.3) { 0.0 } else { -rng.random::<f64>().max(1e-300).ln() })
        .collect();
    for &i in support {
        if q[i] == 0.0 {
            q[i] = -rng.random::<f64>().max(1e-300).ln() + 1e-3;
        }
    }
    let total: f64 = q.iter().sum();
    q.iter().map(|x| x / total).collect()
}

/// Index `i` with `x ∈ [prefix(i), prefix(i+1))`, by a linear scan.
pub fn prefix_oracle(weights: &[f64], x: f64) -> usize {
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if x < acc {
            return i;
        }
    }
    unreachable!("x below total")
}
