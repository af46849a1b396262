//! Objective evaluators, dual residues, sampling distributions and the rate
//! function `θ(κ, p)`, plus exact-enumeration checks of the expected dual
//! ascent inequality and the smoothness inequality of `f(α) = λg*(Aα/λn)`.
//!
//! Primal:  `P(w) = (1/n) Σ φᵢ(Aᵢᵀw) + λ g(w)`
//! Dual:    `D(α) = −λ g*(Aα/(λn)) − (1/n) Σ φᵢ*(−αᵢ)`

use thiserror::Error;

use crate::data::Dataset;
use crate::model::{Loss, ModelError, ProblemSpec, Regularizer, L2};

#[derive(Debug, Error, PartialEq)]
pub enum TheoryError {
    #[error("dual residue is zero: already optimal")]
    AlreadyOptimal,
    #[error("probability vector not coherent with the residue at index {0}")]
    Incoherent(usize),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("theta {theta} exceeds the smallest supported probability {min_p}")]
    ThetaAboveMinProbability { theta: f64, min_p: f64 },
    #[error("theta must be finite and non-negative, got {0}")]
    BadTheta(f64),
    #[error("problem too large to enumerate: n = {0}")]
    TooLarge(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Relative threshold under which a residue entry counts as zero.
pub const RESIDUE_ZERO_TOL: f64 = 1e-14;

/// Largest `n` accepted by [`expected_ascent_check`].
pub const MAX_ENUMERATION: usize = 1000;

/// Dual residue `κᵢ = αᵢ + φᵢ′(Aᵢᵀw)` with its support `{i : κᵢ ≠ 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidueVector {
    kappa: Vec<f64>,
    support: Vec<usize>,
}

impl ResidueVector {
    /// Entries with `|κᵢ| ≤ 1e-14·max(1, maxⱼ|κⱼ|)` are left out of the support.
    pub fn from_kappa(kappa: Vec<f64>) -> Self {
        let max = kappa.iter().fold(0.0f64, |m, k| m.max(k.abs()));
        let tol = RESIDUE_ZERO_TOL * max.max(1.0);
        let support = kappa
            .iter()
            .enumerate()
            .filter(|(_, k)| k.abs() > tol)
            .map(|(i, _)| i)
            .collect();
        Self { kappa, support }
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.kappa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappa.is_empty()
    }

    /// True when the support is empty.
    pub fn is_optimal(&self) -> bool {
        self.support.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.kappa.iter().fold(0.0, |m, k| m.max(k.abs()))
    }

    pub fn mean_abs(&self) -> f64 {
        self.kappa.iter().map(|k| k.abs()).sum::<f64>() / self.kappa.len().max(1) as f64
    }
}

/// One evaluation of the primal-dual pair.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub theta_used: Option<f64>,
    pub residue_max: f64,
    pub residue_mean: f64,
}

/// `P(w)`.
pub fn primal_value(dataset: &Dataset, spec: &ProblemSpec, w: &[f64]) -> f64 {
    let a = dataset.matrix();
    let y = dataset.labels();
    let loss: f64 = (0..dataset.n())
        .map(|i| spec.loss_value(y[i], a.dot(i, w)))
        .sum();
    loss / dataset.n() as f64 + spec.lambda() * L2.value(w)
}

/// `D(α)` given the caller-maintained `ᾱ = Aα/(λn)`. Returns `−∞` when any
/// `αᵢ` lies outside the conjugate's domain.
pub fn dual_value(dataset: &Dataset, spec: &ProblemSpec, alpha: &[f64], alpha_bar: &[f64]) -> f64 {
    let y = dataset.labels();
    let mut conj = 0.0;
    for (i, &a) in alpha.iter().enumerate() {
        let c = spec.conjugate_value(y[i], -a);
        if c == f64::INFINITY {
            return f64::NEG_INFINITY;
        }
        conj += c;
    }
    -spec.lambda() * L2.conjugate_value(alpha_bar) - conj / dataset.n() as f64
}

/// `ᾱ = Aα/(λn)` from scratch.
pub fn alpha_bar(dataset: &Dataset, spec: &ProblemSpec, alpha: &[f64]) -> Vec<f64> {
    let scale = 1.0 / (spec.lambda() * dataset.n() as f64);
    let mut out = dataset.matrix().mul(alpha);
    for x in &mut out {
        *x *= scale;
    }
    out
}

/// `w = ∇g*(Aα/(λn))`.
pub fn primal_point(dataset: &Dataset, spec: &ProblemSpec, alpha: &[f64]) -> Vec<f64> {
    L2.conjugate_gradient(&alpha_bar(dataset, spec, alpha))
}

/// `D(α)` with `ᾱ` recomputed from `α`.
pub fn dual_value_fresh(dataset: &Dataset, spec: &ProblemSpec, alpha: &[f64]) -> f64 {
    dual_value(dataset, spec, alpha, &alpha_bar(dataset, spec, alpha))
}

/// `κᵢ = αᵢ + φᵢ′(Aᵢᵀw)`.
pub fn dual_residue(dataset: &Dataset, spec: &ProblemSpec, alpha: &[f64], w: &[f64]) -> ResidueVector {
    let a = dataset.matrix();
    let y = dataset.labels();
    let kappa = (0..dataset.n())
        .map(|i| alpha[i] + spec.loss_derivative(y[i], a.dot(i, w)))
        .collect();
    ResidueVector::from_kappa(kappa)
}

/// Primal, dual, gap and residue summary at `(α, w)`.
pub fn gap_report(
    dataset: &Dataset,
    spec: &ProblemSpec,
    alpha: &[f64],
    w: &[f64],
    theta_used: Option<f64>,
) -> GapReport {
    let primal = primal_value(dataset, spec, w);
    let dual = dual_value(dataset, spec, alpha, w);
    let residue = dual_residue(dataset, spec, alpha, w);
    GapReport {
        primal,
        dual,
        gap: primal - dual,
        theta_used,
        residue_max: residue.max_abs(),
        residue_mean: residue.mean_abs(),
    }
}

fn check_len(expected: usize, got: usize) -> Result<(), TheoryError> {
    if expected == got {
        Ok(())
    } else {
        Err(TheoryError::LengthMismatch { expected, got })
    }
}

fn check_coherent(kappa: &ResidueVector, p: &[f64]) -> Result<(), TheoryError> {
    match kappa.support().iter().find(|&&i| p[i].is_nan() || p[i] <= 0.0) {
        Some(&i) => Err(TheoryError::Incoherent(i)),
        None => Ok(()),
    }
}

/// Rate function
/// `θ(κ, p) = nλγ Σ|κᵢ|² / Σ pᵢ⁻¹|κᵢ|²(vᵢ + nλγ)` over the support of `κ`.
pub fn theta(
    kappa: &ResidueVector,
    p: &[f64],
    v: &[f64],
    lambda: f64,
    gamma: f64,
) -> Result<f64, TheoryError> {
    let n = v.len();
    check_len(n, kappa.len())?;
    check_len(n, p.len())?;
    if kappa.is_optimal() {
        return Err(TheoryError::AlreadyOptimal);
    }
    check_coherent(kappa, p)?;
    let nlg = n as f64 * lambda * gamma;
    // κ is rescaled by its largest entry so tiny residues do not underflow.
    let scale = kappa.max_abs();
    let (mut num, mut den) = (0.0, 0.0);
    for &i in kappa.support() {
        let k2 = (kappa.kappa()[i] / scale).powi(2);
        num += k2;
        den += k2 * (v[i] + nlg) / p[i];
    }
    Ok(nlg * num / den)
}

/// Importance sampling `pᵢ ∝ vᵢ + nλγ`.
pub fn importance_probabilities(v: &[f64], lambda: f64, gamma: f64) -> Vec<f64> {
    let nlg = v.len() as f64 * lambda * gamma;
    let total: f64 = v.iter().map(|vi| vi + nlg).sum();
    v.iter().map(|vi| (vi + nlg) / total).collect()
}

/// Unnormalized adaptive weights `|κᵢ|·√(vᵢ + nλγ)`, zero off the support.
pub fn adaptive_weights(kappa: &ResidueVector, v: &[f64], lambda: f64, gamma: f64) -> Vec<f64> {
    let nlg = v.len() as f64 * lambda * gamma;
    let mut out = vec![0.0; v.len()];
    for &i in kappa.support() {
        out[i] = kappa.kappa()[i].abs() * (v[i] + nlg).sqrt();
    }
    out
}

/// The maximizer of `θ(κ, ·)` over the simplex: `pᵢ ∝ |κᵢ|·√(vᵢ + nλγ)`.
pub fn adaptive_probabilities(
    kappa: &ResidueVector,
    v: &[f64],
    lambda: f64,
    gamma: f64,
) -> Result<Vec<f64>, TheoryError> {
    check_len(v.len(), kappa.len())?;
    if kappa.is_optimal() {
        return Err(TheoryError::AlreadyOptimal);
    }
    let mut p = adaptive_weights(kappa, v, lambda, gamma);
    let total: f64 = p.iter().sum();
    for x in &mut p {
        *x /= total;
    }
    Ok(p)
}

/// Rate of importance-sampled SDCA: `θ* = nλγ / Σ(vᵢ + nλγ)`.
pub fn theta_star(v: &[f64], lambda: f64, gamma: f64) -> f64 {
    let nlg = v.len() as f64 * lambda * gamma;
    nlg / v.iter().map(|vi| vi + nlg).sum::<f64>()
}

/// Result of [`expected_ascent_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentCheck {
    /// `Σᵢ pᵢ [D(α + Δᵢeᵢ) − D(α)]`.
    pub lhs: f64,
    /// `θ (P(w) − D(α))`.
    pub rhs: f64,
    pub holds: bool,
}

/// Verifies `E[D(α⁺) − D(α)] ≥ θ (P(w) − D(α))` by enumerating every
/// coordinate update, where `w = ∇g*(Aα/λn)`.
///
/// For non-quadratic losses the inequality is only claimed for
/// `θ ≤ min_{i ∈ support} pᵢ`; larger `theta_val` is rejected.
pub fn expected_ascent_check(
    dataset: &Dataset,
    spec: &ProblemSpec,
    alpha: &[f64],
    p: &[f64],
    theta_val: f64,
) -> Result<AscentCheck, TheoryError> {
    let n = dataset.n();
    if n > MAX_ENUMERATION {
        return Err(TheoryError::TooLarge(n));
    }
    check_len(n, alpha.len())?;
    check_len(n, p.len())?;
    if !(theta_val >= 0.0 && theta_val.is_finite()) {
        return Err(TheoryError::BadTheta(theta_val));
    }
    let w = primal_point(dataset, spec, alpha);
    let kappa = dual_residue(dataset, spec, alpha, &w);
    check_coherent(&kappa, p)?;
    if spec.loss() != Loss::Quadratic {
        let min_p = kappa
            .support()
            .iter()
            .map(|&i| p[i])
            .fold(f64::INFINITY, f64::min);
        if theta_val > min_p {
            return Err(TheoryError::ThetaAboveMinProbability { theta: theta_val, min_p });
        }
    }

    let a = dataset.matrix();
    let y = dataset.labels();
    let v = dataset.norms();
    let d0 = dual_value_fresh(dataset, spec, alpha);
    let gap = primal_value(dataset, spec, &w) - d0;
    let mut trial = alpha.to_vec();
    let mut lhs = 0.0;
    for i in 0..n {
        if p[i] == 0.0 {
            continue;
        }
        let delta = spec.coordinate_step(y[i], alpha[i], a.dot(i, &w), v[i], n)?;
        trial[i] = alpha[i] + delta;
        lhs += p[i] * (dual_value_fresh(dataset, spec, &trial) - d0);
        trial[i] = alpha[i];
    }
    let rhs = theta_val * gap;
    let holds = lhs >= rhs - 1e-9 * rhs.abs().max(1.0);
    Ok(AscentCheck { lhs, rhs, holds })
}

/// Result of [`smoothness_inequality_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessCheck {
    /// `f(α + h)`.
    pub lhs: f64,
    /// `f(α) + ⟨∇f(α), h⟩ + ‖Ah‖²/(2λn²)`.
    pub rhs: f64,
    pub holds: bool,
}

/// `f(α) = λ g*(Aα/(λn))`.
pub fn smooth_part(dataset: &Dataset, spec: &ProblemSpec, alpha: &[f64]) -> f64 {
    spec.lambda() * L2.conjugate_value(&alpha_bar(dataset, spec, alpha))
}

/// Evaluates both sides of
/// `f(α + h) ≤ f(α) + ⟨∇f(α), h⟩ + hᵀAᵀAh / (2λn²)` with `∇ᵢf(α) = Aᵢᵀw / n`.
pub fn smoothness_inequality_check(
    dataset: &Dataset,
    spec: &ProblemSpec,
    alpha: &[f64],
    h: &[f64],
) -> Result<SmoothnessCheck, TheoryError> {
    let n = dataset.n();
    check_len(n, alpha.len())?;
    check_len(n, h.len())?;
    let nf = n as f64;
    let w = primal_point(dataset, spec, alpha);
    let grad = dataset.matrix().transpose_mul(&w);
    let inner: f64 = grad.iter().zip(h).map(|(g, hi)| g * hi / nf).sum();
    let ah = dataset.matrix().mul(h);
    let quad: f64 = ah.iter().map(|x| x * x).sum::<f64>() / (2.0 * spec.lambda() * nf * nf);
    let shifted: Vec<f64> = alpha.iter().zip(h).map(|(a, hi)| a + hi).collect();
    let lhs = smooth_part(dataset, spec, &shifted);
    let rhs = smooth_part(dataset, spec, alpha) + inner + quad;
    Ok(SmoothnessCheck { lhs, rhs, holds: lhs <= rhs + 1e-9 })
}
