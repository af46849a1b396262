//! Loss families, their convex conjugates, and the exact single-coordinate
//! dual maximization step.
//!
//! Losses are `(1/γ)`-smooth, which makes every conjugate `φᵢ*` γ-strongly
//! convex on its domain. The label `yᵢ` is folded into `φᵢ`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("gamma must be positive and finite, got {0}")]
    InvalidGamma(f64),
    #[error("lambda must be positive and finite, got {0}")]
    InvalidLambda(f64),
    #[error("smoothed hinge needs labels in {{-1, +1}}, got {0}")]
    BadHingeLabel(f64),
    #[error("dual variable {alpha} is infeasible for label {label} (need y·α in [0, 1])")]
    InfeasibleDual { alpha: f64, label: f64 },
    #[error("unknown loss {0:?}")]
    UnknownLoss(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Loss {
    /// `φᵢ(x) = (x − yᵢ)² / (2γ)`.
    Quadratic,
    /// Quadratically smoothed hinge with labels in `{-1, +1}`.
    SmoothedHinge,
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Loss::Quadratic => "quadratic",
            Loss::SmoothedHinge => "smooth-hinge",
        })
    }
}

impl FromStr for Loss {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "quadratic" | "quad" => Ok(Loss::Quadratic),
            "smooth-hinge" | "smoothed-hinge" | "hinge" => Ok(Loss::SmoothedHinge),
            other => Err(ModelError::UnknownLoss(other.to_string())),
        }
    }
}

/// Loss family, smoothness parameter `γ` and regularization strength `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemSpec {
    loss: Loss,
    gamma: f64,
    lambda: f64,
}

impl ProblemSpec {
    pub fn new(loss: Loss, gamma: f64, lambda: f64) -> Result<Self, ModelError> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(ModelError::InvalidGamma(gamma));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(ModelError::InvalidLambda(lambda));
        }
        Ok(Self { loss, gamma, lambda })
    }

    pub fn loss(&self) -> Loss {
        self.loss
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `φᵢ(x)`.
    pub fn loss_value(&self, y: f64, x: f64) -> f64 {
        let g = self.gamma;
        match self.loss {
            Loss::Quadratic => (x - y) * (x - y) / (2.0 * g),
            Loss::SmoothedHinge => {
                let yx = y * x;
                if yx >= 1.0 {
                    0.0
                } else if yx <= 1.0 - g {
                    1.0 - yx - g / 2.0
                } else {
                    (1.0 - yx) * (1.0 - yx) / (2.0 * g)
                }
            }
        }
    }

    /// `φᵢ′(x)`.
    pub fn loss_derivative(&self, y: f64, x: f64) -> f64 {
        let g = self.gamma;
        match self.loss {
            Loss::Quadratic => (x - y) / g,
            Loss::SmoothedHinge => {
                let yx = y * x;
                if yx >= 1.0 {
                    0.0
                } else if yx <= 1.0 - g {
                    -y
                } else {
                    -y * (1.0 - yx) / g
                }
            }
        }
    }

    /// `φᵢ*(u)`; `+∞` outside the conjugate's domain.
    pub fn conjugate_value(&self, y: f64, u: f64) -> f64 {
        let quad = y * u + self.gamma * u * u / 2.0;
        match self.loss {
            Loss::Quadratic => quad,
            Loss::SmoothedHinge => {
                let yu = y * u;
                if (-1.0..=0.0).contains(&yu) {
                    quad
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Whether `αᵢ` lies in the domain of `−φᵢ*(−·)`.
    pub fn is_dual_feasible(&self, y: f64, alpha: f64) -> bool {
        match self.loss {
            Loss::Quadratic => alpha.is_finite(),
            Loss::SmoothedHinge => (0.0..=1.0).contains(&(y * alpha)),
        }
    }

    /// Exact maximizer `Δ` of
    /// `−φᵢ*(−(αᵢ + Δ)) − aᵢΔ − vᵢΔ²/(2λn)`
    /// where `aᵢ = Aᵢᵀw` and `vᵢ = ‖Aᵢ‖²`.
    pub fn coordinate_step(
        &self,
        y: f64,
        alpha: f64,
        a: f64,
        v: f64,
        n: usize,
    ) -> Result<f64, ModelError> {
        let curvature = v / (self.lambda * n as f64);
        match self.loss {
            Loss::Quadratic => Ok((y - a - self.gamma * alpha) / (self.gamma + curvature)),
            Loss::SmoothedHinge => {
                if y != 1.0 && y != -1.0 {
                    return Err(ModelError::BadHingeLabel(y));
                }
                if !self.is_dual_feasible(y, alpha) {
                    return Err(ModelError::InfeasibleDual { alpha, label: y });
                }
                let unconstrained = (y - a + curvature * alpha) / (self.gamma + curvature);
                let beta = y * (y * unconstrained).clamp(0.0, 1.0);
                // β − α can round so that α + Δ leaves [0, 1]; pull Δ toward zero.
                let mut delta = beta - alpha;
                while !self.is_dual_feasible(y, alpha + delta) {
                    delta = if delta > 0.0 { delta.next_down() } else { delta.next_up() };
                }
                Ok(delta)
            }
        }
    }
}

/// A 1-strongly convex regularizer `g` with conjugate `g*`.
pub trait Regularizer {
    fn value(&self, w: &[f64]) -> f64;
    fn conjugate_value(&self, z: &[f64]) -> f64;
    /// Writes `∇g*(z)` into `out`.
    fn conjugate_gradient_into(&self, z: &[f64], out: &mut [f64]);

    fn conjugate_gradient(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; z.len()];
        self.conjugate_gradient_into(z, &mut out);
        out
    }
}

/// `g(w) = ½‖w‖²`, self-conjugate with `∇g*` the identity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct L2;

impl Regularizer for L2 {
    fn value(&self, w: &[f64]) -> f64 {
        0.5 * w.iter().map(|x| x * x).sum::<f64>()
    }

    fn conjugate_value(&self, z: &[f64]) -> f64 {
        self.value(z)
    }

    fn conjugate_gradient_into(&self, z: &[f64], out: &mut [f64]) {
        out.copy_from_slice(z);
    }
}
