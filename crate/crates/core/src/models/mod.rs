//! Euler-like bilinear models
//!
//! ```text
//! dx = (B(x, x) - eps A x) dt + s(eps) sum_k X_k dW^k
//! ```
//!
//! with `s(eps) = 1` in the unscaled form and `s(eps) = sqrt(eps)` in the
//! fluctuation-dissipation form. `B` is energy conserving
//! (`x . B(x, x) = 0`) and divergence free, `A` is symmetric positive
//! definite and the forcing vectors `X_k` are constant.

mod form;
mod gnse;
mod l96;
mod lattice;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use form::{BilinearForm, BilinearTerm};
pub use gnse::{build_gnse, ForcedMode, GnseConfig};
pub use l96::build_l96;
pub(crate) use l96::l96_entries;
pub use lattice::{structure_coefficient, structure_coefficient_f64, TruncatedLattice, Wavevector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("{what} must be at least {min}, got {got}")]
    TooSmall {
        what: &'static str,
        min: usize,
        got: usize,
    },
    #[error("model has no nonzero forcing direction")]
    NoForcing,
    #[error("forcing vector {0} is zero")]
    ZeroForcingVector(String),
    #[error("damping matrix is not symmetric")]
    DampingNotSymmetric,
    #[error("damping matrix is not positive definite")]
    DampingNotPositiveDefinite,
    #[error("epsilon must be finite and non-negative, got {0}")]
    InvalidEpsilon(f64),
    #[error("aspect ratio r must be positive, got {0}")]
    InvalidAspectRatio(String),
    #[error("invalid forced mode: {0}")]
    InvalidForcedMode(String),
    #[error("model is already in fluctuation-dissipation scaling")]
    AlreadyRescaled,
}

/// Which of the two equivalent forms of the SDE a model is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scaling {
    /// Noise amplitude independent of `eps`.
    Unscaled,
    /// Noise amplitude `sqrt(eps)`; stationary energy is `O(1)` as `eps -> 0`.
    FluctuationDissipation,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Lorenz96 { n: usize },
    Gnse(GnseConfig),
    OrnsteinUhlenbeck,
    Custom,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Lorenz96 { .. } => "l96",
            ModelKind::Gnse(_) => "gnse",
            ModelKind::OrnsteinUhlenbeck => "ou",
            ModelKind::Custom => "custom",
        }
    }
}

/// A constant forcing field `X_k`, amplitude included.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingVector {
    pub label: String,
    pub vector: DVector<f64>,
}

/// Immutable Euler-like model. Safe to share between worker threads.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearModel {
    kind: ModelKind,
    form: BilinearForm,
    damping: DMatrix<f64>,
    forcing: Vec<ForcingVector>,
    epsilon: f64,
    scaling: Scaling,
}

impl BilinearModel {
    pub fn new(
        kind: ModelKind,
        form: BilinearForm,
        damping: DMatrix<f64>,
        forcing: Vec<ForcingVector>,
        epsilon: f64,
        scaling: Scaling,
    ) -> Result<Self, ModelError> {
        let n = form.dim();
        if damping.nrows() != n || damping.ncols() != n {
            return Err(ModelError::DimensionMismatch {
                expected: n,
                got: damping.nrows(),
            });
        }
        validate_damping(&damping)?;
        for f in &forcing {
            if f.vector.len() != n {
                return Err(ModelError::DimensionMismatch {
                    expected: n,
                    got: f.vector.len(),
                });
            }
            if f.vector.iter().all(|v| *v == 0.0) {
                return Err(ModelError::ZeroForcingVector(f.label.clone()));
            }
        }
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(ModelError::InvalidEpsilon(epsilon));
        }
        Ok(Self {
            kind,
            form,
            damping,
            forcing,
            epsilon,
            scaling,
        })
    }

    /// Linear Ornstein-Uhlenbeck benchmark: `B = 0`, `A = diag(a)`, forcing
    /// `q_k e_k` for every nonzero `q_k`.
    pub fn ornstein_uhlenbeck(
        a_diag: &[f64],
        q: &[f64],
        epsilon: f64,
        scaling: Scaling,
    ) -> Result<Self, ModelError> {
        let n = a_diag.len();
        if q.len() != n {
            return Err(ModelError::DimensionMismatch {
                expected: n,
                got: q.len(),
            });
        }
        let forcing = coordinate_forcing(n, q);
        Self::new(
            ModelKind::OrnsteinUhlenbeck,
            BilinearForm::zero(n),
            DMatrix::from_diagonal(&DVector::from_column_slice(a_diag)),
            forcing,
            epsilon,
            scaling,
        )
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.form.dim()
    }

    pub fn form(&self) -> &BilinearForm {
        &self.form
    }

    pub fn damping(&self) -> &DMatrix<f64> {
        &self.damping
    }

    pub fn forcing(&self) -> &[ForcingVector] {
        &self.forcing
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn scaling(&self) -> Scaling {
        self.scaling
    }

    pub fn trace_damping(&self) -> f64 {
        self.damping.trace()
    }

    /// Multiplier of the forcing vectors in front of `dW`.
    pub fn noise_scale(&self) -> f64 {
        match self.scaling {
            Scaling::Unscaled => 1.0,
            Scaling::FluctuationDissipation => self.epsilon.sqrt(),
        }
    }

    /// Same model with a different `eps`.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self, ModelError> {
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(ModelError::InvalidEpsilon(epsilon));
        }
        Ok(Self {
            epsilon,
            ..self.clone()
        })
    }

    /// `B(x, x) - eps A x`.
    pub fn drift(&self, x: &DVector<f64>) -> Result<DVector<f64>, ModelError> {
        self.check_dim(x.len())?;
        let mut out = DVector::zeros(self.dim());
        self.drift_into(x.as_slice(), out.as_mut_slice());
        Ok(out)
    }

    pub(crate) fn drift_into(&self, x: &[f64], out: &mut [f64]) {
        self.form.eval_sq_into(x, out);
        let n = self.dim();
        for c in 0..n {
            let xc = x[c];
            if xc == 0.0 {
                continue;
            }
            let col = self.damping.column(c);
            for r in 0..n {
                out[r] -= self.epsilon * col[r] * xc;
            }
        }
    }

    /// Derivative of the drift: `v -> 2 B(x, v) - eps A v`.
    pub fn drift_jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, ModelError> {
        self.check_dim(x.len())?;
        let mut out = DMatrix::zeros(self.dim(), self.dim());
        self.jacobian_into(x.as_slice(), &mut out);
        Ok(out)
    }

    pub(crate) fn jacobian_into(&self, x: &[f64], out: &mut DMatrix<f64>) {
        out.zip_apply(&self.damping, |o, a| *o = -self.epsilon * a);
        self.form.add_jacobian_into(x, out);
    }

    /// Divergence of the drift, `-eps tr A` for any Euler-like model.
    pub fn drift_divergence(&self, x: &[f64]) -> f64 {
        self.form.divergence(x) - self.epsilon * self.trace_damping()
    }

    /// Converts an unscaled model with parameter `eps` to the equivalent
    /// fluctuation-dissipation model with parameter `eps^{3/2}`, via
    /// `y_t = sqrt(eps) x_{sqrt(eps) t}`.
    pub fn rescale_fd(&self) -> Result<(BilinearModel, FdRescaling), ModelError> {
        if self.scaling == Scaling::FluctuationDissipation {
            return Err(ModelError::AlreadyRescaled);
        }
        let map = FdRescaling::new(self.epsilon);
        let model = Self {
            epsilon: map.epsilon_hat,
            scaling: Scaling::FluctuationDissipation,
            ..self.clone()
        };
        Ok((model, map))
    }

    /// Short content hash identifying the model in run artifacts.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.kind.name().as_bytes());
        h.update(self.form.canonical_string().as_bytes());
        for v in self.damping.iter() {
            h.update(v.to_le_bytes());
        }
        for f in &self.forcing {
            h.update(f.label.as_bytes());
            for v in f.vector.iter() {
                h.update(v.to_le_bytes());
            }
        }
        h.update(self.epsilon.to_le_bytes());
        h.update(format!("{:?}", self.scaling).as_bytes());
        hex::encode(&h.finalize()[..8])
    }

    fn check_dim(&self, got: usize) -> Result<(), ModelError> {
        if got != self.dim() {
            Err(ModelError::DimensionMismatch {
                expected: self.dim(),
                got,
            })
        } else {
            Ok(())
        }
    }
}

/// Bookkeeping for the unscaled -> fluctuation-dissipation map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdRescaling {
    pub epsilon: f64,
    pub epsilon_hat: f64,
    /// `sqrt(eps)`: rescaled state is `sqrt(eps) x`, rescaled time `t / sqrt(eps)`.
    pub factor: f64,
}

impl FdRescaling {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            epsilon_hat: epsilon.powf(1.5),
            factor: epsilon.sqrt(),
        }
    }

    /// Exponent of the rescaled system from the unscaled one.
    /// Preserves `lambda / eps`.
    pub fn rescaled_exponent(&self, lambda: f64) -> f64 {
        self.factor * lambda
    }

    pub fn rescaled_state(&self, x: &DVector<f64>) -> DVector<f64> {
        x * self.factor
    }

    /// Rescaled horizon covering the same stretch of the unscaled path.
    pub fn rescaled_horizon(&self, t: f64) -> f64 {
        t / self.factor
    }
}

pub(crate) fn coordinate_forcing(n: usize, q: &[f64]) -> Vec<ForcingVector> {
    q.iter()
        .enumerate()
        .filter(|(_, qk)| **qk != 0.0)
        .map(|(k, qk)| {
            let mut v = DVector::zeros(n);
            v[k] = *qk;
            ForcingVector {
                label: format!("e{}", k + 1),
                vector: v,
            }
        })
        .collect()
}

fn validate_damping(a: &DMatrix<f64>) -> Result<(), ModelError> {
    let scale = a.amax().max(f64::MIN_POSITIVE);
    if (a - a.transpose()).amax() > 1e-12 * scale {
        return Err(ModelError::DampingNotSymmetric);
    }
    if a.nrows() > 0 && a.clone().cholesky().is_none() {
        return Err(ModelError::DampingNotPositiveDefinite);
    }
    Ok(())
}
