//! Shear lower bound for the conservative (`eps = 0`) flow.
//!
//! The scaling symmetry `Phi^t(a x) = a Phi^{a t}(x)` of a homogeneous
//! quadratic vector field gives, after differentiating in `a` at `a = 1`,
//!
//! ```text
//! D_x Phi^t x = Phi^t(x) + t B(Phi^t x, Phi^t x),
//! ```
//!
//! and since the two terms are orthogonal (energy conservation)
//! `||D_x Phi^t|| >= t |B(Phi^t x, Phi^t x)| / |x|`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ProjectiveError;
use crate::models::{BilinearModel, ModelError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShearSample {
    pub t: f64,
    /// `||D_x Phi^t||` (largest singular value).
    pub lhs: f64,
    /// `t |B(Phi^t x, Phi^t x)| / |x|`.
    pub rhs: f64,
    /// `|D_x Phi^t x - Phi^t(x) - t B(Phi^t x, Phi^t x)|`.
    pub residual: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShearReport {
    pub samples: Vec<ShearSample>,
    pub max_residual: f64,
    pub all_satisfied: bool,
    /// `max_t | |Phi^t x|^2 - |x|^2 |`, a conservation diagnostic.
    pub energy_drift: f64,
}

/// Integrates the `eps = 0` flow and its Jacobian with RK4 (step `dt`) up to
/// `horizon`, sampling every `sample_every` steps.
pub fn shear_bound_check(
    model: &BilinearModel,
    x0: &DVector<f64>,
    horizon: f64,
    dt: f64,
    sample_every: usize,
) -> Result<ShearReport, ProjectiveError> {
    if model.epsilon() != 0.0 {
        return Err(ProjectiveError::NonzeroEpsilon("shear check", model.epsilon()));
    }
    if x0.len() != model.dim() {
        return Err(ModelError::DimensionMismatch {
            expected: model.dim(),
            got: x0.len(),
        }
        .into());
    }
    let x_norm = x0.norm();
    if x_norm == 0.0 {
        return Err(ProjectiveError::ZeroInitialState);
    }
    if !(dt > 0.0 && horizon > 0.0) || sample_every == 0 {
        return Err(ProjectiveError::InvalidArgument(
            "need dt > 0, horizon > 0 and sample_every >= 1".into(),
        ));
    }
    let n = model.dim();
    let steps = (horizon / dt).round() as usize;
    let mut x = x0.clone();
    let mut jac = DMatrix::<f64>::identity(n, n);
    let e0 = x0.norm_squared();
    let mut energy_drift = 0.0_f64;
    let mut samples = Vec::new();
    for step in 1..=steps {
        rk4_variational(model, &mut x, &mut jac, dt);
        energy_drift = energy_drift.max((x.norm_squared() - e0).abs());
        if step % sample_every == 0 || step == steps {
            let t = step as f64 * dt;
            let b = model.form().eval_sq(&x);
            let predicted = &x + &b * t;
            let residual = (&jac * x0 - predicted).norm();
            let lhs = jac.clone().svd(false, false).singular_values.max();
            let rhs = t * b.norm() / x_norm;
            samples.push(ShearSample {
                t,
                lhs,
                rhs,
                residual,
                satisfied: lhs >= rhs * (1.0 - 1e-12),
            });
        }
    }
    Ok(ShearReport {
        max_residual: samples.iter().map(|s| s.residual).fold(0.0, f64::max),
        all_satisfied: samples.iter().all(|s| s.satisfied),
        energy_drift,
        samples,
    })
}

/// Deterministic flow `Phi^t(x0)` of the drift (noise switched off), RK4.
pub fn deterministic_flow(
    model: &BilinearModel,
    x0: &DVector<f64>,
    t: f64,
    dt: f64,
) -> Result<DVector<f64>, ProjectiveError> {
    model.drift(x0)?;
    let steps = (t / dt).round().max(0.0) as usize;
    let h = if steps > 0 { t / steps as f64 } else { 0.0 };
    let mut x = x0.clone();
    let f = |y: &DVector<f64>| model.drift(y).expect("dimension checked");
    for _ in 0..steps {
        let k1 = f(&x);
        let k2 = f(&(&x + &k1 * (0.5 * h)));
        let k3 = f(&(&x + &k2 * (0.5 * h)));
        let k4 = f(&(&x + &k3 * h));
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    Ok(x)
}

fn rk4_variational(model: &BilinearModel, x: &mut DVector<f64>, jac: &mut DMatrix<f64>, h: f64) {
    let f = |y: &DVector<f64>| model.drift(y).expect("dimension checked");
    let m = |y: &DVector<f64>| model.drift_jacobian(y).expect("dimension checked");
    let k1 = f(x);
    let l1 = m(x) * &*jac;
    let x2 = &*x + &k1 * (0.5 * h);
    let j2 = &*jac + &l1 * (0.5 * h);
    let k2 = f(&x2);
    let l2 = m(&x2) * &j2;
    let x3 = &*x + &k2 * (0.5 * h);
    let j3 = &*jac + &l2 * (0.5 * h);
    let k3 = f(&x3);
    let l3 = m(&x3) * &j3;
    let x4 = &*x + &k3 * h;
    let j4 = &*jac + &l3 * h;
    let k4 = f(&x4);
    let l4 = m(&x4) * &j4;
    *x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    *jac += (l1 + l2 * 2.0 + l3 * 2.0 + l4) * (h / 6.0);
}
