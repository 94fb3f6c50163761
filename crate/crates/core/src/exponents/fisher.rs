//! Fisher information of the Gaussian stationary law of a linear model.
//!
//! For `dx = -eps A x dt + sqrt(eps) Q dW` with `A` symmetric positive
//! definite and `Q = diag(q)`, the stationary covariance solves
//! `A S + S A = Q Q^T` and the Fisher information of the stationary law
//! along the noise directions is `(eps / 2) sum_k q_k^2 (S^{-1})_kk`,
//! which must equal `-lambda_Sigma = eps tr A`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::ExponentError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherCheck {
    pub fisher_information: f64,
    /// `eps tr A`.
    pub minus_lambda_sum: f64,
    pub residual: f64,
}

/// Solves `A S + S A = C` for symmetric positive definite `A` and symmetric
/// `C` in the eigenbasis of `A`.
pub fn solve_lyapunov(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>, ExponentError> {
    let n = a.nrows();
    if a.ncols() != n || c.shape() != (n, n) {
        return Err(ExponentError::InvalidArgument("shape mismatch in Lyapunov equation".into()));
    }
    check_spd(a)?;
    let (u, lam) = if is_diagonal(a) {
        (DMatrix::identity(n, n), a.diagonal())
    } else {
        let eig = a.clone().symmetric_eigen();
        (eig.eigenvectors, eig.eigenvalues)
    };
    let mut ct = u.transpose() * c * &u;
    for i in 0..n {
        for j in 0..n {
            ct[(i, j)] /= lam[i] + lam[j];
        }
    }
    Ok(&u * ct * u.transpose())
}

pub fn gaussian_fisher_check(
    a: &DMatrix<f64>,
    q: &[f64],
    epsilon: f64,
) -> Result<FisherCheck, ExponentError> {
    let n = a.nrows();
    if q.len() != n {
        return Err(ExponentError::InvalidArgument(format!(
            "{} noise amplitudes for dimension {n}",
            q.len()
        )));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(ExponentError::InvalidArgument("epsilon must be positive".into()));
    }
    if let Some(k) = q.iter().position(|&v| v == 0.0) {
        return Err(ExponentError::DegenerateForcing(k));
    }
    let qq = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, q.iter().map(|v| v * v)));
    let sigma = solve_lyapunov(a, &qq)?;
    let inv = sigma
        .cholesky()
        .ok_or(ExponentError::NotSpd)?
        .inverse();
    let fisher = 0.5 * epsilon * (0..n).map(|k| q[k] * q[k] * inv[(k, k)]).sum::<f64>();
    let target = epsilon * a.trace();
    Ok(FisherCheck {
        fisher_information: fisher,
        minus_lambda_sum: target,
        residual: (fisher - target).abs(),
    })
}

fn is_diagonal(a: &DMatrix<f64>) -> bool {
    (0..a.nrows()).all(|i| (0..a.ncols()).all(|j| i == j || a[(i, j)] == 0.0))
}

fn check_spd(a: &DMatrix<f64>) -> Result<(), ExponentError> {
    let n = a.nrows();
    for i in 0..n {
        for j in 0..i {
            if a[(i, j)] != a[(j, i)] {
                return Err(ExponentError::NotSpd);
            }
        }
    }
    if !a.iter().all(|v| v.is_finite()) || a.clone().cholesky().is_none() {
        return Err(ExponentError::NotSpd);
    }
    Ok(())
}
