//! Moment Lyapunov exponents `Lambda(p) = lim (1/T) log E |D phi^T v|^p`
//! from an ensemble of finite-time log growths.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{split_runs, ExcludedRun, ExponentError};
use crate::models::BilinearModel;
use crate::projective::{initial_condition, run_tangent, ProjectiveError, TangentRunOptions};
use crate::sde::IntegratorConfig;

/// Smallest ensemble accepted by [`moment_lyapunov`].
pub const MIN_ENSEMBLE: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub p: f64,
    pub value: f64,
    /// Jackknife standard error over ensemble members.
    pub stderr: f64,
    pub ensemble: usize,
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub excluded: Vec<ExcludedRun>,
}

/// Ensemble members use seeds `cfg.seed + i`. The exponent at `p = 0` is 0
/// exactly; near `p = 0` the slope approaches the top exponent.
pub fn moment_lyapunov(
    model: &BilinearModel,
    cfg: &IntegratorConfig,
    p_list: &[f64],
    ensemble: usize,
) -> Result<Vec<MomentEstimate>, ExponentError> {
    if ensemble < MIN_ENSEMBLE {
        return Err(ExponentError::InvalidArgument(format!(
            "ensemble must have at least {MIN_ENSEMBLE} members, got {ensemble}"
        )));
    }
    if p_list.iter().any(|p| !p.is_finite()) {
        return Err(ExponentError::InvalidArgument("p must be finite".into()));
    }
    cfg.validate()?;
    let n = model.dim();
    let results: Vec<(u64, Result<f64, ProjectiveError>)> = (0..ensemble as u64)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.seed.wrapping_add(i);
            let (x0, v0) = initial_condition(n, seed, 1.0);
            let run_cfg = cfg.clone().with_seed(seed);
            let r = run_tangent(model, &x0, &v0, &run_cfg, TangentRunOptions::default());
            (seed, r.map(|r| r.log_growth))
        })
        .collect();
    let (growth, excluded) = split_runs(results)?;
    let tau = cfg.measured_time();
    p_list
        .iter()
        .map(|&p| {
            let (value, stderr) = moment_from_growth(&growth, p, tau)?;
            Ok(MomentEstimate {
                p,
                value,
                stderr,
                ensemble: growth.len(),
                horizon: cfg.horizon,
                excluded: excluded.clone(),
            })
        })
        .collect()
}

/// `(1/tau) log mean exp(p L_i)` and its jackknife standard error.
pub(crate) fn moment_from_growth(
    growth: &[f64],
    p: f64,
    tau: f64,
) -> Result<(f64, f64), ExponentError> {
    if p == 0.0 {
        return Ok((0.0, 0.0));
    }
    let scaled: Vec<f64> = growth.iter().map(|l| p * l).collect();
    if scaled.iter().any(|v| !v.is_finite()) {
        return Err(ExponentError::Overflow { p });
    }
    let k = scaled.len();
    let full = log_mean_exp(&scaled) / tau;
    if !full.is_finite() {
        return Err(ExponentError::Overflow { p });
    }
    if k < 2 {
        return Ok((full, 0.0));
    }
    let mut rest = Vec::with_capacity(k - 1);
    let loo: Vec<f64> = (0..k)
        .map(|i| {
            rest.clear();
            rest.extend(scaled.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| *v));
            log_mean_exp(&rest) / tau
        })
        .collect();
    let mean = loo.iter().sum::<f64>() / k as f64;
    let var = loo.iter().map(|v| (v - mean).powi(2)).sum::<f64>() * (k - 1) as f64 / k as f64;
    Ok((full, var.sqrt()))
}

fn log_mean_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = v.iter().map(|x| (x - m).exp()).sum();
    m + s.ln() - (v.len() as f64).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn deterministic_growth_gives_linear_moments() {
        let g = vec![-2.0; 10];
        for p in [-1.0, 0.5, 3.0] {
            let (v, s) = moment_from_growth(&g, p, 10.0).unwrap();
            assert_relative_eq!(v, -0.2 * p, epsilon = 1e-14);
            assert!(s < 1e-14);
        }
        assert_eq!(moment_from_growth(&g, 0.0, 10.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn moments_are_convex_and_bounded_by_jensen() {
        let g: Vec<f64> = (0..50).map(|i| (i as f64 - 25.0) * 0.1).collect();
        let mean = g.iter().sum::<f64>() / 50.0;
        let (a, _) = moment_from_growth(&g, 1.0, 1.0).unwrap();
        assert!(a >= mean);
        let (lo, _) = moment_from_growth(&g, 0.5, 1.0).unwrap();
        let (hi, _) = moment_from_growth(&g, 1.5, 1.0).unwrap();
        assert!(a <= 0.5 * (lo + hi) + 1e-12);
    }

    #[test]
    fn large_values_do_not_overflow_in_the_sum() {
        let g = vec![1000.0, 1000.0];
        let (v, _) = moment_from_growth(&g, 1.0, 1.0).unwrap();
        assert_relative_eq!(v, 1000.0);
        assert!(matches!(
            moment_from_growth(&[f64::MAX], 10.0, 1.0),
            Err(ExponentError::Overflow { .. })
        ));
    }

    #[test]
    fn small_ensemble_rejected() {
        let m = BilinearModel::ornstein_uhlenbeck(&[1.0], &[1.0], 0.1, crate::models::Scaling::Unscaled)
            .unwrap();
        let cfg = IntegratorConfig::new(1e-2, 1.0, 0);
        assert!(moment_lyapunov(&m, &cfg, &[1.0], 10).is_err());
    }
}
