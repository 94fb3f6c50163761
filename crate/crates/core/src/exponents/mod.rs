//! Top-level estimators: top exponent with cross-seed error bars, epsilon
//! sweeps, moment Lyapunov exponents, and two closed-form checks of the
//! sum-exponent identities (Gaussian Fisher information, FK average).

mod fisher;
mod moment;
mod sweep;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::BilinearModel;
use crate::projective::{initial_condition, run_tangent, ProjectiveError, TangentRunOptions};
use crate::sde::{IntegratorConfig, SdeError};

pub use fisher::{gaussian_fisher_check, solve_lyapunov, FisherCheck};
pub use moment::{moment_lyapunov, MomentEstimate};
pub use sweep::{epsilon_sweep, SweepOptions, SweepReport, SweepRow, Trend};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExponentError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("forcing does not span R^n (zero amplitude on coordinate {0}); the stationary law has no density")]
    DegenerateForcing(usize),
    #[error("damping matrix is not symmetric positive definite")]
    NotSpd,
    #[error("moment exponent overflow at p = {p}; shrink T or p")]
    Overflow { p: f64 },
    #[error("no samples")]
    EmptySamples,
    #[error(transparent)]
    Projective(#[from] ProjectiveError),
}

impl From<SdeError> for ExponentError {
    fn from(e: SdeError) -> Self {
        ExponentError::Projective(e.into())
    }
}

/// A run that hit the blow-up guard and was left out of an average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcludedRun {
    pub seed: u64,
    pub time: f64,
}

/// Metadata attached to every estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub horizon: f64,
    pub burn_in: f64,
    pub dt: f64,
    pub n_seeds: usize,
    pub fingerprint: String,
}

impl RunMeta {
    pub fn new(model: &BilinearModel, cfg: &IntegratorConfig, n_seeds: usize) -> Self {
        Self {
            horizon: cfg.horizon,
            burn_in: cfg.burn_in,
            dt: cfg.dt,
            n_seeds,
            fingerprint: model.fingerprint(),
        }
    }
}

/// Exponent (units 1/time) with a batch-means standard error over
/// independent seeds. With a single seed the spread is unknown and
/// `stderr` is 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimate {
    pub value: f64,
    pub stderr: f64,
    pub horizon: f64,
    pub dt: f64,
    pub n_seeds: usize,
    pub fingerprint: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub excluded: Vec<ExcludedRun>,
}

impl ExponentEstimate {
    pub fn from_seed_values(values: &[f64], meta: &RunMeta, excluded: &[ExcludedRun]) -> Self {
        let (value, stderr) = mean_stderr(values);
        Self {
            value,
            stderr,
            horizon: meta.horizon,
            dt: meta.dt,
            n_seeds: values.len(),
            fingerprint: meta.fingerprint.clone(),
            excluded: excluded.to_vec(),
        }
    }
}

pub(crate) fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Top Lyapunov exponent: mean over seeds of `log |D phi v| / T` after
/// burn-in. Seeds are `cfg.seed + i`; each run starts from its own generic
/// `(x0, v0)`.
pub fn top_exponent(
    model: &BilinearModel,
    cfg: &IntegratorConfig,
    n_seeds: usize,
) -> Result<ExponentEstimate, ExponentError> {
    top_exponent_with(model, cfg, n_seeds, TangentRunOptions::default())
}

pub fn top_exponent_with(
    model: &BilinearModel,
    cfg: &IntegratorConfig,
    n_seeds: usize,
    opts: TangentRunOptions,
) -> Result<ExponentEstimate, ExponentError> {
    if n_seeds == 0 {
        return Err(ExponentError::InvalidArgument("n_seeds must be >= 1".into()));
    }
    cfg.validate()?;
    let n = model.dim();
    let results: Vec<(u64, Result<f64, ProjectiveError>)> = (0..n_seeds as u64)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.seed.wrapping_add(i);
            let (x0, v0) = initial_condition(n, seed, 1.0);
            let run_cfg = cfg.clone().with_seed(seed);
            (seed, run_tangent(model, &x0, &v0, &run_cfg, opts).map(|r| r.exponent()))
        })
        .collect();
    let (values, excluded) = split_runs(results)?;
    Ok(ExponentEstimate::from_seed_values(
        &values,
        &RunMeta::new(model, cfg, values.len()),
        &excluded,
    ))
}

/// Separates successful runs from blow-ups; any other error aborts.
pub(crate) fn split_runs<T>(
    results: Vec<(u64, Result<T, ProjectiveError>)>,
) -> Result<(Vec<T>, Vec<ExcludedRun>), ExponentError> {
    let mut ok = Vec::new();
    let mut excluded = Vec::new();
    for (seed, r) in results {
        match r {
            Ok(v) => ok.push(v),
            Err(ProjectiveError::Sde(SdeError::BlowUp { time })) => {
                log::warn!("run with seed {seed} blew up at t = {time}; excluded");
                excluded.push(ExcludedRun { seed, time })
            }
            Err(e) => return Err(e.into()),
        }
    }
    if ok.is_empty() {
        let time = excluded.first().map_or(0.0, |e| e.time);
        return Err(ProjectiveError::Sde(SdeError::BlowUp { time }).into());
    }
    Ok((ok, excluded))
}

/// Stationary average of `Q(x) = div X_0(x)`, an estimate of
/// `lambda_Sigma`. For Euler-like models the integrand is the constant
/// `-eps tr A`.
pub fn fk_average(model: &BilinearModel, samples: &[DVector<f64>]) -> Result<f64, ExponentError> {
    if samples.is_empty() {
        return Err(ExponentError::EmptySamples);
    }
    let mut sum = 0.0;
    for x in samples {
        if x.len() != model.dim() {
            return Err(ExponentError::InvalidArgument(format!(
                "sample of dimension {} for model of dimension {}",
                x.len(),
                model.dim()
            )));
        }
        sum += model.drift_divergence(x.as_slice());
    }
    Ok(sum / samples.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_l96, Scaling};
    use approx::assert_relative_eq;

    #[test]
    fn mean_and_stderr() {
        let (m, s) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert_relative_eq!(s, (5.0f64 / 3.0 / 4.0).sqrt());
        assert_eq!(mean_stderr(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn fk_average_is_minus_eps_trace() {
        let m = build_l96(7, &[1.0, 1.0], 0.1, Scaling::FluctuationDissipation).unwrap();
        let samples: Vec<_> = (0..20).map(|s| initial_condition(7, s, 5.0).0).collect();
        assert_relative_eq!(fk_average(&m, &samples).unwrap(), -0.7, epsilon = 1e-12);
        let ou = BilinearModel::ornstein_uhlenbeck(&[1.0, 2.0], &[1.0, 1.0], 0.1, Scaling::Unscaled)
            .unwrap();
        assert_relative_eq!(
            fk_average(&ou, &[DVector::from_vec(vec![3.0, -1.0])]).unwrap(),
            -0.3,
            epsilon = 1e-15
        );
        assert_eq!(fk_average(&ou, &[]).unwrap_err(), ExponentError::EmptySamples);
    }

    #[test]
    fn top_exponent_rejects_zero_seeds() {
        let m = build_l96(7, &[1.0, 1.0], 0.1, Scaling::FluctuationDissipation).unwrap();
        let cfg = IntegratorConfig::new(1e-3, 1.0, 0);
        assert!(top_exponent(&m, &cfg, 0).is_err());
    }

    #[test]
    fn ou_top_exponent() {
        let m = BilinearModel::ornstein_uhlenbeck(&[1.0, 2.0], &[1.0, 1.0], 0.1, Scaling::FluctuationDissipation)
            .unwrap();
        let cfg = IntegratorConfig::new(1e-3, 300.0, 1).with_burn_in(100.0);
        let est = top_exponent(&m, &cfg, 4).unwrap();
        assert!((est.value + 0.1).abs() < 1e-3, "{est:?}");
        assert_eq!(est.n_seeds, 4);
    }
}
