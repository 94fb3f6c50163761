//! Time integration of the additive-noise SDE
//! `dx = X_0(x) dt + s(eps) sum_k X_k dW^k`.

mod export;
mod noise;

use std::ops::ControlFlow;

use nalgebra::{DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{BilinearModel, ModelError};

pub use export::{read_binary, FRAME_MAGIC, FRAME_VERSION};
pub use noise::{GaussianStream, NoiseSource};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdeError {
    #[error("invalid integrator config: {0}")]
    InvalidConfig(String),
    #[error("non-finite or runaway state at t = {time}")]
    BlowUp { time: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// `x += dt F(x) + dW`.
    #[default]
    EulerMaruyama,
    /// Heun on the drift, additive noise added exactly once.
    DriftHeun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    /// Total simulated time `T`, burn-in included.
    pub horizon: f64,
    pub burn_in: f64,
    pub seed: u64,
    #[serde(default)]
    pub scheme: Scheme,
    /// Trajectories keep every `record_every`-th step.
    #[serde(default = "one")]
    pub record_every: usize,
}

fn one() -> usize {
    1
}

impl IntegratorConfig {
    /// Burn-in defaults to 10% of the horizon.
    pub fn new(dt: f64, horizon: f64, seed: u64) -> Self {
        Self {
            dt,
            horizon,
            burn_in: 0.1 * horizon,
            seed,
            scheme: Scheme::EulerMaruyama,
            record_every: 1,
        }
    }

    pub fn with_burn_in(mut self, burn_in: f64) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn validate(&self) -> Result<(), SdeError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SdeError::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(SdeError::InvalidConfig(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if !(self.burn_in >= 0.0 && self.burn_in < self.horizon) {
            return Err(SdeError::InvalidConfig(format!(
                "burn-in {} must lie in [0, horizon = {})",
                self.burn_in, self.horizon
            )));
        }
        if self.record_every == 0 {
            return Err(SdeError::InvalidConfig("record_every must be >= 1".into()));
        }
        Ok(())
    }

    pub fn total_steps(&self) -> u64 {
        (self.horizon / self.dt).round() as u64
    }

    pub fn burn_in_steps(&self) -> u64 {
        (self.burn_in / self.dt).round() as u64
    }

    /// Time covered by the post-burn-in part of the run.
    pub fn measured_time(&self) -> f64 {
        (self.total_steps() - self.burn_in_steps()) as f64 * self.dt
    }
}

/// Default step: `min(1e-3, 0.1 / (||A|| eps), 0.01 / x_scale)` where
/// `x_scale` is the typical state magnitude.
pub fn default_dt(model: &BilinearModel, x_scale: f64) -> f64 {
    let a_norm = SymmetricEigen::new(model.damping().clone())
        .eigenvalues
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut dt = 1e-3_f64;
    let damp_rate = a_norm * model.epsilon();
    if damp_rate > 0.0 {
        dt = dt.min(0.1 / damp_rate);
    }
    if x_scale > 0.0 {
        dt = dt.min(0.01 / x_scale);
    }
    dt
}

/// Above this squared norm a state is treated as a blow-up.
pub(crate) const RUNAWAY_NORM_SQ: f64 = 1e200;

/// Single-step integrator for one model. Holds scratch buffers, so one
/// instance per run.
#[derive(Debug, Clone)]
pub struct Stepper<'m> {
    model: &'m BilinearModel,
    scheme: Scheme,
    dt: f64,
    /// Nonzero entries `(coordinate, s(eps) * value)` of each forcing vector.
    forcing: Vec<Vec<(usize, f64)>>,
    f0: Vec<f64>,
    f1: Vec<f64>,
    trial: Vec<f64>,
    kick: Vec<f64>,
}

impl<'m> Stepper<'m> {
    pub fn new(model: &'m BilinearModel, scheme: Scheme, dt: f64) -> Self {
        let s = model.noise_scale();
        let forcing = model
            .forcing()
            .iter()
            .map(|f| {
                f.vector
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(i, v)| (i, s * v))
                    .collect()
            })
            .collect();
        let n = model.dim();
        Self {
            model,
            scheme,
            dt,
            forcing,
            f0: vec![0.0; n],
            f1: vec![0.0; n],
            trial: vec![0.0; n],
            kick: vec![0.0; n],
        }
    }

    pub fn model(&self) -> &BilinearModel {
        self.model
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `x` by one step given Brownian increments `dW^k` (one per
    /// forcing vector, variance `dt`).
    pub fn step(&mut self, x: &mut [f64], increments: &[f64]) {
        debug_assert_eq!(increments.len(), self.forcing.len());
        self.kick.iter_mut().for_each(|k| *k = 0.0);
        for (f, dw) in self.forcing.iter().zip(increments) {
            for &(i, v) in f {
                self.kick[i] += v * dw;
            }
        }
        self.model.drift_into(x, &mut self.f0);
        match self.scheme {
            Scheme::EulerMaruyama => {
                for i in 0..x.len() {
                    x[i] += self.dt * self.f0[i] + self.kick[i];
                }
            }
            Scheme::DriftHeun => {
                for i in 0..x.len() {
                    self.trial[i] = x[i] + self.dt * self.f0[i] + self.kick[i];
                }
                self.model.drift_into(&self.trial, &mut self.f1);
                for i in 0..x.len() {
                    x[i] += 0.5 * self.dt * (self.f0[i] + self.f1[i]) + self.kick[i];
                }
            }
        }
    }
}

pub(crate) fn is_runaway(x: &[f64]) -> bool {
    let sq: f64 = x.iter().map(|v| v * v).sum();
    !sq.is_finite() || sq > RUNAWAY_NORM_SQ
}

/// Runs the SDE from `x0`, calling `visit(step, t, x)` after every step
/// (and once for `step = 0` before the first one). Stops early when the
/// visitor breaks.
pub fn simulate<F>(
    model: &BilinearModel,
    x0: &DVector<f64>,
    cfg: &IntegratorConfig,
    mut visit: F,
) -> Result<(), SdeError>
where
    F: FnMut(u64, f64, &[f64]) -> ControlFlow<()>,
{
    cfg.validate()?;
    if x0.len() != model.dim() {
        return Err(ModelError::DimensionMismatch {
            expected: model.dim(),
            got: x0.len(),
        }
        .into());
    }
    let mut stepper = Stepper::new(model, cfg.scheme, cfg.dt);
    let mut noise = NoiseSource::new(cfg.seed, model.forcing().len(), cfg.dt);
    let mut dw = vec![0.0; noise.count()];
    let mut x = x0.as_slice().to_vec();
    if visit(0, 0.0, &x).is_break() {
        return Ok(());
    }
    for step in 1..=cfg.total_steps() {
        noise.next_increments(&mut dw);
        stepper.step(&mut x, &dw);
        let t = step as f64 * cfg.dt;
        if is_runaway(&x) {
            return Err(SdeError::BlowUp { time: t });
        }
        if visit(step, t, &x).is_break() {
            break;
        }
    }
    Ok(())
}

/// Sampled path of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub dt: f64,
    /// Steps between consecutive samples.
    pub stride: usize,
    pub fingerprint: String,
    pub seed: u64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, |s| s.len())
    }
}

/// Integrates the model and records every `cfg.record_every`-th state,
/// starting with `x0` at `t = 0`.
pub fn integrate(
    model: &BilinearModel,
    x0: &DVector<f64>,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, SdeError> {
    let stride = cfg.record_every as u64;
    let mut times = Vec::new();
    let mut states = Vec::new();
    simulate(model, x0, cfg, |step, t, x| {
        if step % stride == 0 {
            times.push(t);
            states.push(DVector::from_column_slice(x));
        }
        ControlFlow::Continue(())
    })?;
    Ok(Trajectory {
        times,
        states,
        dt: cfg.dt,
        stride: cfg.record_every,
        fingerprint: model.fingerprint(),
        seed: cfg.seed,
    })
}

/// Post-burn-in states, one every `stride` steps.
pub fn stationary_samples(
    model: &BilinearModel,
    x0: &DVector<f64>,
    cfg: &IntegratorConfig,
    stride: usize,
) -> Result<Vec<DVector<f64>>, SdeError> {
    if stride == 0 {
        return Err(SdeError::InvalidConfig("stride must be >= 1".into()));
    }
    let start = cfg.burn_in_steps();
    let mut out = Vec::new();
    simulate(model, x0, cfg, |step, _, x| {
        if step > start && (step - start).is_multiple_of(stride as u64) {
            out.push(DVector::from_column_slice(x));
        }
        ControlFlow::Continue(())
    })?;
    Ok(out)
}

/// Stationary Ito energy budget
/// `eps E<x, Ax> = 1/2 s(eps)^2 sum_k |X_k|^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBalance {
    /// Sample mean of `<x, Ax>`.
    pub mean_energy: f64,
    /// `eps` times `mean_energy`.
    pub mean_dissipation: f64,
    /// `1/2 s(eps)^2 sum_k |X_k|^2`.
    pub forcing_input: f64,
    /// Relative mismatch `|dissipation - input| / input` (absolute when the
    /// input vanishes).
    pub residual: f64,
    pub samples: usize,
}

impl EnergyBalance {
    /// Value of `E<x, Ax>` the budget predicts (`1/2 sum |X_k|^2` in the
    /// fluctuation-dissipation form).
    pub fn predicted_energy(&self, epsilon: f64) -> f64 {
        if epsilon > 0.0 {
            self.forcing_input / epsilon
        } else {
            f64::NAN
        }
    }
}

pub fn energy_balance(
    model: &BilinearModel,
    samples: &[DVector<f64>],
) -> Result<EnergyBalance, SdeError> {
    if samples.is_empty() {
        return Err(SdeError::InvalidConfig("energy balance needs at least one sample".into()));
    }
    let a = model.damping();
    let mean_energy =
        samples.iter().map(|x| x.dot(&(a * x))).sum::<f64>() / samples.len() as f64;
    let s = model.noise_scale();
    let forcing_input =
        0.5 * s * s * model.forcing().iter().map(|f| f.vector.norm_squared()).sum::<f64>();
    let mean_dissipation = model.epsilon() * mean_energy;
    let residual = if forcing_input > 0.0 {
        (mean_dissipation - forcing_input).abs() / forcing_input
    } else {
        mean_dissipation.abs()
    };
    Ok(EnergyBalance {
        mean_energy,
        mean_dissipation,
        forcing_input,
        residual,
        samples: samples.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_l96, Scaling};

    fn ou(eps: f64, q: f64) -> BilinearModel {
        BilinearModel::ornstein_uhlenbeck(&[1.0, 2.0], &[q, q], eps, Scaling::FluctuationDissipation)
            .unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(IntegratorConfig::new(0.0, 1.0, 0).validate().is_err());
        assert!(IntegratorConfig::new(1e-3, 1.0, 0).with_burn_in(1.0).validate().is_err());
        assert!(IntegratorConfig::new(1e-3, 1.0, 0).validate().is_ok());
    }

    #[test]
    fn deterministic_decay_without_forcing() {
        let m = ou(0.5, 0.0);
        let cfg = IntegratorConfig::new(1e-4, 2.0, 0);
        let x0 = DVector::from_vec(vec![1.0, 0.0]);
        let traj = integrate(&m, &x0, &cfg).unwrap();
        let last = traj.states.last().unwrap();
        assert!((last[0] - (-0.5_f64 * 2.0).exp()).abs() < 1e-4);
        assert_eq!(traj.len() as u64, cfg.total_steps() + 1);
    }

    #[test]
    fn stride_one_is_the_trajectory_tail() {
        let m = ou(0.1, 1.0);
        let cfg = IntegratorConfig::new(1e-2, 5.0, 3);
        let x0 = DVector::zeros(2);
        let traj = integrate(&m, &x0, &cfg).unwrap();
        let tail = stationary_samples(&m, &x0, &cfg, 1).unwrap();
        let skip = cfg.burn_in_steps() as usize + 1;
        assert_eq!(&traj.states[skip..], &tail[..]);
    }

    #[test]
    fn identical_inputs_are_bit_identical() {
        let m = build_l96(7, &[1.0, 1.0], 0.1, Scaling::FluctuationDissipation).unwrap();
        let cfg = IntegratorConfig::new(1e-3, 2.0, 99).with_scheme(Scheme::DriftHeun);
        let x0 = DVector::from_element(7, 0.3);
        assert_eq!(integrate(&m, &x0, &cfg).unwrap(), integrate(&m, &x0, &cfg).unwrap());
        let other = integrate(&m, &x0, &cfg.clone().with_seed(100)).unwrap();
        assert_ne!(integrate(&m, &x0, &cfg).unwrap().states, other.states);
    }

    #[test]
    fn blow_up_is_reported_with_time() {
        // huge initial energy with an absurd step makes the quadratic drift explode
        let m = build_l96(7, &[1.0], 0.0, Scaling::FluctuationDissipation).unwrap();
        let cfg = IntegratorConfig::new(0.5, 100.0, 0);
        let x0 = DVector::from_fn(7, |i, _| 10.0 * (i as f64 + 1.0));
        match integrate(&m, &x0, &cfg) {
            Err(SdeError::BlowUp { time }) => assert!(time > 0.0 && time <= 100.0),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn energy_balance_edge_cases() {
        let m = ou(0.1, 0.0);
        let b = energy_balance(&m, &[DVector::zeros(2)]).unwrap();
        assert_eq!(b.forcing_input, 0.0);
        assert_eq!(b.residual, 0.0);
        assert!(energy_balance(&m, &[]).is_err());
    }

    #[test]
    fn default_dt_respects_damping_and_scale() {
        let m = ou(100.0, 1.0);
        assert!((default_dt(&m, 1.0) - 0.1 / 200.0).abs() < 1e-15);
        let m = ou(0.1, 1.0);
        assert_eq!(default_dt(&m, 1.0), 1e-3);
        assert_eq!(default_dt(&m, 100.0), 1e-4);
    }
}
