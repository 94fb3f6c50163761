//! The projective process `(x_t, v_t)` on the sphere bundle.
//!
//! With additive noise the linearization `D phi` only depends on the base
//! path, so tangent vectors are advanced by the drift Jacobian on the same
//! time grid as the base SDE. Each tangent step is an explicit midpoint step
//! of the linear system `v' = M v` with `M` frozen at the midpoint of the
//! base step.

mod shear;
mod spectrum;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{BilinearModel, ModelError};
use crate::sde::{is_runaway, GaussianStream, IntegratorConfig, NoiseSource, Scheme, SdeError, Stepper};

pub use shear::{deterministic_flow, shear_bound_check, ShearReport, ShearSample};
pub use spectrum::{qr_spectrum, spectrum_run, SpectrumOptions, SpectrumReport, SpectrumState};

/// Unit tangent vectors must stay within this distance of the sphere.
pub const UNIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProjectiveError {
    #[error("tangent vector is zero")]
    ZeroTangent,
    #[error("tangent vector is not unit length (|v| = {0})")]
    NotUnit(f64),
    #[error("need 1 <= m_vectors <= n = {n}, got {m}")]
    InvalidVectorCount { m: usize, n: usize },
    #[error("tangent frame degenerated at t = {time}")]
    FrameDegenerate { time: f64 },
    #[error("{0} requires eps = 0, model has eps = {1}")]
    NonzeroEpsilon(&'static str, f64),
    #[error("initial state must be nonzero")]
    ZeroInitialState,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Sde(#[from] SdeError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Base point, unit tangent direction and the accumulated `log |D phi v|`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveState {
    pub x: DVector<f64>,
    pub v: DVector<f64>,
    pub log_growth: f64,
}

impl ProjectiveState {
    pub fn new(x: DVector<f64>, v: DVector<f64>) -> Result<Self, ProjectiveError> {
        if x.len() != v.len() {
            return Err(ModelError::DimensionMismatch {
                expected: x.len(),
                got: v.len(),
            }
            .into());
        }
        let norm = v.norm();
        if norm == 0.0 {
            return Err(ProjectiveError::ZeroTangent);
        }
        Ok(Self {
            x,
            v: v / norm,
            log_growth: 0.0,
        })
    }
}

/// Lift of the drift to the sphere bundle:
/// `(X_0(x), (I - v v^T) grad X_0(x) v)`.
pub fn lift_field(
    model: &BilinearModel,
    x: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>), ProjectiveError> {
    let norm = v.norm();
    if norm == 0.0 {
        return Err(ProjectiveError::ZeroTangent);
    }
    if (norm - 1.0).abs() > UNIT_TOLERANCE {
        return Err(ProjectiveError::NotUnit(norm));
    }
    let base = model.drift(x)?;
    let m = model.drift_jacobian(x)?;
    if v.len() != x.len() {
        return Err(ModelError::DimensionMismatch {
            expected: x.len(),
            got: v.len(),
        }
        .into());
    }
    let mv = &m * v;
    let sphere = &mv - v * v.dot(&mv);
    Ok((base, sphere))
}

/// A constant forcing field lifts to `(X_k, 0)`.
pub fn lift_constant(field: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    (field.clone(), DVector::zeros(field.len()))
}

/// Furstenberg-Khasminskii integrands at `(x, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FkIntegrands {
    /// `div X_0(x)`; equals `-eps tr A` for Euler-like models.
    pub q: f64,
    /// Divergence of the lifted drift on the sphere bundle.
    pub q_tilde: f64,
    /// Sphere part of `q_tilde`: `tr M - n <v, M v>` with `M = grad X_0(x)`.
    pub sphere_divergence: f64,
}

pub fn fk_integrands(
    model: &BilinearModel,
    x: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<FkIntegrands, ProjectiveError> {
    if v.len() != model.dim() {
        return Err(ModelError::DimensionMismatch {
            expected: model.dim(),
            got: v.len(),
        }
        .into());
    }
    let norm = v.norm();
    if (norm - 1.0).abs() > UNIT_TOLERANCE {
        return Err(ProjectiveError::NotUnit(norm));
    }
    let m = model.drift_jacobian(x)?;
    let q = m.trace();
    let sphere_divergence = sphere_divergence(&m, v);
    Ok(FkIntegrands {
        q,
        q_tilde: q + sphere_divergence,
        sphere_divergence,
    })
}

/// Divergence on `S^{n-1}` of `v -> (I - v v^T) M v`, in closed form.
pub fn sphere_divergence(m: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    m.trace() - m.nrows() as f64 * v.dot(&(m * v))
}

/// Scratch space for advancing tangent vectors along a base path.
#[derive(Debug, Clone)]
pub(crate) struct TangentStepper {
    jac: DMatrix<f64>,
    mid: Vec<f64>,
    mv: DMatrix<f64>,
    half: DMatrix<f64>,
}

impl TangentStepper {
    pub(crate) fn new(n: usize, m: usize) -> Self {
        Self {
            jac: DMatrix::zeros(n, n),
            mid: vec![0.0; n],
            mv: DMatrix::zeros(n, m),
            half: DMatrix::zeros(n, m),
        }
    }

    /// Freezes `M` at the midpoint of the base step `x_prev -> x_next`.
    pub(crate) fn freeze(&mut self, model: &BilinearModel, x_prev: &[f64], x_next: &[f64]) {
        for ((m, a), b) in self.mid.iter_mut().zip(x_prev).zip(x_next) {
            *m = 0.5 * (a + b);
        }
        model.jacobian_into(&self.mid, &mut self.jac);
    }

    /// `F <- F + dt M (F + dt/2 M F)` for every column of `frame`.
    pub(crate) fn advance(&mut self, frame: &mut DMatrix<f64>, dt: f64) {
        self.mv.gemm(1.0, &self.jac, frame, 0.0);
        self.half.copy_from(frame);
        self.half.zip_apply(&self.mv, |h, mv| *h += 0.5 * dt * mv);
        frame.gemm(dt, &self.jac, &self.half, 1.0);
    }
}

/// One step of the projective process. `increments` are the Brownian
/// increments `dW^k` driving the base step.
pub fn step_projective(
    model: &BilinearModel,
    state: &ProjectiveState,
    dt: f64,
    increments: &[f64],
    scheme: Scheme,
) -> Result<ProjectiveState, ProjectiveError> {
    if increments.len() != model.forcing().len() {
        return Err(ProjectiveError::InvalidArgument(format!(
            "expected {} noise increments, got {}",
            model.forcing().len(),
            increments.len()
        )));
    }
    let n = model.dim();
    if state.x.len() != n || state.v.len() != n {
        return Err(ModelError::DimensionMismatch {
            expected: n,
            got: state.x.len().max(state.v.len()),
        }
        .into());
    }
    let mut stepper = Stepper::new(model, scheme, dt);
    let mut x = state.x.as_slice().to_vec();
    stepper.step(&mut x, increments);
    if is_runaway(&x) {
        return Err(SdeError::BlowUp { time: dt }.into());
    }
    let mut tangent = TangentStepper::new(n, 1);
    tangent.freeze(model, state.x.as_slice(), &x);
    let mut frame = DMatrix::from_column_slice(n, 1, state.v.as_slice());
    tangent.advance(&mut frame, dt);
    let len = frame.norm();
    if !(len.is_finite() && len > 0.0) {
        return Err(SdeError::BlowUp { time: dt }.into());
    }
    Ok(ProjectiveState {
        x: DVector::from_vec(x),
        v: DVector::from_column_slice(frame.as_slice()) / len,
        log_growth: state.log_growth + len.ln(),
    })
}

/// Options for a single top-exponent run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TangentRunOptions {
    /// Normalize the tangent vector every this many steps.
    pub renormalize_every: usize,
    /// Record the running exponent every this many steps after burn-in.
    pub series_every: Option<usize>,
}

impl Default for TangentRunOptions {
    fn default() -> Self {
        Self {
            renormalize_every: 1,
            series_every: None,
        }
    }
}

/// Result of one projective run.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentRun {
    /// `log |D phi v|` accumulated over the post-burn-in span.
    pub log_growth: f64,
    pub measured_time: f64,
    pub final_state: ProjectiveState,
    /// `(t, running exponent)` samples when requested.
    pub series: Vec<(f64, f64)>,
}

impl TangentRun {
    pub fn exponent(&self) -> f64 {
        self.log_growth / self.measured_time
    }
}

/// Runs the base SDE and one tangent vector from `(x0, v0)`. Log growth is
/// counted from the end of burn-in.
pub fn run_tangent(
    model: &BilinearModel,
    x0: &DVector<f64>,
    v0: &DVector<f64>,
    cfg: &IntegratorConfig,
    opts: TangentRunOptions,
) -> Result<TangentRun, ProjectiveError> {
    cfg.validate()?;
    let n = model.dim();
    if x0.len() != n || v0.len() != n {
        return Err(ModelError::DimensionMismatch {
            expected: n,
            got: if x0.len() != n { x0.len() } else { v0.len() },
        }
        .into());
    }
    if opts.renormalize_every == 0 {
        return Err(ProjectiveError::InvalidArgument("renormalize_every must be >= 1".into()));
    }
    let v_norm = v0.norm();
    if v_norm == 0.0 {
        return Err(ProjectiveError::ZeroTangent);
    }
    let mut stepper = Stepper::new(model, cfg.scheme, cfg.dt);
    let mut noise = NoiseSource::new(cfg.seed, model.forcing().len(), cfg.dt);
    let mut dw = vec![0.0; noise.count()];
    let mut tangent = TangentStepper::new(n, 1);
    let mut x = x0.as_slice().to_vec();
    let mut x_prev = x.clone();
    let mut frame = DMatrix::from_column_slice(n, 1, v0.as_slice()) / v_norm;
    let mut log_growth = 0.0;
    let burn = cfg.burn_in_steps();
    let total = cfg.total_steps();
    let mut series = Vec::new();
    let mut since_norm = 0usize;

    for step in 1..=total {
        x_prev.copy_from_slice(&x);
        noise.next_increments(&mut dw);
        stepper.step(&mut x, &dw);
        let t = step as f64 * cfg.dt;
        if is_runaway(&x) {
            return Err(SdeError::BlowUp { time: t }.into());
        }
        tangent.freeze(model, &x_prev, &x);
        tangent.advance(&mut frame, cfg.dt);
        since_norm += 1;
        if since_norm == opts.renormalize_every || step == burn || step == total {
            since_norm = 0;
            let len = frame.norm();
            if !(len.is_finite() && len > 0.0) {
                return Err(SdeError::BlowUp { time: t }.into());
            }
            frame /= len;
            if step > burn {
                log_growth += len.ln();
            }
        }
        if let Some(every) = opts.series_every {
            if step > burn && (step - burn).is_multiple_of(every as u64) && since_norm == 0 {
                series.push((t, log_growth / ((step - burn) as f64 * cfg.dt)));
            }
        }
    }
    let measured_time = (total - burn) as f64 * cfg.dt;
    Ok(TangentRun {
        log_growth,
        measured_time,
        final_state: ProjectiveState {
            x: DVector::from_vec(x),
            v: DVector::from_column_slice(frame.as_slice()),
            log_growth,
        },
        series,
    })
}

/// Deterministic generic initial data for run `seed`: `x0` Gaussian with
/// per-coordinate standard deviation `x_scale / sqrt(n)`, `v0` uniform on the
/// sphere. Drawn from streams disjoint from the noise streams.
pub fn initial_condition(n: usize, seed: u64, x_scale: f64) -> (DVector<f64>, DVector<f64>) {
    let mut xs = GaussianStream::new(seed, u64::MAX);
    let mut vs = GaussianStream::new(seed, u64::MAX - 1);
    let sd = x_scale / (n as f64).sqrt();
    let x0 = DVector::from_fn(n, |_, _| sd * xs.next_normal());
    let v = DVector::from_fn(n, |_, _| vs.next_normal());
    let norm = v.norm();
    (x0, v / norm)
}

/// Random orthonormal `n x m` frame for run `seed`.
pub fn initial_frame(n: usize, m: usize, seed: u64) -> DMatrix<f64> {
    let mut s = GaussianStream::new(seed, u64::MAX - 2);
    let g = DMatrix::from_fn(n, m, |_, _| s.next_normal());
    g.qr().q()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_l96, Scaling};
    use approx::assert_relative_eq;

    fn ou() -> BilinearModel {
        BilinearModel::ornstein_uhlenbeck(&[1.0, 2.0], &[1.0, 1.0], 0.1, Scaling::FluctuationDissipation)
            .unwrap()
    }

    #[test]
    fn constant_fields_lift_with_zero_sphere_part() {
        let x = DVector::from_vec(vec![0.0, 3.0]);
        let (b, s) = lift_constant(&x);
        assert_eq!(b, x);
        assert_eq!(s, DVector::zeros(2));
    }

    #[test]
    fn eigendirection_is_a_projective_fixed_point() {
        let m = ou();
        let (_, s) =
            lift_field(&m, &DVector::from_vec(vec![0.4, -1.0]), &DVector::from_vec(vec![1.0, 0.0]))
                .unwrap();
        assert_eq!(s, DVector::zeros(2));
    }

    #[test]
    fn sphere_component_is_tangent() {
        let m = build_l96(7, &[1.0, 1.0], 0.1, Scaling::FluctuationDissipation).unwrap();
        let (x, v) = initial_condition(7, 5, 2.0);
        let (_, s) = lift_field(&m, &x, &v).unwrap();
        assert!(s.dot(&v).abs() < 1e-14);
        assert!(matches!(
            lift_field(&m, &x, &DVector::zeros(7)),
            Err(ProjectiveError::ZeroTangent)
        ));
        assert!(matches!(lift_field(&m, &x, &(v * 2.0)), Err(ProjectiveError::NotUnit(_))));
    }

    #[test]
    fn closed_form_sphere_divergence_examples() {
        let id = DMatrix::<f64>::identity(3, 3);
        let v = DVector::from_vec(vec![0.6, 0.0, 0.8]);
        assert_relative_eq!(sphere_divergence(&id, &v), 0.0, epsilon = 1e-15);
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.5]));
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        assert_relative_eq!(sphere_divergence(&m, &e1), -1.5);
        let skew = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, -2.0, -1.0, 0.0, 0.5, 2.0, -0.5, 0.0]);
        assert_relative_eq!(sphere_divergence(&skew, &v), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn fk_q_is_minus_eps_trace() {
        let m = build_l96(7, &[1.0, 1.0], 0.1, Scaling::FluctuationDissipation).unwrap();
        let (x, v) = initial_condition(7, 1, 3.0);
        let fk = fk_integrands(&m, &x, &v).unwrap();
        assert_relative_eq!(fk.q, -0.7, epsilon = 1e-12);
        assert_relative_eq!(fk.q_tilde, fk.q + fk.sphere_divergence);
    }

    #[test]
    fn step_keeps_unit_length_and_checks_noise_count() {
        let m = build_l96(7, &[1.0, 1.0], 0.1, Scaling::FluctuationDissipation).unwrap();
        let (x, v) = initial_condition(7, 2, 1.0);
        let s = ProjectiveState::new(x, v).unwrap();
        let next = step_projective(&m, &s, 1e-3, &[0.01, -0.02], Scheme::EulerMaruyama).unwrap();
        assert!((next.v.norm() - 1.0).abs() <= UNIT_TOLERANCE);
        assert!(step_projective(&m, &s, 1e-3, &[0.0], Scheme::EulerMaruyama).is_err());
    }

    #[test]
    fn eigendirection_decays_at_its_rate() {
        let m = ou();
        let cfg = IntegratorConfig::new(1e-3, 100.0, 4);
        let run = run_tangent(
            &m,
            &DVector::zeros(2),
            &DVector::from_vec(vec![0.0, 1.0]),
            &cfg,
            TangentRunOptions::default(),
        )
        .unwrap();
        assert_relative_eq!(run.exponent(), -0.2, epsilon = 1e-6);
    }

    #[test]
    fn generic_direction_decays_at_slowest_rate() {
        let m = ou();
        let cfg = IntegratorConfig::new(1e-3, 400.0, 4);
        let v0 = DVector::from_vec(vec![1.0, 1.0]).normalize();
        let run = run_tangent(&m, &DVector::zeros(2), &v0, &cfg, TangentRunOptions::default())
            .unwrap();
        assert_relative_eq!(run.exponent(), -0.1, epsilon = 1e-4);
    }

    #[test]
    fn renormalization_cadence_does_not_change_the_estimate() {
        let m = build_l96(7, &[1.0, 1.0], 0.1, Scaling::FluctuationDissipation).unwrap();
        let cfg = IntegratorConfig::new(1e-3, 50.0, 8);
        let (x0, v0) = initial_condition(7, 8, 1.0);
        let every = |k| {
            run_tangent(
                &m,
                &x0,
                &v0,
                &cfg,
                TangentRunOptions {
                    renormalize_every: k,
                    series_every: None,
                },
            )
            .unwrap()
            .exponent()
        };
        let (a, b) = (every(1), every(10));
        assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    }

    #[test]
    fn one_step_increment_converges_at_second_order() {
        // Smooth test data: no noise, L96 drift.
        let m = build_l96(7, &[1.0], 0.1, Scaling::FluctuationDissipation).unwrap();
        let (x0, v0) = initial_condition(7, 3, 2.0);
        let s = ProjectiveState::new(x0, v0).unwrap();
        // Exact reference from many tiny sub-steps over the same interval.
        let incr = |dt: f64, sub: usize| {
            let mut st = s.clone();
            for _ in 0..sub {
                st = step_projective(&m, &st, dt / sub as f64, &[0.0], Scheme::DriftHeun).unwrap();
            }
            st.log_growth
        };
        let h = 0.02;
        let reference = incr(h, 4096);
        let e1 = (incr(h, 1) - reference).abs();
        let e2 = (incr(h / 2.0, 1) - incr(h / 2.0, 2048)).abs();
        // local error O(dt^3) on the one-step increment, so halving dt
        // shrinks it by ~8; the increment itself changes by O(dt^2).
        assert!(e1 < 1e-4, "e1 = {e1}");
        assert!(e2 < e1 / 4.0, "e1 = {e1}, e2 = {e2}");
    }
}
