//! Leading Lyapunov exponents by periodic QR reorthonormalization of a
//! tangent frame.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{initial_condition, initial_frame, ProjectiveError, TangentStepper};
use crate::exponents::{ExcludedRun, ExponentEstimate, RunMeta};
use crate::models::{BilinearModel, ModelError};
use crate::sde::{is_runaway, IntegratorConfig, NoiseSource, SdeError, Stepper};

/// Base state, orthonormal frame of `m` tangent vectors and the accumulated
/// `log |R_ii|` per vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumState {
    pub x: DVector<f64>,
    pub frame: DMatrix<f64>,
    pub log_diag: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    pub m_vectors: usize,
    /// Steps between reorthonormalizations.
    pub reorth_every: usize,
    /// When `max|R_ii| / min|R_ii|` exceeds this after a QR, the
    /// reorthonormalization interval is halved.
    pub cond_trigger: f64,
    pub n_seeds: usize,
}

impl SpectrumOptions {
    pub fn new(m_vectors: usize, n_seeds: usize) -> Self {
        Self {
            m_vectors,
            reorth_every: 10,
            cond_trigger: 1e6,
            n_seeds,
        }
    }
}

/// One run: exponents in decreasing order of the QR diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRun {
    pub exponents: Vec<f64>,
    pub measured_time: f64,
    pub final_state: SpectrumState,
}

pub fn spectrum_run(
    model: &BilinearModel,
    x0: &DVector<f64>,
    cfg: &IntegratorConfig,
    opts: &SpectrumOptions,
) -> Result<SpectrumRun, ProjectiveError> {
    cfg.validate()?;
    let n = model.dim();
    let m = opts.m_vectors;
    if m == 0 || m > n {
        return Err(ProjectiveError::InvalidVectorCount { m, n });
    }
    if x0.len() != n {
        return Err(ModelError::DimensionMismatch {
            expected: n,
            got: x0.len(),
        }
        .into());
    }
    if opts.reorth_every == 0 {
        return Err(ProjectiveError::InvalidArgument("reorth_every must be >= 1".into()));
    }
    let mut stepper = Stepper::new(model, cfg.scheme, cfg.dt);
    let mut noise = NoiseSource::new(cfg.seed, model.forcing().len(), cfg.dt);
    let mut dw = vec![0.0; noise.count()];
    let mut tangent = TangentStepper::new(n, m);
    let mut x = x0.as_slice().to_vec();
    let mut x_prev = x.clone();
    let mut frame = initial_frame(n, m, cfg.seed);
    let mut log_diag = vec![0.0; m];
    let burn = cfg.burn_in_steps();
    let total = cfg.total_steps();
    let mut interval = opts.reorth_every;
    let mut since = 0usize;

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
        since += 1;
        if since >= interval || step == burn || step == total {
            since = 0;
            let qr = frame.clone().qr();
            let r = qr.r();
            let mut lo = f64::INFINITY;
            let mut hi = 0.0_f64;
            for i in 0..m {
                let d = r[(i, i)].abs();
                if !(d.is_finite() && d > 0.0) {
                    return Err(ProjectiveError::FrameDegenerate { time: t });
                }
                lo = lo.min(d);
                hi = hi.max(d);
                if step > burn {
                    log_diag[i] += d.ln();
                }
            }
            frame = qr.q();
            if hi / lo > opts.cond_trigger && interval > 1 {
                interval = (interval / 2).max(1);
            }
        }
    }
    let measured_time = (total - burn) as f64 * cfg.dt;
    Ok(SpectrumRun {
        exponents: log_diag.iter().map(|l| l / measured_time).collect(),
        measured_time,
        final_state: SpectrumState {
            x: DVector::from_vec(x),
            frame,
            log_diag,
        },
    })
}

/// Spectrum estimate across seeds `cfg.seed, cfg.seed + 1, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub exponents: Vec<ExponentEstimate>,
    /// Sum of all exponents, present when `m_vectors = n`.
    pub lambda_sum: Option<ExponentEstimate>,
    /// Theoretical `lambda_Sigma = -eps tr A`.
    pub minus_eps_tr_a: f64,
    pub excluded: Vec<ExcludedRun>,
}

impl SpectrumReport {
    /// Compact JSON `{exponents, stderr, lambda_sum, minus_eps_trA}`.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "exponents": self.exponents.iter().map(|e| e.value).collect::<Vec<_>>(),
            "stderr": self.exponents.iter().map(|e| e.stderr).collect::<Vec<_>>(),
            "lambda_sum": self.lambda_sum.as_ref().map(|e| e.value),
            "lambda_sum_stderr": self.lambda_sum.as_ref().map(|e| e.stderr),
            "minus_eps_trA": self.minus_eps_tr_a,
        })
    }
}

/// Runs [`spectrum_run`] for `opts.n_seeds` seeds in parallel. When `x0` is
/// `None` each run starts from its own generic initial condition. Runs that
/// blow up are excluded and listed; the call fails only if every run does.
pub fn qr_spectrum(
    model: &BilinearModel,
    x0: Option<&DVector<f64>>,
    cfg: &IntegratorConfig,
    opts: &SpectrumOptions,
) -> Result<SpectrumReport, ProjectiveError> {
    if opts.n_seeds == 0 {
        return Err(ProjectiveError::InvalidArgument("n_seeds must be >= 1".into()));
    }
    let n = model.dim();
    let results: Vec<(u64, Result<SpectrumRun, ProjectiveError>)> = (0..opts.n_seeds as u64)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.seed.wrapping_add(i);
            let run_cfg = cfg.clone().with_seed(seed);
            let start = match x0 {
                Some(x) => x.clone(),
                None => initial_condition(n, seed, 1.0).0,
            };
            (seed, spectrum_run(model, &start, &run_cfg, opts))
        })
        .collect();

    let mut runs = Vec::new();
    let mut excluded = Vec::new();
    let mut first_err = None;
    for (seed, r) in results {
        match r {
            Ok(run) => runs.push(run),
            Err(ProjectiveError::Sde(SdeError::BlowUp { time })) => {
                excluded.push(ExcludedRun { seed, time })
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    if let Some(e) = first_err {
        return Err(e);
    }
    if runs.is_empty() {
        let time = excluded.first().map_or(0.0, |e| e.time);
        return Err(SdeError::BlowUp { time }.into());
    }
    let meta = RunMeta::new(model, cfg, runs.len());
    let exponents = (0..opts.m_vectors)
        .map(|i| {
            let vals: Vec<f64> = runs.iter().map(|r| r.exponents[i]).collect();
            ExponentEstimate::from_seed_values(&vals, &meta, &excluded)
        })
        .collect();
    let lambda_sum = (opts.m_vectors == n).then(|| {
        let sums: Vec<f64> = runs.iter().map(|r| r.exponents.iter().sum()).collect();
        ExponentEstimate::from_seed_values(&sums, &meta, &excluded)
    });
    Ok(SpectrumReport {
        exponents,
        lambda_sum,
        minus_eps_tr_a: -model.epsilon() * model.trace_damping(),
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_l96, Scaling};

    #[test]
    fn vector_count_is_validated() {
        let m = build_l96(7, &[1.0], 0.1, Scaling::FluctuationDissipation).unwrap();
        let cfg = IntegratorConfig::new(1e-3, 1.0, 0);
        let x0 = DVector::zeros(7);
        for bad in [0, 8] {
            assert!(matches!(
                spectrum_run(&m, &x0, &cfg, &SpectrumOptions::new(bad, 1)),
                Err(ProjectiveError::InvalidVectorCount { .. })
            ));
        }
    }

    #[test]
    fn frame_stays_orthonormal() {
        let m = build_l96(7, &[1.0, 1.0], 0.1, Scaling::FluctuationDissipation).unwrap();
        let cfg = IntegratorConfig::new(1e-3, 5.0, 3);
        let (x0, _) = initial_condition(7, 3, 1.0);
        let run = spectrum_run(&m, &x0, &cfg, &SpectrumOptions::new(4, 1)).unwrap();
        let q = &run.final_state.frame;
        let gram = q.transpose() * q;
        assert!((gram - DMatrix::identity(4, 4)).amax() < 1e-9);
    }
}
