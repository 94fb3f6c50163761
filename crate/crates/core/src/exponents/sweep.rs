//! Sweeps of the top exponent over the damping strength.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::{top_exponent, ExponentError, ExponentEstimate};
use crate::models::BilinearModel;
use crate::projective::{qr_spectrum, SpectrumOptions};
use crate::sde::IntegratorConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub n_seeds: usize,
    /// Run the full QR spectrum at every epsilon so that each row carries a
    /// measured `lambda_Sigma`. Otherwise only the top exponent is computed.
    pub full_spectrum: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub lambda1: ExponentEstimate,
    /// `lambda1 / epsilon`.
    pub ratio: f64,
    pub ratio_stderr: f64,
    /// Measured sum of all exponents, when the full spectrum was run.
    pub lambda_sum: Option<ExponentEstimate>,
    pub minus_eps_tr_a: f64,
}

impl SweepRow {
    /// Relative deviation of the measured exponent sum from `-eps tr A`.
    pub fn lambda_sum_rel_error(&self) -> Option<f64> {
        self.lambda_sum
            .as_ref()
            .map(|s| ((s.value - self.minus_eps_tr_a) / self.minus_eps_tr_a).abs())
    }
}

/// Ratio at the smallest epsilon minus ratio at the largest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub difference: f64,
    pub stderr: f64,
}

impl Trend {
    /// Difference in units of its standard error (infinite when the error is 0).
    pub fn sigmas(&self) -> f64 {
        if self.stderr > 0.0 {
            self.difference / self.stderr
        } else if self.difference == 0.0 {
            0.0
        } else {
            self.difference.signum() * f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub trend: Trend,
}

impl SweepReport {
    /// Assembles a report from rows ordered by decreasing epsilon.
    pub fn from_rows(rows: Vec<SweepRow>) -> Result<Self, ExponentError> {
        if rows.is_empty() {
            return Err(ExponentError::InvalidArgument("empty sweep".into()));
        }
        let (first, last) = (&rows[0], &rows[rows.len() - 1]);
        let trend = Trend {
            difference: last.ratio - first.ratio,
            stderr: first.ratio_stderr.hypot(last.ratio_stderr),
        };
        Ok(Self { rows, trend })
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "epsilon,lambda1,stderr,ratio,lambda_sum,minus_eps_trA")?;
        for r in &self.rows {
            let sum = r.lambda_sum.as_ref().map_or(String::new(), |s| s.value.to_string());
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.epsilon, r.lambda1.value, r.lambda1.stderr, r.ratio, sum, r.minus_eps_tr_a
            )?;
        }
        Ok(())
    }
}

/// Runs the template model at every epsilon in `eps_list` (positive, strictly
/// descending) with the same integrator settings.
pub fn epsilon_sweep(
    template: &BilinearModel,
    eps_list: &[f64],
    cfg: &IntegratorConfig,
    opts: SweepOptions,
) -> Result<SweepReport, ExponentError> {
    if eps_list.is_empty() {
        return Err(ExponentError::InvalidArgument("empty epsilon list".into()));
    }
    if eps_list.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(ExponentError::InvalidArgument("epsilon values must be positive".into()));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(ExponentError::InvalidArgument(
            "epsilon values must be strictly descending".into(),
        ));
    }
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let model = template.with_epsilon(eps).map_err(crate::projective::ProjectiveError::from)?;
        let (lambda1, lambda_sum) = if opts.full_spectrum {
            let so = SpectrumOptions::new(model.dim(), opts.n_seeds);
            let mut rep = qr_spectrum(&model, None, cfg, &so)?;
            (rep.exponents.swap_remove(0), rep.lambda_sum)
        } else {
            (top_exponent(&model, cfg, opts.n_seeds)?, None)
        };
        rows.push(SweepRow {
            epsilon: eps,
            ratio: lambda1.value / eps,
            ratio_stderr: lambda1.stderr / eps,
            lambda1,
            lambda_sum,
            minus_eps_tr_a: -eps * model.trace_damping(),
        });
    }
    SweepReport::from_rows(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Scaling;

    #[test]
    fn rejects_unsorted_or_nonpositive() {
        let m = BilinearModel::ornstein_uhlenbeck(&[1.0], &[1.0], 0.1, Scaling::Unscaled).unwrap();
        let cfg = IntegratorConfig::new(1e-2, 1.0, 0);
        let opts = SweepOptions { n_seeds: 1, full_spectrum: false };
        for bad in [&[0.1, 0.2][..], &[0.1, -0.1], &[]] {
            assert!(epsilon_sweep(&m, bad, &cfg, opts).is_err());
        }
    }

    #[test]
    fn ou_ratio_is_flat() {
        let m = BilinearModel::ornstein_uhlenbeck(&[1.0, 2.0], &[1.0, 1.0], 1.0, Scaling::Unscaled)
            .unwrap();
        let cfg = IntegratorConfig::new(1e-3, 60.0, 0).with_burn_in(10.0);
        let opts = SweepOptions { n_seeds: 2, full_spectrum: true };
        let rep = epsilon_sweep(&m, &[0.5, 0.2], &cfg, opts).unwrap();
        for r in &rep.rows {
            assert!((r.ratio + 1.0).abs() < 5e-3, "{r:?}");
            assert!(r.lambda_sum_rel_error().unwrap() < 1e-3);
        }
        assert!(rep.trend.difference.abs() < 5e-3);
        let mut csv = Vec::new();
        rep.write_csv(&mut csv).unwrap();
        assert!(String::from_utf8(csv).unwrap().starts_with("epsilon,lambda1,stderr,ratio,lambda_sum,minus_eps_trA\n0.5,"));
    }
}
