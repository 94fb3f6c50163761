//! Galerkin truncation of the stochastic 2D Navier-Stokes equations in
//! vorticity form,
//!
//! ```text
//! dw_k = (B_k(w, w) - eps |k|_r^2 w_k) dt + s(eps) dW^k,
//! B_k(w, w) = 1/2 sum_{j + l = k} c_{j,l} w_j w_l,
//! ```
//!
//! over the truncated lattice with the reality constraint `w_{-k} = conj(w_k)`.
//!
//! Real chart: the upper half-lattice (`k1 > 0`, or `k1 = 0, k2 > 0`) is
//! listed in lattice order and mode number `h` occupies coordinates
//! `2h = Re w_k` and `2h + 1 = Im w_k`. The state dimension is therefore
//! `(2N + 1)^2 - 1`, the same as the number of complex lattice modes.
//! Enstrophy `sum_{all k} |w_k|^2` equals twice the Euclidean norm squared of
//! the real state.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::lattice::{structure_coefficient, TruncatedLattice, Wavevector};
use super::{BilinearForm, BilinearModel, ForcingVector, ModelError, ModelKind, Scaling};
use crate::rational::{format_rational, ratio, serde_rational, to_f64};

/// A forced Fourier mode with noise amplitudes `alpha_k` (real part) and
/// `beta_k` (imaginary part).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForcedMode {
    pub k: Wavevector,
    #[serde(with = "serde_rational")]
    pub alpha: BigRational,
    #[serde(with = "serde_rational")]
    pub beta: BigRational,
}

impl ForcedMode {
    pub fn unit(k: Wavevector) -> Self {
        Self {
            k,
            alpha: ratio(1, 1),
            beta: ratio(1, 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GnseConfig {
    /// Truncation `N`.
    pub truncation: usize,
    /// Aspect ratio `r` of the torus `[0, 2pi) x [0, 2pi/r)`.
    #[serde(with = "serde_rational")]
    pub aspect: BigRational,
    /// Forced modes. Listing one of `k`, `-k` is enough; the forced set is
    /// closed under negation.
    pub forced: Vec<ForcedMode>,
}

impl GnseConfig {
    pub fn new(truncation: usize, aspect: BigRational, forced: Vec<ForcedMode>) -> Self {
        Self {
            truncation,
            aspect,
            forced,
        }
    }

    pub fn lattice(&self) -> TruncatedLattice {
        TruncatedLattice::new(self.truncation)
    }

    /// Checks structural invariants (truncation, aspect ratio, forced modes
    /// inside the lattice, `alpha = 0 <=> beta = 0`, consistent amplitudes
    /// for `k` and `-k`). An empty forced set is allowed here; the model
    /// builder rejects it.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.truncation < 2 {
            return Err(ModelError::TooSmall {
                what: "GNSE truncation N",
                min: 2,
                got: self.truncation,
            });
        }
        if !self.aspect.is_positive() {
            return Err(ModelError::InvalidAspectRatio(format_rational(&self.aspect)));
        }
        let lattice = self.lattice();
        for m in &self.forced {
            if !lattice.contains(m.k) {
                return Err(ModelError::InvalidForcedMode(format!(
                    "{} is not in the truncated lattice",
                    m.k
                )));
            }
            if m.alpha.is_zero() != m.beta.is_zero() {
                return Err(ModelError::InvalidForcedMode(format!(
                    "{}: alpha and beta must vanish together",
                    m.k
                )));
            }
        }
        for (i, a) in self.forced.iter().enumerate() {
            for b in &self.forced[i + 1..] {
                let same = a.k == b.k;
                let mirrored = a.k == -b.k;
                if (same || mirrored)
                    && (a.alpha.abs() != b.alpha.abs() || a.beta.abs() != b.beta.abs())
                {
                    return Err(ModelError::InvalidForcedMode(format!(
                        "{} listed twice with different amplitudes",
                        a.k
                    )));
                }
            }
        }
        Ok(())
    }

    /// The driving set `Z^0`, closed under `k -> -k`.
    pub fn forced_set(&self) -> BTreeSet<Wavevector> {
        self.forced
            .iter()
            .filter(|m| !m.alpha.is_zero())
            .flat_map(|m| [m.k, -m.k])
            .collect()
    }

    fn amplitudes(&self, k: Wavevector) -> Option<(&BigRational, &BigRational)> {
        self.forced
            .iter()
            .filter(|m| !m.alpha.is_zero())
            .find(|m| m.k == k)
            .or_else(|| self.forced.iter().filter(|m| !m.alpha.is_zero()).find(|m| m.k == -k))
            .map(|m| (&m.alpha, &m.beta))
    }
}

/// Builds the real-chart Galerkin Navier-Stokes model. `A` is diagonal with
/// entries `|k|_r^2` (twice per mode) and each forced mode contributes the
/// two forcing vectors `alpha_k e_{Re k}` and `beta_k e_{Im k}`.
pub fn build_gnse(
    cfg: &GnseConfig,
    epsilon: f64,
    scaling: Scaling,
) -> Result<BilinearModel, ModelError> {
    cfg.validate()?;
    let z0 = cfg.forced_set();
    if z0.is_empty() {
        return Err(ModelError::NoForcing);
    }
    let lattice = cfg.lattice();
    let chart = RealChart::new(&lattice);
    let r = &cfg.aspect;
    let n = 2 * chart.half.len();

    let mut entries = Vec::new();
    for (h, &k) in chart.half.iter().enumerate() {
        let (re_row, im_row) = (2 * h, 2 * h + 1);
        for &j in lattice.modes() {
            let l = k - j;
            if !lattice.contains(l) {
                continue;
            }
            let c = structure_coefficient(j, l, r);
            if c.is_zero() {
                continue;
            }
            let half_c = c * ratio(1, 2);
            let (p, sp) = chart.locate(j);
            let (q, sq) = chart.locate(l);
            let (ap, bp, aq, bq) = (2 * p, 2 * p + 1, 2 * q, 2 * q + 1);
            // (a_p + i sp b_p)(a_q + i sq b_q)
            entries.push((re_row, ap, aq, half_c.clone()));
            entries.push((re_row, bp, bq, -half_c.clone() * ratio(sp * sq, 1)));
            entries.push((im_row, bp, aq, half_c.clone() * ratio(sp, 1)));
            entries.push((im_row, ap, bq, half_c * ratio(sq, 1)));
        }
    }
    let form = BilinearForm::from_exact(n, entries)?;

    let mut diag = DVector::zeros(n);
    for (h, &k) in chart.half.iter().enumerate() {
        let v = to_f64(&k.norm_sq_r(r));
        diag[2 * h] = v;
        diag[2 * h + 1] = v;
    }

    let mut forcing = Vec::new();
    for (h, &k) in chart.half.iter().enumerate() {
        if !z0.contains(&k) {
            continue;
        }
        let (alpha, beta) = cfg.amplitudes(k).expect("forced set built from listed modes");
        let mut re = DVector::zeros(n);
        re[2 * h] = to_f64(alpha);
        let mut im = DVector::zeros(n);
        im[2 * h + 1] = to_f64(beta);
        forcing.push(ForcingVector {
            label: format!("Re w{k}"),
            vector: re,
        });
        forcing.push(ForcingVector {
            label: format!("Im w{k}"),
            vector: im,
        });
    }

    BilinearModel::new(
        ModelKind::Gnse(cfg.clone()),
        form,
        DMatrix::from_diagonal(&diag),
        forcing,
        epsilon,
        scaling,
    )
}

struct RealChart {
    half: Vec<Wavevector>,
    lattice: TruncatedLattice,
    half_index: Vec<usize>,
}

impl RealChart {
    fn new(lattice: &TruncatedLattice) -> Self {
        let half = lattice.half_modes();
        let mut half_index = vec![usize::MAX; lattice.len()];
        for (h, &k) in half.iter().enumerate() {
            half_index[lattice.index_of(k).unwrap()] = h;
        }
        Self {
            half,
            lattice: lattice.clone(),
            half_index,
        }
    }

    /// Half-lattice slot of `k` and the sign of the imaginary part:
    /// `w_k = a_h + i sign b_h`.
    fn locate(&self, k: Wavevector) -> (usize, i64) {
        if k.in_upper_half() {
            (self.half_index[self.lattice.index_of(k).unwrap()], 1)
        } else {
            (self.half_index[self.lattice.index_of(-k).unwrap()], -1)
        }
    }
}
