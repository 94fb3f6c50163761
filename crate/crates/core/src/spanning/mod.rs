//! Hormander-type spanning checks: the matrices `H^k`, their diagonal
//! commutators `D^k` for Galerkin Navier-Stokes, forcing propagation and
//! exact `sl` generation certificates.

mod distinct;
mod dk;
mod zn;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::liealg::{lie_closure, ClosureResult, LieError, RationalMatrix};
use crate::models::{
    l96_entries, structure_coefficient, BilinearModel, GnseConfig, ModelError, ModelKind,
    TruncatedLattice,
};
use crate::rational::format_rational;

pub use distinct::{
    check_distinctness, distinctness_scan, distinctness_sum, recheck_violation, triple_count, witness_for,
    DistinctnessReport, Quadruple,
};
pub use dk::{build_dk, build_dk_by_commutator, dk_closed_form, DkFamily};
pub use zn::{zn_propagation, ZnPropagation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpanningError {
    #[error("model has only floating-point coefficients; exact H^k need exact ones")]
    NoExactCoefficients,
    #[error("D^k requires a lattice-indexed (Galerkin Navier-Stokes) family")]
    NotLattice,
    #[error("D^k closed form disagrees with [H^k, H^-k] at k = {k}, i = {i}: {closed} vs {commutator}")]
    DkMismatch {
        k: String,
        i: String,
        closed: String,
        commutator: String,
    },
    #[error("distinctness check needs N >= 8, got {0}")]
    TruncationTooSmall(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lie(#[from] LieError),
}

/// How matrix indices map to model variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "chart", rename_all = "kebab-case")]
pub enum HkChart {
    /// Index `i` is coordinate `x_{i+1}`.
    Coordinates { n: usize },
    /// Index `i` is lattice mode `TruncatedLattice::mode(i)` (complex
    /// Fourier coefficient `w_k`).
    Lattice {
        truncation: usize,
        #[serde(with = "crate::rational::serde_rational")]
        aspect: BigRational,
    },
}

/// The matrices `H^k` with `(H^k)_{l,j} = d_j d_k B_l`, one per index `k`
/// of the chart, in chart order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HkFamily {
    pub fingerprint: String,
    pub chart: HkChart,
    pub matrices: Vec<RationalMatrix>,
}

impl HkFamily {
    pub fn dim(&self) -> usize {
        self.matrices.len()
    }

    /// Label of index `i`: `x3` or `(1,-2)`.
    pub fn label(&self, i: usize) -> String {
        match &self.chart {
            HkChart::Coordinates { .. } => format!("x{}", i + 1),
            HkChart::Lattice { truncation, .. } => TruncatedLattice::new(*truncation).mode(i).to_string(),
        }
    }

    /// Lorenz-96 family from the literal cyclic formula. Accepts `n >= 3`
    /// (for `n = 3` the nonlinearity cancels and every `H^k` is zero).
    pub fn lorenz96(n: usize) -> Result<Self, SpanningError> {
        if n < 3 {
            return Err(ModelError::TooSmall {
                what: "L96 dimension",
                min: 3,
                got: n,
            }
            .into());
        }
        let form = crate::models::BilinearForm::from_exact(n, l96_entries(n))?;
        let exact = form.exact_coeffs().expect("exact form");
        let terms = form.terms().iter().zip(exact).map(|(t, c)| (t.row, t.j, t.k, c.clone()));
        Ok(Self {
            fingerprint: format!("l96-n{n}"),
            chart: HkChart::Coordinates { n },
            matrices: coordinate_family(n, terms),
        })
    }

    /// Galerkin Navier-Stokes family in the complex lattice chart:
    /// `(H^k)_{l,j} = c_{j,k}` when `l = j + k` lies in the lattice.
    pub fn gnse(cfg: &GnseConfig) -> Result<Self, SpanningError> {
        cfg.validate()?;
        let lattice = cfg.lattice();
        let r = &cfg.aspect;
        let n = lattice.len();
        let mut matrices = Vec::with_capacity(n);
        for &k in lattice.modes() {
            let mut h = RationalMatrix::zeros(n);
            for (jx, &j) in lattice.modes().iter().enumerate() {
                if let Some(lx) = lattice.index_of(j + k) {
                    h.set(lx, jx, structure_coefficient(j, k, r));
                }
            }
            matrices.push(h);
        }
        Ok(Self {
            fingerprint: format!("gnse-N{}-r{}", cfg.truncation, format_rational(r)),
            chart: HkChart::Lattice {
                truncation: cfg.truncation,
                aspect: r.clone(),
            },
            matrices,
        })
    }
}

fn coordinate_family<I>(n: usize, terms: I) -> Vec<RationalMatrix>
where
    I: IntoIterator<Item = (usize, usize, usize, BigRational)>,
{
    let mut h = vec![RationalMatrix::zeros(n); n];
    for (row, a, b, c) in terms {
        if a == b {
            h[a].add_at(row, a, &c + &c);
        } else {
            h[a].add_at(row, b, c.clone());
            h[b].add_at(row, a, c);
        }
    }
    h
}

/// `H^k` family of a model. Galerkin Navier-Stokes models use the complex
/// lattice chart; every other model uses its own coordinates and needs
/// exact coefficients.
pub fn build_hk(model: &BilinearModel) -> Result<HkFamily, SpanningError> {
    if let ModelKind::Gnse(cfg) = model.kind() {
        let mut fam = HkFamily::gnse(cfg)?;
        fam.fingerprint = model.fingerprint();
        return Ok(fam);
    }
    let form = model.form();
    let exact = form.exact_coeffs().ok_or(SpanningError::NoExactCoefficients)?;
    let n = model.dim();
    let terms = form.terms().iter().zip(exact).map(|(t, c)| (t.row, t.j, t.k, c.clone()));
    Ok(HkFamily {
        fingerprint: model.fingerprint(),
        chart: HkChart::Coordinates { n },
        matrices: coordinate_family(n, terms),
    })
}

/// Exact Lie closure of `{H^k}`; saturated means the family generates
/// `sl(n)`.
pub fn verify_sl_generation(fam: &HkFamily, max_depth: usize) -> Result<ClosureResult, SpanningError> {
    Ok(lie_closure(&fam.matrices, max_depth)?)
}

/// JSON certificate for an `sl` generation run.
pub fn sl_certificate(fam: &HkFamily, closure: &ClosureResult) -> serde_json::Value {
    let (model, extra) = match &fam.chart {
        HkChart::Coordinates { n } => ("coordinates", serde_json::json!({ "n": n })),
        HkChart::Lattice { truncation, aspect } => (
            "gnse",
            serde_json::json!({ "N": truncation, "r": format_rational(aspect) }),
        ),
    };
    serde_json::json!({
        "model": model,
        "fingerprint": fam.fingerprint,
        "params": extra,
        "verdict": if closure.saturated { "saturated" } else { "not-saturated" },
        "closure": closure.report_json(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_gnse, build_l96, ForcedMode, Scaling, Wavevector};
    use crate::rational::{int, ratio};
    use num_traits::Zero;

    fn gnse_cfg(n: usize, r: BigRational) -> GnseConfig {
        GnseConfig::new(n, r, vec![ForcedMode::unit(Wavevector(1, 0))])
    }

    #[test]
    fn gnse_hand_entry() {
        let cfg = gnse_cfg(2, int(1));
        let fam = HkFamily::gnse(&cfg).unwrap();
        let l = cfg.lattice();
        let k = l.index_of(Wavevector(1, 1)).unwrap();
        let row = l.index_of(Wavevector(2, 1)).unwrap();
        let col = l.index_of(Wavevector(1, 0)).unwrap();
        assert_eq!(fam.matrices[k].get(row, col), ratio(1, 2));
        assert!(fam.matrices.iter().all(|h| h.trace().is_zero()));
    }

    #[test]
    fn gnse_band_structure() {
        let cfg = gnse_cfg(2, ratio(3, 2));
        let fam = HkFamily::gnse(&cfg).unwrap();
        let l = cfg.lattice();
        for (kx, h) in fam.matrices.iter().enumerate() {
            for (row, col, _) in h.entries() {
                assert_eq!(l.mode(row), l.mode(col) + l.mode(kx));
            }
        }
    }

    #[test]
    fn l96_family_matches_model_family() {
        let m = build_l96(7, &[1.0], 0.1, Scaling::Unscaled).unwrap();
        let a = build_hk(&m).unwrap();
        let b = HkFamily::lorenz96(7).unwrap();
        assert_eq!(a.matrices, b.matrices);
        assert!(HkFamily::lorenz96(3).unwrap().matrices.iter().all(|h| h.is_zero()));
    }

    #[test]
    fn gnse_model_uses_lattice_chart() {
        let cfg = gnse_cfg(2, int(1));
        let m = build_gnse(&cfg, 0.1, Scaling::FluctuationDissipation).unwrap();
        let fam = build_hk(&m).unwrap();
        assert_eq!(fam.dim(), 24);
        assert!(matches!(fam.chart, HkChart::Lattice { .. }));
    }

    #[test]
    fn float_only_model_is_rejected() {
        let form = crate::models::BilinearForm::from_f64(2, [(0, 0, 1, 1.0), (1, 0, 0, -1.0)]).unwrap();
        let m = BilinearModel::new(
            ModelKind::Custom,
            form,
            nalgebra::DMatrix::identity(2, 2),
            vec![crate::models::ForcingVector {
                label: "e1".into(),
                vector: nalgebra::DVector::from_vec(vec![1.0, 0.0]),
            }],
            0.1,
            Scaling::Unscaled,
        )
        .unwrap();
        assert_eq!(build_hk(&m).unwrap_err(), SpanningError::NoExactCoefficients);
    }

    #[test]
    fn l96_n7_generates_sl7() {
        let fam = HkFamily::lorenz96(7).unwrap();
        let c = verify_sl_generation(&fam, 20).unwrap();
        assert_eq!(c.dim, 48);
        assert!(c.saturated);
    }
}
