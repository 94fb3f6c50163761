//! Diagonal matrices `D^k = [H^k, H^-k]` of the Galerkin Navier-Stokes
//! family,
//!
//! ```text
//! D^k_i = c_{i,k} c_{i+k,k} 1(i+k) - c_{i,k} c_{i-k,k} 1(i-k),
//! ```
//!
//! where `1(.)` is membership in the truncated lattice.

use num_rational::BigRational;
use num_traits::Zero;

use super::{HkChart, HkFamily, SpanningError};
use crate::models::{structure_coefficient, TruncatedLattice, Wavevector};
use crate::rational::format_rational;

/// `diagonals[kx][ix] = D^{k}_{i}` with `k = mode(kx)`, `i = mode(ix)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DkFamily {
    pub truncation: usize,
    pub aspect: BigRational,
    pub diagonals: Vec<Vec<BigRational>>,
}

impl DkFamily {
    pub fn lattice(&self) -> TruncatedLattice {
        TruncatedLattice::new(self.truncation)
    }

    pub fn get(&self, k: Wavevector, i: Wavevector) -> BigRational {
        let l = self.lattice();
        match (l.index_of(k), l.index_of(i)) {
            (Some(kx), Some(ix)) => self.diagonals[kx][ix].clone(),
            _ => BigRational::zero(),
        }
    }
}

/// Closed-form entry `D^k_i`.
pub fn dk_closed_form(lattice: &TruncatedLattice, r: &BigRational, k: Wavevector, i: Wavevector) -> BigRational {
    let cik = structure_coefficient(i, k, r);
    if cik.is_zero() {
        return cik;
    }
    let mut out = BigRational::zero();
    if lattice.contains(i + k) {
        out += &cik * structure_coefficient(i + k, k, r);
    }
    if lattice.contains(i - k) {
        out -= &cik * structure_coefficient(i - k, k, r);
    }
    out
}

fn lattice_params(fam: &HkFamily) -> Result<(usize, BigRational), SpanningError> {
    match &fam.chart {
        HkChart::Lattice { truncation, aspect } => Ok((*truncation, aspect.clone())),
        HkChart::Coordinates { .. } => Err(SpanningError::NotLattice),
    }
}

/// `D^k` as the exact commutator `[H^k, H^-k]`, read off the diagonal.
/// Fails if a commutator has an off-diagonal entry.
pub fn build_dk_by_commutator(fam: &HkFamily) -> Result<DkFamily, SpanningError> {
    let (truncation, aspect) = lattice_params(fam)?;
    let lattice = TruncatedLattice::new(truncation);
    let n = lattice.len();
    let mut diagonals = Vec::with_capacity(n);
    for (kx, &k) in lattice.modes().iter().enumerate() {
        let mx = lattice.index_of(-k).expect("lattice is symmetric");
        let c = fam.matrices[kx].bracket(&fam.matrices[mx])?;
        if let Some((row, col, v)) = c.entries().find(|(r, c, _)| r != c) {
            return Err(SpanningError::DkMismatch {
                k: k.to_string(),
                i: format!("{} (off-diagonal, column {})", lattice.mode(row), lattice.mode(col)),
                closed: "0".into(),
                commutator: format_rational(v),
            });
        }
        diagonals.push((0..n).map(|i| c.get(i, i)).collect());
    }
    Ok(DkFamily {
        truncation,
        aspect,
        diagonals,
    })
}

/// Builds every `D^k` twice, by the closed form and as `[H^k, H^-k]`, and
/// returns the closed-form family after checking exact agreement.
pub fn build_dk(fam: &HkFamily) -> Result<DkFamily, SpanningError> {
    let (truncation, aspect) = lattice_params(fam)?;
    let lattice = TruncatedLattice::new(truncation);
    let closed: Vec<Vec<BigRational>> = lattice
        .modes()
        .iter()
        .map(|&k| {
            lattice
                .modes()
                .iter()
                .map(|&i| dk_closed_form(&lattice, &aspect, k, i))
                .collect()
        })
        .collect();
    let comm = build_dk_by_commutator(fam)?;
    for (kx, (a, b)) in closed.iter().zip(&comm.diagonals).enumerate() {
        for (ix, (x, y)) in a.iter().zip(b).enumerate() {
            if x != y {
                return Err(SpanningError::DkMismatch {
                    k: lattice.mode(kx).to_string(),
                    i: lattice.mode(ix).to_string(),
                    closed: format_rational(x),
                    commutator: format_rational(y),
                });
            }
        }
    }
    Ok(DkFamily {
        truncation,
        aspect,
        diagonals: closed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ForcedMode, GnseConfig};
    use crate::rational::{int, ratio};

    fn family(n: usize, r: BigRational) -> HkFamily {
        HkFamily::gnse(&GnseConfig::new(n, r, vec![ForcedMode::unit(Wavevector(1, 0))])).unwrap()
    }

    #[test]
    fn hand_values() {
        let dk = build_dk(&family(2, int(1))).unwrap();
        assert_eq!(dk.get(Wavevector(1, 0), Wavevector(1, 1)), ratio(2, 5));
        assert!(dk.get(Wavevector(1, 0), Wavevector(0, 1)).is_zero());
    }

    #[test]
    fn inversion_symmetry() {
        let dk = build_dk(&family(3, ratio(3, 2))).unwrap();
        let l = dk.lattice();
        for &k in l.modes() {
            for &i in l.modes() {
                assert_eq!(dk.get(k, -i), -dk.get(k, i));
            }
        }
    }

    #[test]
    fn coordinate_family_is_rejected() {
        let fam = HkFamily::lorenz96(5).unwrap();
        assert_eq!(build_dk(&fam).unwrap_err(), SpanningError::NotLattice);
    }
}
