//! The distinctness condition for Galerkin Navier-Stokes: for every
//! quadruple `(i, j, l, m)` of lattice modes with `i + j + l + m = 0` that
//! is not excluded by the constraint
//! `i + j != 0, i + l != 0, i + m != 0`, some `k` must give
//! `D^k_i + D^k_j + D^k_l + D^k_m != 0`.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_dk, build_dk_by_commutator, DkFamily, HkFamily, SpanningError};
use crate::models::{GnseConfig, TruncatedLattice, Wavevector};
use crate::rational::{format_rational, to_f64};

pub type Quadruple = [Wavevector; 4];

/// Outcome of an exhaustive scan; `examined = excluded + satisfied +
/// violations.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistinctnessReport {
    #[serde(rename = "N")]
    pub truncation: usize,
    pub r: String,
    pub examined: u64,
    pub excluded: u64,
    pub satisfied: u64,
    pub violations: Vec<Quadruple>,
    /// How often each `k` was the first witness found.
    pub witness_histogram: BTreeMap<String, u64>,
    /// Witness decisions that needed exact arithmetic because the
    /// floating-point sum was too small to be conclusive.
    pub exact_fallbacks: u64,
}

impl DistinctnessReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn counts_consistent(&self) -> bool {
        self.examined == self.excluded + self.satisfied + self.violations.len() as u64
    }

    pub fn certificate_json(&self) -> serde_json::Value {
        serde_json::json!({
            "model": "gnse",
            "N": self.truncation,
            "r": self.r,
            "verdict": if self.holds() { "distinctness-holds" } else { "violations-found" },
            "examined": self.examined,
            "excluded": self.excluded,
            "satisfied": self.satisfied,
            "violations": self.violations,
            "witness_histogram": self.witness_histogram,
            "exact_fallbacks": self.exact_fallbacks,
        })
    }
}

/// Number of `(i, j, l)` triples the scan enumerates, `|lattice|^3`.
pub fn triple_count(truncation: usize) -> u64 {
    let m = ((2 * truncation + 1) * (2 * truncation + 1) - 1) as u64;
    m * m * m
}

/// Exhaustive check under the hypothesis `N >= 8`.
pub fn check_distinctness(truncation: usize, r: &BigRational) -> Result<DistinctnessReport, SpanningError> {
    if truncation < 8 {
        return Err(SpanningError::TruncationTooSmall(truncation));
    }
    distinctness_scan(truncation, r)
}

/// `D^k_i + D^k_j + D^k_l + D^k_m`.
pub fn distinctness_sum(dk: &DkFamily, k: Wavevector, q: &Quadruple) -> BigRational {
    q.iter().map(|&i| dk.get(k, i)).sum()
}

fn excluded(q: &Quadruple) -> bool {
    (q[0] + q[1]).is_zero() || (q[0] + q[2]).is_zero() || (q[0] + q[3]).is_zero()
}

/// Witness search order: increasing `k1^2 + k2^2`, ties in lattice order.
fn spiral_order(lattice: &TruncatedLattice) -> Vec<usize> {
    let mut order: Vec<usize> = (0..lattice.len()).collect();
    order.sort_by_key(|&i| {
        let k = lattice.mode(i);
        (k.0 * k.0 + k.1 * k.1, i)
    });
    order
}

/// Recomputes a reported violation from scratch with `D^k` taken as
/// commutators `[H^k, H^-k]`. True when no `k` gives a nonzero sum.
pub fn recheck_violation(truncation: usize, r: &BigRational, q: &Quadruple) -> Result<bool, SpanningError> {
    let fam = HkFamily::gnse(&GnseConfig::new(truncation, r.clone(), Vec::new()))?;
    let dk = build_dk_by_commutator(&fam)?;
    Ok(dk
        .lattice()
        .modes()
        .iter()
        .all(|&k| distinctness_sum(&dk, k, q).is_zero()))
}

struct Tables {
    m: usize,
    exact: Vec<BigRational>,
    approx: Vec<f64>,
    nonzero: Vec<bool>,
}

impl Tables {
    fn new(dk: &DkFamily) -> Self {
        let m = dk.diagonals.len();
        let exact: Vec<BigRational> = dk.diagonals.iter().flatten().cloned().collect();
        let approx = exact.iter().map(to_f64).collect();
        let nonzero = exact.iter().map(|v| !v.is_zero()).collect();
        Self {
            m,
            exact,
            approx,
            nonzero,
        }
    }

    /// `Some(exact_used)` when `k` witnesses the quadruple.
    fn witnesses(&self, kx: usize, idx: &[usize; 4]) -> Option<bool> {
        let base = kx * self.m;
        if idx.iter().all(|&i| !self.nonzero[base + i]) {
            return None;
        }
        let mut sum = 0.0;
        let mut scale = 0.0;
        for &i in idx {
            let v = self.approx[base + i];
            sum += v;
            scale += v.abs();
        }
        // Each table entry is within a few ulps of the exact value, so a sum
        // this far from zero cannot come from an exact zero.
        if sum.abs() > 1e-9 * scale {
            return Some(false);
        }
        let exact: BigRational = idx.iter().map(|&i| &self.exact[base + i]).sum();
        (!exact.is_zero()).then_some(true)
    }
}

#[derive(Default)]
struct Tally {
    examined: u64,
    excluded: u64,
    satisfied: u64,
    violations: Vec<Quadruple>,
    witnesses: Vec<u64>,
    exact_fallbacks: u64,
}

/// Exhaustive scan without the `N >= 8` hypothesis check.
pub fn distinctness_scan(truncation: usize, r: &BigRational) -> Result<DistinctnessReport, SpanningError> {
    let fam = HkFamily::gnse(&GnseConfig::new(truncation, r.clone(), Vec::new()))?;
    let dk = build_dk(&fam)?;
    let lattice = dk.lattice();
    let tables = Tables::new(&dk);
    let order = spiral_order(&lattice);
    let m = lattice.len();

    let scan_i = |ix: usize| -> Tally {
        let mut t = Tally {
            witnesses: vec![0; m],
            ..Tally::default()
        };
        let i = lattice.mode(ix);
        for (jx, &j) in lattice.modes().iter().enumerate() {
            for (lx, &l) in lattice.modes().iter().enumerate() {
                let mm = -(i + j + l);
                let Some(mx) = lattice.index_of(mm) else { continue };
                t.examined += 1;
                let q = [i, j, l, mm];
                if excluded(&q) {
                    t.excluded += 1;
                    continue;
                }
                let idx = [ix, jx, lx, mx];
                match order.iter().find_map(|&kx| tables.witnesses(kx, &idx).map(|e| (kx, e))) {
                    Some((kx, exact)) => {
                        t.satisfied += 1;
                        t.witnesses[kx] += 1;
                        t.exact_fallbacks += exact as u64;
                    }
                    None => t.violations.push(q),
                }
            }
        }
        t
    };

    let mut total = Tally {
        witnesses: vec![0; m],
        ..Tally::default()
    };
    let chunk = rayon::current_num_threads().max(1) * 4;
    let indices: Vec<usize> = (0..m).collect();
    for block in indices.chunks(chunk) {
        let tallies: Vec<Tally> = block.par_iter().map(|&ix| scan_i(ix)).collect();
        for (ix, t) in block.iter().zip(tallies) {
            log::info!(
                "distinctness N={truncation}: i = {} examined {} violations {}",
                lattice.mode(*ix),
                t.examined,
                t.violations.len()
            );
            total.examined += t.examined;
            total.excluded += t.excluded;
            total.satisfied += t.satisfied;
            total.exact_fallbacks += t.exact_fallbacks;
            total.violations.extend(t.violations);
            for (a, b) in total.witnesses.iter_mut().zip(&t.witnesses) {
                *a += b;
            }
        }
    }
    let witness_histogram = total
        .witnesses
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(kx, &c)| (lattice.mode(kx).to_string(), c))
        .collect();
    Ok(DistinctnessReport {
        truncation,
        r: format_rational(r),
        examined: total.examined,
        excluded: total.excluded,
        satisfied: total.satisfied,
        violations: total.violations,
        witness_histogram,
        exact_fallbacks: total.exact_fallbacks,
    })
}

/// First witness `k` in search order, by exact arithmetic.
pub fn witness_for(dk: &DkFamily, q: &Quadruple) -> Option<Wavevector> {
    let lattice = dk.lattice();
    spiral_order(&lattice)
        .into_iter()
        .map(|kx| lattice.mode(kx))
        .find(|&k| !distinctness_sum(dk, k, q).is_zero())
}
