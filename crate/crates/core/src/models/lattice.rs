//! Truncated Fourier lattice `Z^2_{0,N}` and the Galerkin Navier-Stokes
//! structure coefficients.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::int;

/// Integer wavevector `k = (k1, k2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i64; 2]", into = "[i64; 2]")]
pub struct Wavevector(pub i64, pub i64);

impl Wavevector {
    pub fn is_zero(self) -> bool {
        self.0 == 0 && self.1 == 0
    }

    /// `j2 l1 - j1 l2`; multiply by `r` for `<j^perp, l>_r`.
    pub fn perp_dot(self, other: Wavevector) -> i64 {
        self.1 * other.0 - self.0 * other.1
    }

    pub fn max_abs(self) -> i64 {
        self.0.abs().max(self.1.abs())
    }

    /// Representative of the pair `{k, -k}` used by the real chart:
    /// `k1 > 0`, or `k1 == 0` and `k2 > 0`.
    pub fn in_upper_half(self) -> bool {
        self.0 > 0 || (self.0 == 0 && self.1 > 0)
    }

    /// `|k|_r^2 = k1^2 + r^2 k2^2`.
    pub fn norm_sq_r(self, r: &BigRational) -> BigRational {
        int(self.0 * self.0) + r * r * int(self.1 * self.1)
    }

    /// Floating-point twin of [`norm_sq_r`](Self::norm_sq_r).
    pub fn norm_sq_f64(self, r: f64) -> f64 {
        let (a, b) = (self.0 as f64, self.1 as f64);
        a * a + r * r * b * b
    }
}

impl From<[i64; 2]> for Wavevector {
    fn from(k: [i64; 2]) -> Self {
        Wavevector(k[0], k[1])
    }
}

impl From<Wavevector> for [i64; 2] {
    fn from(k: Wavevector) -> Self {
        [k.0, k.1]
    }
}

impl Add for Wavevector {
    type Output = Wavevector;
    fn add(self, o: Wavevector) -> Wavevector {
        Wavevector(self.0 + o.0, self.1 + o.1)
    }
}

impl Sub for Wavevector {
    type Output = Wavevector;
    fn sub(self, o: Wavevector) -> Wavevector {
        Wavevector(self.0 - o.0, self.1 - o.1)
    }
}

impl Neg for Wavevector {
    type Output = Wavevector;
    fn neg(self) -> Wavevector {
        Wavevector(-self.0, -self.1)
    }
}

impl fmt::Display for Wavevector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.0, self.1)
    }
}

/// `c_{j,l} = <j^perp, l>_r (1/|l|_r^2 - 1/|j|_r^2)` with
/// `<j^perp, l>_r = r (j2 l1 - j1 l2)`. Symmetric in `(j, l)` and odd in
/// each argument.
pub fn structure_coefficient(j: Wavevector, l: Wavevector, r: &BigRational) -> BigRational {
    let pd = j.perp_dot(l);
    if pd == 0 {
        return BigRational::zero();
    }
    let weight = BigRational::one() / l.norm_sq_r(r) - BigRational::one() / j.norm_sq_r(r);
    r * int(pd) * weight
}

/// Floating-point evaluation of [`structure_coefficient`], together with a
/// magnitude bound `|<j^perp,l>_r| (1/|l|^2 + 1/|j|^2)` that dominates the
/// absolute rounding error up to a small multiple of machine epsilon.
pub fn structure_coefficient_f64(j: Wavevector, l: Wavevector, r: f64) -> (f64, f64) {
    let pd = j.perp_dot(l);
    if pd == 0 {
        return (0.0, 0.0);
    }
    let s = r * pd as f64;
    let a = 1.0 / l.norm_sq_f64(r);
    let b = 1.0 / j.norm_sq_f64(r);
    (s * (a - b), s.abs() * (a + b))
}

/// The truncated lattice `{k in Z^2 \ {0} : max(|k1|,|k2|) <= N}` in
/// lexicographic order. Index `i` of a mode is its position in that order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedLattice {
    n: usize,
    modes: Vec<Wavevector>,
}

impl TruncatedLattice {
    pub fn new(n: usize) -> Self {
        let m = n as i64;
        let mut modes = Vec::with_capacity((2 * n + 1) * (2 * n + 1) - 1);
        for k1 in -m..=m {
            for k2 in -m..=m {
                if k1 != 0 || k2 != 0 {
                    modes.push(Wavevector(k1, k2));
                }
            }
        }
        Self { n, modes }
    }

    /// Truncation level `N`.
    pub fn truncation(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Wavevector] {
        &self.modes
    }

    pub fn contains(&self, k: Wavevector) -> bool {
        !k.is_zero() && k.max_abs() <= self.n as i64
    }

    pub fn index_of(&self, k: Wavevector) -> Option<usize> {
        if !self.contains(k) {
            return None;
        }
        let side = 2 * self.n as i64 + 1;
        let raw = (k.0 + self.n as i64) * side + (k.1 + self.n as i64);
        let origin = self.n as i64 * side + self.n as i64;
        Some(if raw > origin { raw - 1 } else { raw } as usize)
    }

    pub fn mode(&self, i: usize) -> Wavevector {
        self.modes[i]
    }

    /// Upper half-lattice representatives in lattice order.
    pub fn half_modes(&self) -> Vec<Wavevector> {
        self.modes.iter().copied().filter(|k| k.in_upper_half()).collect()
    }
}
