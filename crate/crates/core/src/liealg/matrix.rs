use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use super::LieError;
use crate::rational::{format_rational, parse_rational, to_f64};

/// Square matrix with exact rational entries, stored as a sparse map from
/// `(row, col)` to nonzero values. Entries are always gcd-reduced with a
/// positive denominator (guaranteed by `BigRational`).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalMatrix {
    n: usize,
    entries: BTreeMap<(usize, usize), BigRational>,
}

impl RationalMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            entries: BTreeMap::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.entries.insert((i, i), BigRational::from_integer(1.into()));
        }
        m
    }

    /// Elementary matrix `E^{ij}` (0-based).
    pub fn elementary(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n);
        m.set(i, j, BigRational::from_integer(1.into()));
        m
    }

    /// Builds from `(row, col, value)` triplets; repeated positions add up.
    pub fn from_triplets<I>(n: usize, triplets: I) -> Result<Self, LieError>
    where
        I: IntoIterator<Item = (usize, usize, BigRational)>,
    {
        let mut m = Self::zeros(n);
        for (i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(LieError::IndexOutOfRange { i, j, n });
            }
            m.add_at(i, j, v);
        }
        Ok(m)
    }

    /// Builds from integer rows; panics on ragged input.
    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "rows must be square");
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, BigRational::from_integer(v.into()));
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> BigRational {
        self.entries.get(&(i, j)).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigRational) {
        assert!(i < self.n && j < self.n, "index ({i}, {j}) out of range for n = {}", self.n);
        if v.is_zero() {
            self.entries.remove(&(i, j));
        } else {
            self.entries.insert((i, j), v);
        }
    }

    pub fn add_at(&mut self, i: usize, j: usize, v: BigRational) {
        if v.is_zero() {
            return;
        }
        let slot = self.entries.entry((i, j)).or_insert_with(BigRational::zero);
        *slot += v;
        if slot.is_zero() {
            self.entries.remove(&(i, j));
        }
    }

    /// Nonzero entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &BigRational)> {
        self.entries.iter().map(|(&(i, j), v)| (i, j, v))
    }

    fn row(&self, i: usize) -> impl Iterator<Item = (usize, &BigRational)> {
        self.entries.range((i, 0)..(i + 1, 0)).map(|(&(_, j), v)| (j, v))
    }

    pub fn trace(&self) -> BigRational {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn is_diagonal(&self) -> bool {
        self.entries.keys().all(|&(i, j)| i == j)
    }

    pub fn transpose(&self) -> Self {
        Self {
            n: self.n,
            entries: self.entries.iter().map(|(&(i, j), v)| ((j, i), v.clone())).collect(),
        }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zeros(self.n);
        }
        Self {
            n: self.n,
            entries: self.entries.iter().map(|(&k, v)| (k, v * c)).collect(),
        }
    }

    fn check_size(&self, other: &Self) -> Result<(), LieError> {
        if self.n != other.n {
            return Err(LieError::SizeMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, LieError> {
        self.check_size(other)?;
        let mut out = self.clone();
        for (&(i, j), v) in &other.entries {
            out.add_at(i, j, v.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, LieError> {
        self.check_size(other)?;
        let mut out = self.clone();
        for (&(i, j), v) in &other.entries {
            out.add_at(i, j, -v.clone());
        }
        Ok(out)
    }

    pub fn mul(&self, other: &Self) -> Result<Self, LieError> {
        self.check_size(other)?;
        let mut acc: BTreeMap<(usize, usize), BigRational> = BTreeMap::new();
        for (&(i, k), a) in &self.entries {
            for (j, b) in other.row(k) {
                *acc.entry((i, j)).or_insert_with(BigRational::zero) += a * b;
            }
        }
        acc.retain(|_, v| !v.is_zero());
        Ok(Self { n: self.n, entries: acc })
    }

    /// Commutator `[self, other] = self other - other self`.
    pub fn bracket(&self, other: &Self) -> Result<Self, LieError> {
        let mut ab = self.mul(other)?;
        for (&(i, k), b) in &other.entries {
            for (j, a) in self.row(k) {
                ab.add_at(i, j, -(b * a));
            }
        }
        Ok(ab)
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (&(i, j), v) in &self.entries {
            m[(i, j)] = to_f64(v);
        }
        m
    }

    /// Largest absolute entry, 0 for the zero matrix.
    pub fn max_abs(&self) -> BigRational {
        self.entries.values().map(|v| v.abs()).max().unwrap_or_else(BigRational::zero)
    }
}

/// Commutator `AB - BA`.
pub fn bracket(a: &RationalMatrix, b: &RationalMatrix) -> Result<RationalMatrix, LieError> {
    a.bracket(b)
}

impl fmt::Debug for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RationalMatrix(n={}, {{", self.n)?;
        for (k, (&(i, j), v)) in self.entries.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "({i},{j}): {}", format_rational(v))?;
        }
        write!(f, "}})")
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    n: usize,
    entries: Vec<(usize, usize, String)>,
}

/// JSON form: `{"n": 3, "entries": [[0, 1, "1/2"], ...]}` (sparse triplets,
/// rationals as `"p/q"` strings).
impl Serialize for RationalMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        MatrixJson {
            n: self.n,
            entries: self
                .entries
                .iter()
                .map(|(&(i, j), v)| (i, j, format_rational(v)))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RationalMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(d)?;
        let mut triplets = Vec::with_capacity(raw.entries.len());
        for (i, j, s) in raw.entries {
            triplets.push((i, j, parse_rational(&s).map_err(de::Error::custom)?));
        }
        RationalMatrix::from_triplets(raw.n, triplets).map_err(de::Error::custom)
    }
}
