//! Incremental fraction-free row echelon form over the integers, used to
//! test membership in the span of vectorized matrices.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::RationalMatrix;

/// Sparse integer vector, sorted by index, no zero entries.
pub(crate) type SparseVec = Vec<(usize, BigInt)>;

/// Rows keyed by their leading index. Each row is primitive (content 1)
/// with a positive leading coefficient.
#[derive(Debug, Clone, Default)]
pub(crate) struct Echelon {
    rows: BTreeMap<usize, SparseVec>,
}

impl Echelon {
    pub(crate) fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Inserts `v` if it is independent of the current rows.
    pub(crate) fn insert(&mut self, v: SparseVec) -> bool {
        match self.reduce(v) {
            Some(r) => {
                self.rows.insert(r[0].0, r);
                true
            }
            None => false,
        }
    }

    /// Eliminates leading terms until the lead has no pivot row. Returns the
    /// remainder, or `None` when `v` lies in the span.
    pub(crate) fn reduce(&self, mut v: SparseVec) -> Option<SparseVec> {
        loop {
            let (lead, c) = match v.first() {
                None => return None,
                Some((i, c)) => (*i, c.clone()),
            };
            match self.rows.get(&lead) {
                None => {
                    make_primitive(&mut v);
                    return Some(v);
                }
                Some(row) => {
                    let p = &row[0].1;
                    let g = p.gcd(&c);
                    v = combine(&(p / &g), &v, &(&c / &g), row);
                    make_primitive(&mut v);
                }
            }
        }
    }
}

/// `a u - b w`.
fn combine(a: &BigInt, u: &SparseVec, b: &BigInt, w: &SparseVec) -> SparseVec {
    let mut out = Vec::with_capacity(u.len() + w.len());
    let (mut i, mut j) = (0, 0);
    while i < u.len() || j < w.len() {
        let take_u = j == w.len() || (i < u.len() && u[i].0 < w[j].0);
        let take_w = i == u.len() || (j < w.len() && w[j].0 < u[i].0);
        if take_u {
            out.push((u[i].0, a * &u[i].1));
            i += 1;
        } else if take_w {
            out.push((w[j].0, -(b * &w[j].1)));
            j += 1;
        } else {
            let val = a * &u[i].1 - b * &w[j].1;
            if !val.is_zero() {
                out.push((u[i].0, val));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

fn make_primitive(v: &mut SparseVec) {
    let Some(first) = v.first() else { return };
    let mut g = first.1.abs();
    for (_, c) in v.iter().skip(1) {
        if g.is_one() {
            break;
        }
        g = g.gcd(c);
    }
    let flip = first.1.is_negative();
    if !g.is_one() || flip {
        let g = if flip { -g } else { g };
        for (_, c) in v.iter_mut() {
            *c = &*c / &g;
        }
    }
}

/// Row-major vectorization scaled to a primitive integer vector.
pub(crate) fn vectorize(m: &RationalMatrix) -> SparseVec {
    let n = m.n();
    let lcm = m
        .entries()
        .fold(BigInt::one(), |acc, (_, _, v)| acc.lcm(v.denom()));
    let mut v: SparseVec = m
        .entries()
        .map(|(i, j, q)| (i * n + j, q.numer() * (&lcm / q.denom())))
        .collect();
    make_primitive(&mut v);
    v
}
