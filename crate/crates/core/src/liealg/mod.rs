//! Exact rational matrix Lie algebras: brackets, span ranks and iterated
//! closure with saturation detection.

mod echelon;
mod matrix;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use echelon::{vectorize, Echelon};
pub use matrix::{bracket, RationalMatrix};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LieError {
    #[error("matrix sizes differ: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },
    #[error("entry ({i}, {j}) out of range for size {n}")]
    IndexOutOfRange { i: usize, j: usize, n: usize },
    #[error("max_depth must be >= 1")]
    ZeroDepth,
    #[error("no generators")]
    NoGenerators,
}

fn common_size(mats: &[RationalMatrix]) -> Result<Option<usize>, LieError> {
    let Some(first) = mats.first() else { return Ok(None) };
    for m in &mats[1..] {
        if m.n() != first.n() {
            return Err(LieError::SizeMismatch {
                left: first.n(),
                right: m.n(),
            });
        }
    }
    Ok(Some(first.n()))
}

/// Dimension of the linear span of `mats` inside the `n^2`-dimensional
/// matrix space, by exact fraction-free elimination.
pub fn span_rank(mats: &[RationalMatrix]) -> Result<usize, LieError> {
    common_size(mats)?;
    let mut e = Echelon::default();
    for m in mats {
        e.insert(vectorize(m));
    }
    Ok(e.rank())
}

/// Whether `m` lies in the linear span of `mats`.
pub fn in_span(mats: &[RationalMatrix], m: &RationalMatrix) -> Result<bool, LieError> {
    if let Some(n) = common_size(mats)? {
        if n != m.n() {
            return Err(LieError::SizeMismatch { left: n, right: m.n() });
        }
    }
    let mut e = Echelon::default();
    for b in mats {
        e.insert(vectorize(b));
    }
    Ok(e.reduce(vectorize(m)).is_none())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosureResult {
    pub n: usize,
    /// Linearly independent matrices spanning the generated algebra, in the
    /// order they were found.
    pub basis: Vec<RationalMatrix>,
    /// Bracket depth at which each basis element appeared (0 = generator).
    pub generations: Vec<usize>,
    pub dim: usize,
    /// `dim = n^2 - 1`.
    pub saturated: bool,
    /// True when the last generation produced nothing new, so the span is
    /// closed under brackets. False when `max_depth` stopped the search.
    pub closed: bool,
    pub depth_reached: usize,
}

impl ClosureResult {
    /// Number of basis elements per generation.
    pub fn generation_histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.depth_reached + 1];
        for &g in &self.generations {
            h[g] += 1;
        }
        h
    }

    /// `{n, dim, saturated, closed, generation_histogram}` without the basis.
    pub fn report_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n,
            "dim": self.dim,
            "target": (self.n * self.n).saturating_sub(1),
            "saturated": self.saturated,
            "closed": self.closed,
            "generation_histogram": self.generation_histogram(),
        })
    }
}

/// Breadth-first Lie closure. Generation 0 holds the independent
/// generators; generation `d` holds the independent brackets
/// `[b, g]` of generation `d - 1` elements `b` with generators `g`. Stops on
/// no growth, on reaching `n^2 - 1` (or `n^2` when some generator has a
/// nonzero trace), or after `max_depth` generations.
///
/// Brackets of one generation are formed in parallel; rank insertion is
/// sequential in a fixed order, so the result does not depend on
/// scheduling.
pub fn lie_closure(generators: &[RationalMatrix], max_depth: usize) -> Result<ClosureResult, LieError> {
    if max_depth == 0 {
        return Err(LieError::ZeroDepth);
    }
    let n = common_size(generators)?.ok_or(LieError::NoGenerators)?;
    let traceless = generators.iter().all(|g| num_traits::Zero::is_zero(&g.trace()));
    if !traceless {
        log::warn!("lie_closure: some generators have nonzero trace");
    }
    let target = if traceless { n * n - 1 } else { n * n };

    let mut echelon = Echelon::default();
    let mut basis = Vec::new();
    let mut generations = Vec::new();
    for g in generators {
        if echelon.insert(vectorize(g)) {
            basis.push(g.clone());
            generations.push(0);
        }
    }
    let mut frontier: Vec<usize> = (0..basis.len()).collect();
    let mut depth = 0;
    let mut closed = false;
    while echelon.rank() < target {
        if frontier.is_empty() {
            closed = true;
            break;
        }
        if depth == max_depth {
            break;
        }
        depth += 1;
        let pairs: Vec<(usize, usize)> = frontier
            .iter()
            .flat_map(|&b| (0..generators.len()).map(move |g| (b, g)))
            .collect();
        let candidates: Vec<RationalMatrix> = pairs
            .par_iter()
            .map(|&(b, g)| basis[b].bracket(&generators[g]).expect("sizes checked"))
            .collect();
        let mut next = Vec::new();
        for c in candidates {
            if c.is_zero() {
                continue;
            }
            if echelon.insert(vectorize(&c)) {
                next.push(basis.len());
                basis.push(c);
                generations.push(depth);
                if echelon.rank() == target {
                    break;
                }
            }
        }
        log::debug!("closure depth {depth}: +{} (dim {})", next.len(), basis.len());
        frontier = next;
    }
    let dim = basis.len();
    Ok(ClosureResult {
        n,
        basis,
        generations,
        dim,
        saturated: dim + 1 == n * n,
        closed: closed || dim == target,
        depth_reached: depth,
    })
}
