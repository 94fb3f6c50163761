use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::Zero;

use super::ModelError;
use crate::rational::{format_rational, to_f64};

/// One monomial `coeff * x_j * x_k` contributing to component `row` of
/// `B(x, x)`. Always stored with `j <= k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilinearTerm {
    pub row: usize,
    pub j: usize,
    pub k: usize,
    pub coeff: f64,
}

/// Sparse symmetric bilinear form
/// `B_l(x, y) = sum c_{l,{j,k}} (x_j y_k + x_k y_j) / 2`, so that
/// `B_l(x, x) = sum c_{l,{j,k}} x_j x_k`.
///
/// When the form was assembled from exact rationals the rational
/// coefficients are kept alongside the floating-point copy; the exact ones
/// feed the Lie-algebra checks, the floats feed the integrators.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearForm {
    dim: usize,
    terms: Vec<BilinearTerm>,
    exact: Option<Vec<BigRational>>,
}

impl BilinearForm {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            terms: Vec::new(),
            exact: Some(Vec::new()),
        }
    }

    /// Assembles a form from exact `(row, j, k, coeff)` entries. Repeated
    /// monomials are summed, `{j, k}` is unordered and zero coefficients are
    /// dropped.
    pub fn from_exact<I>(dim: usize, entries: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = (usize, usize, usize, BigRational)>,
    {
        let mut acc: BTreeMap<(usize, usize, usize), BigRational> = BTreeMap::new();
        for (row, j, k, c) in entries {
            check_index(dim, row)?;
            check_index(dim, j)?;
            check_index(dim, k)?;
            let key = (row, j.min(k), j.max(k));
            *acc.entry(key).or_insert_with(BigRational::zero) += c;
        }
        let mut terms = Vec::with_capacity(acc.len());
        let mut exact = Vec::with_capacity(acc.len());
        for ((row, j, k), c) in acc {
            if c.is_zero() {
                continue;
            }
            terms.push(BilinearTerm {
                row,
                j,
                k,
                coeff: to_f64(&c),
            });
            exact.push(c);
        }
        Ok(Self {
            dim,
            terms,
            exact: Some(exact),
        })
    }

    /// Floating-point only form. Such a form cannot feed the exact `H^k`
    /// construction.
    pub fn from_f64<I>(dim: usize, entries: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = (usize, usize, usize, f64)>,
    {
        let mut acc: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
        for (row, j, k, c) in entries {
            check_index(dim, row)?;
            check_index(dim, j)?;
            check_index(dim, k)?;
            *acc.entry((row, j.min(k), j.max(k))).or_insert(0.0) += c;
        }
        let terms = acc
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|((row, j, k), coeff)| BilinearTerm { row, j, k, coeff })
            .collect();
        Ok(Self {
            dim,
            terms,
            exact: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[BilinearTerm] {
        &self.terms
    }

    /// Exact coefficients, parallel to [`terms`](Self::terms).
    pub fn exact_coeffs(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Sum of absolute coefficients; used as the scale `||B||` in tolerance
    /// checks.
    pub fn norm(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.abs()).sum()
    }

    /// `out = B(x, x)`.
    pub fn eval_sq_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for t in &self.terms {
            out[t.row] += t.coeff * x[t.j] * x[t.k];
        }
    }

    pub fn eval_sq(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        self.eval_sq_into(x.as_slice(), out.as_mut_slice());
        out
    }

    /// Symmetric evaluation `B(x, y)`.
    pub fn eval(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        for t in &self.terms {
            out[t.row] += 0.5 * t.coeff * (x[t.j] * y[t.k] + x[t.k] * y[t.j]);
        }
        out
    }

    /// Adds the derivative matrix `v -> 2 B(x, v)` of `x -> B(x, x)` into
    /// `out` (column-major, `dim x dim`).
    pub fn add_jacobian_into(&self, x: &[f64], out: &mut DMatrix<f64>) {
        for t in &self.terms {
            // d/dx_j (c x_j x_k) = c x_k and symmetrically; j == k gives 2 c x_j.
            out[(t.row, t.j)] += t.coeff * x[t.k];
            out[(t.row, t.k)] += t.coeff * x[t.j];
        }
    }

    /// `sum_l d/dx_l B_l(x, x)`.
    pub fn divergence(&self, x: &[f64]) -> f64 {
        let mut div = 0.0;
        for t in &self.terms {
            if t.row == t.j {
                div += t.coeff * x[t.k];
            }
            if t.row == t.k {
                div += t.coeff * x[t.j];
            }
        }
        div
    }

    /// `B(x, x)` in exact arithmetic. `None` for float-only forms.
    pub fn eval_sq_exact(&self, x: &[BigRational]) -> Option<Vec<BigRational>> {
        let exact = self.exact.as_ref()?;
        let mut out = vec![BigRational::zero(); self.dim];
        for (t, c) in self.terms.iter().zip(exact) {
            out[t.row] += c * &x[t.j] * &x[t.k];
        }
        Some(out)
    }

    /// Stable textual description used for model fingerprints.
    pub(crate) fn canonical_string(&self) -> String {
        let mut s = format!("dim={};", self.dim);
        match &self.exact {
            Some(exact) => {
                for (t, c) in self.terms.iter().zip(exact) {
                    s.push_str(&format!("{},{},{}:{};", t.row, t.j, t.k, format_rational(c)));
                }
            }
            None => {
                for t in &self.terms {
                    s.push_str(&format!("{},{},{}:{:e};", t.row, t.j, t.k, t.coeff));
                }
            }
        }
        s
    }
}

fn check_index(dim: usize, i: usize) -> Result<(), ModelError> {
    if i >= dim {
        Err(ModelError::IndexOutOfRange { index: i, dim })
    } else {
        Ok(())
    }
}
