use lyap_core::liealg::{bracket, in_span, lie_closure, span_rank};
use lyap_core::rational::int;
use lyap_core::RationalMatrix;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn small_matrix(n: usize, vals: &[i64]) -> RationalMatrix {
    let mut m = RationalMatrix::zeros(n);
    for (idx, v) in vals.iter().enumerate().take(n * n) {
        if *v != 0 {
            m.set(idx / n, idx % n, int(*v));
        }
    }
    m
}

/// Rank of the matrices flattened into rows, by SVD in floating point.
fn svd_rank(mats: &[RationalMatrix]) -> usize {
    if mats.is_empty() {
        return 0;
    }
    let n = mats[0].n();
    let rows = DMatrix::from_fn(mats.len(), n * n, |r, c| mats[r].to_f64()[(c / n, c % n)]);
    let sv = rows.svd(false, false).singular_values;
    let tol = 1e-9 * sv.max().max(1.0);
    sv.iter().filter(|s| **s > tol).count()
}

#[test]
fn sl2_from_raising_and_lowering() {
    let e = RationalMatrix::elementary(2, 0, 1);
    let f = RationalMatrix::elementary(2, 1, 0);
    let res = lie_closure(&[e, f], 10).unwrap();
    assert_eq!(res.dim, 3);
    assert!(res.saturated);
}

#[test]
fn commuting_diagonals_stay_abelian() {
    let a = RationalMatrix::from_i64_rows(&[&[1, 0, 0], &[0, -1, 0], &[0, 0, 0]]);
    let b = RationalMatrix::from_i64_rows(&[&[0, 0, 0], &[0, 2, 0], &[0, 0, -2]]);
    let res = lie_closure(&[a, b], 10).unwrap();
    assert_eq!(res.dim, 2);
    assert!(res.closed);
    assert!(!res.saturated);
}

#[test]
fn closure_is_invariant_under_generator_order() {
    let gens = [
        RationalMatrix::from_i64_rows(&[&[0, 1, 0], &[0, 0, 2], &[0, 0, 0]]),
        RationalMatrix::from_i64_rows(&[&[0, 0, 0], &[1, 0, 0], &[0, -1, 0]]),
        RationalMatrix::from_i64_rows(&[&[1, 0, 0], &[0, 0, 0], &[0, 0, -1]]),
    ];
    let dims: Vec<usize> = [[0, 1, 2], [2, 1, 0], [1, 2, 0]]
        .iter()
        .map(|p| {
            let g: Vec<_> = p.iter().map(|&i| gens[i].clone()).collect();
            lie_closure(&g, 20).unwrap().dim
        })
        .collect();
    assert!(dims.iter().all(|&d| d == dims[0]), "{dims:?}");
    assert_eq!(dims[0], 8);
}

#[test]
fn closure_basis_lies_in_the_algebra_and_is_closed() {
    let gens = vec![
        RationalMatrix::from_i64_rows(&[&[0, 1, 0, 0], &[0, 0, 0, 0], &[0, 0, 0, 1], &[0, 0, 0, 0]]),
        RationalMatrix::from_i64_rows(&[&[0, 0, 0, 0], &[1, 0, 0, 0], &[0, 0, 0, 0], &[0, 0, 1, 0]]),
    ];
    let res = lie_closure(&gens, 20).unwrap();
    assert!(res.closed);
    assert_eq!(span_rank(&res.basis).unwrap(), res.dim);
    for a in &res.basis {
        for b in &res.basis {
            assert!(in_span(&res.basis, &bracket(a, b).unwrap()).unwrap());
        }
    }
    // Two commuting copies of sl(2) acting diagonally: sl(2) itself.
    assert_eq!(res.dim, 3);
}

proptest! {
    #[test]
    fn exact_rank_agrees_with_svd(
        entries in prop::collection::vec(prop::collection::vec(-3i64..=3, 9), 1..7)
    ) {
        let mats: Vec<_> = entries.iter().map(|v| small_matrix(3, v)).collect();
        prop_assert_eq!(span_rank(&mats).unwrap(), svd_rank(&mats));
    }

    #[test]
    fn bracket_is_antisymmetric_and_satisfies_jacobi(
        a in prop::collection::vec(-4i64..=4, 9),
        b in prop::collection::vec(-4i64..=4, 9),
        c in prop::collection::vec(-4i64..=4, 9),
    ) {
        let (a, b, c) = (small_matrix(3, &a), small_matrix(3, &b), small_matrix(3, &c));
        let ab = bracket(&a, &b).unwrap();
        prop_assert!(ab.add(&bracket(&b, &a).unwrap()).unwrap().is_zero());
        let jacobi = bracket(&a, &bracket(&b, &c).unwrap()).unwrap()
            .add(&bracket(&b, &bracket(&c, &a).unwrap()).unwrap()).unwrap()
            .add(&bracket(&c, &bracket(&a, &b).unwrap()).unwrap()).unwrap();
        prop_assert!(jacobi.is_zero());
        prop_assert!(ab.trace() == int(0));
    }
}
