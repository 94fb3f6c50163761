use nalgebra::DMatrix;

use super::{coordinate_forcing, BilinearForm, BilinearModel, ModelError, ModelKind, Scaling};
use crate::rational::int;

/// Lorenz-96 nonlinearity `B_l(x, x) = x_{l+1} x_{l-1} - x_{l-2} x_{l-1}`
/// (cyclic indices mod `n`), `A = I`, forcing `X_k = q_k e_k`.
///
/// `q[i]` is the amplitude on coordinate `i + 1`; it may be shorter than `n`
/// (missing entries are zero). Zero amplitudes produce no forcing vector.
pub fn build_l96(
    n: usize,
    q: &[f64],
    epsilon: f64,
    scaling: Scaling,
) -> Result<BilinearModel, ModelError> {
    // n < 4 makes l+1 and l-2 coincide.
    if n < 4 {
        return Err(ModelError::TooSmall {
            what: "L96 dimension",
            min: 4,
            got: n,
        });
    }
    if q.len() > n {
        return Err(ModelError::DimensionMismatch {
            expected: n,
            got: q.len(),
        });
    }
    if q.iter().all(|v| *v == 0.0) {
        return Err(ModelError::NoForcing);
    }
    let form = BilinearForm::from_exact(n, l96_entries(n))?;
    let mut amplitudes = q.to_vec();
    amplitudes.resize(n, 0.0);
    BilinearModel::new(
        ModelKind::Lorenz96 { n },
        form,
        DMatrix::identity(n, n),
        coordinate_forcing(n, &amplitudes),
        epsilon,
        scaling,
    )
}

pub(crate) fn l96_entries(n: usize) -> impl Iterator<Item = (usize, usize, usize, num_rational::BigRational)> {
    (0..n).flat_map(move |l| {
        let next = (l + 1) % n;
        let prev = (l + n - 1) % n;
        let prev2 = (l + n - 2) % n;
        [(l, next, prev, int(1)), (l, prev2, prev, int(-1))]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn unit(n: usize, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        v
    }

    #[test]
    fn hand_evaluation_n7() {
        let m = build_l96(7, &[1.0, 1.0], 0.0, Scaling::FluctuationDissipation).unwrap();
        let x = unit(7, 0) + unit(7, 1);
        assert_eq!(m.form().eval_sq(&x), -unit(7, 2));
        assert_eq!(m.drift(&x).unwrap(), -unit(7, 2));
    }

    #[test]
    fn unit_vectors_are_fixed_points_of_b() {
        for n in [4, 5, 7, 10] {
            let m = build_l96(n, &[1.0], 0.1, Scaling::Unscaled).unwrap();
            for k in 0..n {
                assert!(m.form().eval_sq(&unit(n, k)).iter().all(|v| *v == 0.0));
            }
        }
    }

    #[test]
    fn forcing_count_matches_nonzero_amplitudes() {
        let m = build_l96(10, &[1.0, -2.0, 0.0, 0.5], 0.1, Scaling::Unscaled).unwrap();
        assert_eq!(m.forcing().len(), 3);
        assert_eq!(m.forcing()[1].vector[1], -2.0);
        assert_eq!(m.forcing()[2].label, "e4");
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            build_l96(3, &[1.0], 0.1, Scaling::Unscaled),
            Err(ModelError::TooSmall { .. })
        ));
        assert_eq!(
            build_l96(7, &[0.0, 0.0], 0.1, Scaling::Unscaled).unwrap_err(),
            ModelError::NoForcing
        );
        assert!(build_l96(4, &[1.0; 5], 0.1, Scaling::Unscaled).is_err());
    }
}
