use lyap_core::models::{build_gnse, build_l96, ForcedMode, GnseConfig, Wavevector};
use lyap_core::rational::{int, ratio};
use lyap_core::{BilinearModel, Scaling};
use nalgebra::DVector;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;

fn gnse(n: usize, r: BigRational) -> BilinearModel {
    let cfg = GnseConfig::new(
        n,
        r,
        vec![ForcedMode::unit(Wavevector(1, 0)), ForcedMode::unit(Wavevector(1, 1))],
    );
    build_gnse(&cfg, 0.1, Scaling::FluctuationDissipation).unwrap()
}

fn models() -> Vec<BilinearModel> {
    vec![
        build_l96(7, &[1.0, 1.0], 0.1, Scaling::FluctuationDissipation).unwrap(),
        build_l96(10, &[1.0, 0.5, 0.25], 0.3, Scaling::Unscaled).unwrap(),
        gnse(2, int(1)),
        gnse(3, ratio(3, 2)),
    ]
}

fn vector(n: usize, seed: u64, scale: f64) -> DVector<f64> {
    // Deterministic pseudo-random point; a simple LCG keeps the oracle
    // independent of the crate's noise streams.
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    DVector::from_fn(n, |_, _| {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        scale * (((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0)
    })
}

#[test]
fn jacobian_matches_central_differences() {
    let h = 1e-5;
    for m in models() {
        let n = m.dim();
        for seed in 0..20 {
            let x = vector(n, seed, 10.0 / (n as f64).sqrt());
            let jac = m.drift_jacobian(&x).unwrap();
            for j in 0..n {
                let mut e = DVector::zeros(n);
                e[j] = h;
                let col = (m.drift(&(&x + &e)).unwrap() - m.drift(&(&x - &e)).unwrap()) / (2.0 * h);
                let exact = jac.column(j).into_owned();
                let rel = (&col - &exact).norm() / exact.norm().max(1.0);
                assert!(rel <= 1e-8, "column {j}: rel err {rel:e}");
            }
        }
    }
}

#[test]
fn jacobian_at_origin_is_minus_eps_a() {
    for m in models() {
        let jac = m.drift_jacobian(&DVector::zeros(m.dim())).unwrap();
        let expected = m.damping() * -m.epsilon();
        assert!((jac - expected).abs().max() < 1e-15);
    }
}

#[test]
fn gnse_enstrophy_is_conserved_exactly() {
    let m = gnse(3, ratio(1, 2));
    let n = m.dim();
    for seed in 0..10u64 {
        let x: Vec<BigRational> = (0..n)
            .map(|i| ratio(((seed as i64 + 3) * (i as i64 + 1)) % 17 - 8, 1 + (i as i64 % 5)))
            .collect();
        let b = m.form().eval_sq_exact(&x).expect("exact coefficients");
        let dot: BigRational = x.iter().zip(&b).map(|(a, c)| a * c).sum();
        assert!(dot.is_zero(), "x . B(x,x) = {dot}");
    }
}

#[test]
fn rescaling_examples() {
    let m = build_l96(7, &[1.0, 1.0], 0.25, Scaling::Unscaled).unwrap();
    let (fd, map) = m.rescale_fd().unwrap();
    assert_eq!(fd.epsilon(), 0.125);
    assert_eq!(fd.scaling(), Scaling::FluctuationDissipation);
    assert_eq!(map.rescaled_exponent(0.4) / 0.125, 0.4 / 0.25);
    assert!(fd.rescale_fd().is_err());
    let one = build_l96(7, &[1.0], 1.0, Scaling::Unscaled).unwrap().rescale_fd().unwrap().0;
    assert_eq!(one.epsilon(), 1.0);
}

#[test]
fn forcing_count_follows_nonzero_amplitudes() {
    let m = build_l96(9, &[1.0, 2.0, 0.0, 0.0], 0.1, Scaling::FluctuationDissipation).unwrap();
    assert_eq!(m.forcing().len(), 2);
}

proptest! {
    #[test]
    fn nonlinearity_conserves_energy_and_volume(seed in 0u64..10_000, scale in 0.1f64..10.0) {
        for m in models() {
            let x = vector(m.dim(), seed, scale);
            let b = m.form().eval_sq(&x);
            let norm_b = m.form().norm();
            prop_assert!(x.dot(&b).abs() <= 1e-10 * x.norm_squared() * norm_b * scale.max(1.0));
            prop_assert!(m.form().divergence(x.as_slice()).abs() <= 1e-10 * norm_b * x.norm().max(1.0));
        }
    }

    #[test]
    fn bilinear_part_is_homogeneous(seed in 0u64..10_000, alpha in -4.0f64..4.0) {
        let m = build_l96(8, &[1.0, 1.0], 0.0, Scaling::FluctuationDissipation).unwrap();
        let x = vector(8, seed, 2.0);
        let j1 = m.drift_jacobian(&x).unwrap() * alpha;
        let j2 = m.drift_jacobian(&(&x * alpha)).unwrap();
        prop_assert!((j1 - j2).abs().max() <= 1e-12 * (1.0 + alpha.abs()) * 10.0);
    }
}
