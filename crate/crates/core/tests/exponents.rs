use lyap_core::exponents::{
    epsilon_sweep, fk_average, gaussian_fisher_check, moment_lyapunov, solve_lyapunov, top_exponent, ExponentError,
    SweepOptions,
};
use lyap_core::models::build_l96;
use lyap_core::projective::{initial_condition, qr_spectrum, SpectrumOptions};
use lyap_core::sde::{integrate, read_binary};
use lyap_core::{BilinearModel, IntegratorConfig, Scaling};
use nalgebra::{DMatrix, DVector};

fn ou(eps: f64) -> BilinearModel {
    BilinearModel::ornstein_uhlenbeck(&[1.0, 2.0], &[1.0, 1.0], eps, Scaling::FluctuationDissipation).unwrap()
}

#[test]
fn ou_top_exponent_is_minus_eps_times_smallest_damping() {
    for eps in [0.05, 0.2] {
        let cfg = IntegratorConfig::new(1e-3, 200.0, 3);
        let est = top_exponent(&ou(eps), &cfg, 3).unwrap();
        assert!((est.value + eps).abs() < 1e-3, "eps {eps}: {est:?}");
        assert_eq!(est.n_seeds, 3);
    }
}

#[test]
fn ou_moment_exponents_are_linear_in_p() {
    let cfg = IntegratorConfig::new(1e-2, 100.0, 1);
    let est = moment_lyapunov(&ou(0.1), &cfg, &[0.0, 0.5, 1.0, 2.0], 100).unwrap();
    assert_eq!(est[0].value, 0.0);
    for e in &est[1..] {
        assert!((e.value + 0.1 * e.p).abs() < 5e-3, "{e:?}");
    }
    assert!(matches!(
        moment_lyapunov(&ou(0.1), &cfg, &[1.0], 99),
        Err(ExponentError::InvalidArgument(_))
    ));
}

#[test]
fn l96_spectrum_is_reproducible_and_sums_to_minus_eps_trace() {
    let m = build_l96(6, &[1.0, 1.0], 0.2, Scaling::FluctuationDissipation).unwrap();
    let cfg = IntegratorConfig::new(2e-3, 100.0, 8);
    let opts = SpectrumOptions::new(6, 2);
    let a = qr_spectrum(&m, None, &cfg, &opts).unwrap();
    let b = qr_spectrum(&m, None, &cfg, &opts).unwrap();
    assert_eq!(a, b);
    let sum = a.lambda_sum.unwrap().value;
    assert!((sum + 1.2).abs() / 1.2 < 0.05, "sum {sum}");
    let values: Vec<f64> = a.exponents.iter().map(|e| e.value).collect();
    assert!(values.windows(2).all(|w| w[0] >= w[1]), "{values:?}");
}

#[test]
fn sweep_rejects_unordered_epsilons() {
    let m = build_l96(6, &[1.0, 1.0], 0.2, Scaling::FluctuationDissipation).unwrap();
    let cfg = IntegratorConfig::new(2e-3, 10.0, 1);
    let opts = SweepOptions {
        n_seeds: 1,
        full_spectrum: false,
    };
    assert!(epsilon_sweep(&m, &[0.1, 0.2], &cfg, opts).is_err());
    assert!(epsilon_sweep(&m, &[0.2, -0.1], &cfg, opts).is_err());
}

#[test]
fn fisher_identity_for_a_non_diagonal_damping() {
    // A symmetric positive definite, not diagonal.
    let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.5, 0.3, 0.0, 0.3, 1.0]);
    let q = [1.0, 0.7, 1.3];
    let c = gaussian_fisher_check(&a, &q, 0.3).unwrap();
    assert!(c.residual < 1e-12, "{c:?}");
    let qq = DMatrix::from_diagonal(&DVector::from_iterator(3, q.iter().map(|v| v * v)));
    let sigma = solve_lyapunov(&a, &qq).unwrap();
    assert!((&a * &sigma + &sigma * &a - qq).abs().max() < 1e-12);
    assert!(matches!(
        gaussian_fisher_check(&a, &[1.0, 0.0, 1.0], 0.3),
        Err(ExponentError::DegenerateForcing(1))
    ));
}

#[test]
fn fk_average_on_simulated_samples() {
    let m = build_l96(7, &[1.0, 1.0], 0.1, Scaling::FluctuationDissipation).unwrap();
    let cfg = IntegratorConfig::new(2e-3, 20.0, 4);
    let traj = integrate(&m, &initial_condition(7, 4, 1.0).0, &cfg).unwrap();
    assert!((fk_average(&m, &traj.states).unwrap() + 0.7).abs() < 1e-12);
}

#[test]
fn trajectories_round_trip_through_binary_frames() {
    let m = build_l96(5, &[1.0], 0.1, Scaling::FluctuationDissipation).unwrap();
    let mut cfg = IntegratorConfig::new(1e-2, 2.0, 9);
    cfg.record_every = 10;
    let x0 = initial_condition(5, 9, 1.0).0;
    let traj = integrate(&m, &x0, &cfg).unwrap();
    assert_eq!(traj, integrate(&m, &x0, &cfg).unwrap());
    let mut buf = Vec::new();
    traj.write_binary(&mut buf).unwrap();
    let (dt, times, states) = read_binary(buf.as_slice()).unwrap();
    assert_eq!(dt, 1e-2);
    assert_eq!(times, traj.times);
    assert_eq!(states, traj.states);
    let other = integrate(&m, &x0, &cfg.clone().with_seed(10)).unwrap();
    assert_ne!(other.states.last(), traj.states.last());
}
