use lyap_core::liealg::lie_closure;
use lyap_core::models::{build_gnse, build_l96, ForcedMode, GnseConfig, TruncatedLattice, Wavevector};
use lyap_core::rational::{int, ratio};
use lyap_core::spanning::{
    build_dk, build_dk_by_commutator, build_hk, distinctness_scan, distinctness_sum, witness_for, HkFamily,
};
use lyap_core::Scaling;
use nalgebra::DVector;

#[test]
fn l96_hk_are_mixed_second_derivatives() {
    let m = build_l96(7, &[1.0, 1.0], 0.1, Scaling::FluctuationDissipation).unwrap();
    let fam = build_hk(&m).unwrap();
    let unit = |i: usize| {
        let mut e = DVector::zeros(7);
        e[i] = 1.0;
        e
    };
    for k in 0..7 {
        let h = fam.matrices[k].to_f64();
        for j in 0..7 {
            // d_j d_k B(x, x) = B(e_j, e_k) + B(e_k, e_j)
            let col = m.form().eval(&unit(j), &unit(k)) + m.form().eval(&unit(k), &unit(j));
            assert!((h.column(j) - col).norm() < 1e-14, "k={k} j={j}");
        }
    }
}

#[test]
fn l96_family_matches_model_builder() {
    let m = build_l96(7, &[1.0], 0.1, Scaling::FluctuationDissipation).unwrap();
    assert_eq!(build_hk(&m).unwrap().matrices, HkFamily::lorenz96(7).unwrap().matrices);
}

#[test]
fn l96_generates_sl_for_several_sizes() {
    for n in [4, 5, 6, 8] {
        let fam = HkFamily::lorenz96(n).unwrap();
        let res = lie_closure(&fam.matrices, 64).unwrap();
        assert_eq!(res.dim, n * n - 1, "n = {n}");
    }
}

#[test]
fn gnse_n2_generates_sl() {
    let cfg = GnseConfig::new(2, int(1), vec![ForcedMode::unit(Wavevector(1, 0))]);
    let fam = HkFamily::gnse(&cfg).unwrap();
    assert_eq!(fam.dim(), 24);
    let res = lie_closure(&fam.matrices, 64).unwrap();
    assert_eq!(res.dim, 575);
    let via_model = build_hk(&build_gnse(&cfg, 0.1, Scaling::FluctuationDissipation).unwrap()).unwrap();
    assert_eq!(via_model.matrices, fam.matrices);
}

#[test]
fn dk_two_ways_agree_for_odd_aspect_ratios() {
    for r in [ratio(2, 3), ratio(5, 4), int(3)] {
        let fam = HkFamily::gnse(&GnseConfig::new(3, r, Vec::new())).unwrap();
        let closed = build_dk(&fam).unwrap();
        assert_eq!(closed, build_dk_by_commutator(&fam).unwrap());
    }
}

#[test]
fn dk_is_odd_in_the_mode() {
    let fam = HkFamily::gnse(&GnseConfig::new(3, ratio(3, 2), Vec::new())).unwrap();
    let dk = build_dk(&fam).unwrap();
    let lattice = TruncatedLattice::new(3);
    for &k in lattice.modes() {
        for &i in lattice.modes() {
            assert_eq!(dk.get(k, -i), -dk.get(k, i));
        }
    }
}

#[test]
fn small_scans_are_consistent_and_witnessed() {
    for n in [2, 3] {
        let rep = distinctness_scan(n, &int(1)).unwrap();
        assert!(rep.counts_consistent());
        let m = TruncatedLattice::new(n).len() as u64;
        assert!(rep.examined <= m * m * m);
        let fam = HkFamily::gnse(&GnseConfig::new(n, int(1), Vec::new())).unwrap();
        let dk = build_dk(&fam).unwrap();
        for q in &rep.violations {
            assert!(witness_for(&dk, q).is_none());
        }
        // Spot check a non-paired quadruple by exact arithmetic.
        let q = [Wavevector(1, 0), Wavevector(0, 1), Wavevector(1, 1), Wavevector(-2, -2)];
        if let Some(k) = witness_for(&dk, &q) {
            assert_ne!(distinctness_sum(&dk, k, &q), int(0));
        }
    }
}
