use nalgebra::DMatrix;
use proptest::prelude::*;
use qpu_twin::spectrum::*;

fn small_chain(ej: f64, ec: f64, asym: f64, g: f64, j: f64, wr: f64) -> ChainParams {
    ChainParams {
        transmon: TransmonParams {
            ej_max: ej,
            ec,
            asym,
            charge_cutoff: 12,
            levels_kept: 3,
        },
        omega_r_bare: wr,
        omega_p: wr + 0.05,
        g_qr: g,
        j_rp: j,
        kappa_p: 0.03,
        kappa_int: 0.0,
        n_r: 3,
        n_p: 3,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hamiltonian_is_hermitian(
        ej in 15.0f64..35.0, ec in 0.12f64..0.2, asym in 0.0f64..0.95,
        g in 0.0f64..0.2, j in 0.0f64..0.05, wr in 6.0f64..7.5, phi in -2.0f64..2.0,
    ) {
        let mut c = small_chain(ej, ec, asym, g, j, wr);
        c.transmon.charge_cutoff = 20;
        c.transmon.levels_kept = 5;
        c.n_r = 5;
        c.n_p = 5;
        let h = build_hamiltonian(&c, FluxPoint::new(phi)).unwrap();
        let max = h.matrix.iter().map(|v| v.norm()).fold(0.0, f64::max);
        prop_assert!(h.hermiticity_defect() < 1e-12 * max);
    }

    #[test]
    fn josephson_energy_periodic_and_even(k in -4096i64..4096, asym in 0.0f64..0.99) {
        // Dyadic fluxes keep phi ± 1 exactly representable.
        let phi = k as f64 / 1024.0;
        let t = TransmonParams::new(25.44, 0.154, asym);
        let e = josephson_energy(&t, FluxPoint::new(phi));
        prop_assert_eq!(e, josephson_energy(&t, FluxPoint::new(phi + 1.0)));
        prop_assert_eq!(e, josephson_energy(&t, FluxPoint::new(-phi)));
        prop_assert!(e <= t.ej_max && e >= t.ej_max * asym * (1.0 - 1e-15));
    }

    #[test]
    fn spectrum_is_basis_independent(
        ej in 15.0f64..35.0, ec in 0.12f64..0.2, g in 0.0f64..0.2,
        j in 0.0f64..0.05, wr in 6.0f64..7.5, seed in 0u64..1000,
    ) {
        let c = small_chain(ej, ec, 0.5, g, j, wr);
        let h = build_real_hamiltonian(&c, FluxPoint::new(0.1)).unwrap();
        let n = h.matrix.nrows();
        // Deterministic pseudo-random orthogonal matrix from a QR factorization.
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let a = DMatrix::from_fn(n, n, |_, _| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        });
        let q = a.qr().q();
        let rotated = &q * &h.matrix * q.transpose();
        let rotated = (&rotated + rotated.transpose()) * 0.5;
        let s1 = diagonalize(&h);
        let s2 = diagonalize(&Hamiltonian::from_matrix(rotated));
        for (x, y) in s1.energies.iter().zip(&s2.energies) {
            prop_assert!((x - y).abs() < 1e-10, "{} vs {}", x, y);
        }
        prop_assert!(s1.energies.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(s1.energies[0], 0.0);
    }

    #[test]
    fn labels_are_unique(
        ej in 15.0f64..35.0, g in 0.0f64..0.2, j in 0.0f64..0.05, phi in 0.0f64..0.5,
    ) {
        let c = small_chain(ej, 0.16, 0.4, g, j, 6.8);
        let s = diagonalize(&build_real_hamiltonian(&c, FluxPoint::new(phi)).unwrap());
        let mut labels = s.labels.clone();
        labels.sort();
        labels.dedup();
        prop_assert_eq!(labels.len(), s.labels.len());
        prop_assert!(s.overlaps.iter().all(|&o| (0.0..=1.0 + 1e-12).contains(&o)));
    }

    #[test]
    fn dispersive_shift_sign(
        ej in 15.0f64..30.0, ec in 0.14f64..0.2, g in 0.02f64..0.12, extra in 0.6f64..2.0,
    ) {
        // Qubit below the resonator with |Δ| well above |α|.
        let ge_est = (8.0 * ej * ec).sqrt() - ec;
        let mut c = small_chain(ej, ec, 0.5, g, 0.0, ge_est + extra);
        c.n_r = 4;
        c.transmon.levels_kept = 4;
        let o = dressed_observables(&c, FluxPoint::MAX).unwrap();
        prop_assert!(o.two_chi < 0.0, "{}", o.two_chi);
    }
}
