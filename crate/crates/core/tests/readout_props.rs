use proptest::prelude::*;
use qpu_twin::readout::*;

fn arb_modes() -> impl Strategy<Value = ReadoutModes> {
    (6.0f64..8.0, -0.08f64..0.08, 0.0f64..0.03, 0.005f64..0.06, 0.0f64..1e-3, -0.01f64..0.0).prop_map(
        |(wp, delta, j, kp, ki, chi)| ReadoutModes {
            omega_r: [wp + delta, wp + delta + chi, wp + delta + 1.8 * chi],
            omega_p: wp,
            j_rp: j,
            kappa_p: kp,
            kappa_int: ki,
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn transmission_is_passive(m in arb_modes(), offset in -0.2f64..0.2) {
        let grid: Vec<f64> = (0..200).map(|k| m.omega_p + offset + (k as f64 - 100.0) * 1e-3).collect();
        for s in QubitState::ALL {
            for v in transmission_s21(&m, s, &grid) {
                prop_assert!(v.norm() <= 1.0 + 1e-9, "{}", v);
            }
        }
        let far = transmission_s21(&m, QubitState::G, &[m.omega_p + 1e4]);
        prop_assert!((far[0] - 1.0).norm() < 1e-4);
    }

    #[test]
    fn linewidth_sum_rule(m in arb_modes()) {
        for s in QubitState::ALL {
            match hybridized_linewidths(&m, s) {
                Ok(h) => {
                    prop_assert!((h.kappa_r_eff + h.kappa_p_eff - m.kappa_p - m.kappa_int).abs() < 1e-9);
                    prop_assert!(h.kappa_r_eff >= -1e-12 && h.kappa_p_eff >= -1e-12);
                }
                Err(e) => prop_assert!(matches!(e, qpu_twin::Error::ModeMixing { .. }), "{}", e),
            }
        }
    }
}
