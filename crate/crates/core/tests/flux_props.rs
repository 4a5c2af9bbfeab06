use proptest::prelude::*;
use qpu_twin::flux::*;
use qpu_twin::numeric::pairwise_sum;

fn arb_tf() -> impl Strategy<Value = TransferFunction> {
    (
        0.8f64..1.2,
        prop::collection::vec((-0.05f64..0.05, 50.0f64..50_000.0), 0..4),
        prop::collection::vec(-0.05f64..0.05, 0..4),
    )
        .prop_map(|(gain, terms, ripple)| {
            let mut fir = vec![1.0];
            fir.extend(ripple);
            TransferFunction {
                dc_gain: gain,
                iir_terms: terms.into_iter().map(|(a, t)| IirTerm { amplitude: a, tau_ns: t }).collect(),
                fir_taps: fir,
                sample_period_ns: 0.5,
            }
        })
}

fn arb_wave(n: usize) -> impl Strategy<Value = PulseWaveform> {
    prop::collection::vec(-1.0f64..1.0, n).prop_map(|s| PulseWaveform::new(s, 0.5).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transfer_is_linear(tf in arb_tf(), w1 in arb_wave(300), w2 in arb_wave(300), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let mix = PulseWaveform::new(w1.samples.iter().zip(&w2.samples).map(|(x, y)| a * x + b * y).collect(), 0.5).unwrap();
        let o = apply_transfer(&mix, &tf).unwrap();
        let o1 = apply_transfer(&w1, &tf).unwrap();
        let o2 = apply_transfer(&w2, &tf).unwrap();
        for k in 0..300 {
            prop_assert!((o.samples[k] - a * o1.samples[k] - b * o2.samples[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn predistortion_round_trip(tf in arb_tf(), w in arb_wave(400)) {
        // FIR stage designed from the line's own short step response.
        let iir = invert_iir(tf.dc_gain, &tf.iir_terms, 0.5).unwrap();
        let fir_only = TransferFunction { dc_gain: 1.0, iir_terms: vec![], ..tf.clone() };
        let fir_taps = design_fir_inverse(&fir_only.step_response(64).unwrap(), 24, 1e-12).unwrap();
        let pre = Predistortion { iir, fir_taps };
        let out = apply_transfer(&pre.apply(&w).unwrap(), &tf).unwrap();
        let peak = w.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 1..400 {
            prop_assert!((out.samples[k] - w.samples[k]).abs() < 1e-3 * peak, "sample {}", k);
        }
    }

    #[test]
    fn net_zero_sums_to_exactly_zero(amp in -2.0f64..2.0, half in 2usize..400, dt in prop::sample::select(vec![0.25, 0.5, 1.0, 0.833])) {
        let w = net_zero_pulse(amp, half as f64 * dt, dt).unwrap();
        prop_assert_eq!(w.len(), 2 * half);
        prop_assert_eq!(pairwise_sum(&w.samples), 0.0);
    }
}
