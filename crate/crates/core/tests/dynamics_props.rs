use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use qpu_twin::dynamics::*;
use qpu_twin::flux::PulseWaveform;
use qpu_twin::fluxmap::FluxMap;

fn pair(j: f64, levels: [usize; 2]) -> DuffingPair {
    let q = |f0: f64, alpha: f64, levels: usize| QubitModel {
        anharmonicity: alpha,
        levels,
        flux_map: FluxMap::Linear { f0, slope: 1.0 },
        idle_phi: 0.0,
    };
    DuffingPair {
        qubits: [q(5.0, -0.19, levels[0]), q(5.15, -0.17, levels[1])],
        j_qq: j,
        interaction_frequency: 5.0,
        sample_period_ns: 0.5,
    }
}

fn wave(samples: Vec<f64>) -> PulseWaveform {
    PulseWaveform::new(samples, 0.5).unwrap()
}

fn state(re: &[f64], im: &[f64]) -> DVector<C64> {
    let v = DVector::from_iterator(re.len(), re.iter().zip(im).map(|(a, b)| C64::new(*a, *b)));
    let n = v.norm();
    v / C64::new(n.max(1e-12), 0.0)
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn waveform_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..80).prop_flat_map(|n| (prop::collection::vec(-0.2f64..0.2, n), prop::collection::vec(-0.2f64..0.2, n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn propagation_preserves_norm(
        (w1, w2) in waveform_pair(),
        j in 0.0f64..0.02,
        re in prop::collection::vec(-1.0f64..1.0, 9),
        im in prop::collection::vec(-1.0f64..1.0, 9),
    ) {
        let p = pair(j, [3, 3]);
        let psi0 = state(&re, &im);
        prop_assume!((psi0.norm() - 1.0).abs() < 1e-12);
        let psi = propagate(&p, [&wave(w1), &wave(w2)], &psi0).unwrap();
        prop_assert!((psi.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn half_trajectories_compose(
        (w1, w2) in waveform_pair(),
        split in 1usize..79,
        j in 0.0f64..0.02,
    ) {
        let n = w1.len();
        let k = split.min(n - 1);
        let p = pair(j, [3, 3]);
        let whole = propagator(&p, [&wave(w1.clone()), &wave(w2.clone())]).unwrap();
        let first = propagator(&p, [&wave(w1[..k].to_vec()), &wave(w2[..k].to_vec())]).unwrap();
        let late = |w: &[f64]| PulseWaveform { start_time_ns: k as f64 * 0.5, ..wave(w.to_vec()) };
        let second = propagator(&p, [&late(&w1[k..]), &late(&w2[k..])]).unwrap();
        prop_assert!(max_abs(&(&whole - second * first)) < 1e-9);
    }

    #[test]
    fn lindblad_keeps_a_density_matrix(
        (w1, w2) in waveform_pair(),
        j in 0.0f64..0.02,
        t1 in 0.05f64..50.0,
        t2_frac in 0.05f64..2.0,
        re in prop::collection::vec(-1.0f64..1.0, 6),
        im in prop::collection::vec(-1.0f64..1.0, 6),
    ) {
        let p = pair(j, [2, 3]);
        let psi0 = state(&re, &im);
        prop_assume!((psi0.norm() - 1.0).abs() < 1e-12);
        let r = Rates::from_times(t1, t2_frac * t1).unwrap();
        let rho = lindblad_propagate(&p, [&wave(w1), &wave(w2)], &[r, r], &projector(&psi0)).unwrap();
        prop_assert!((rho.trace() - C64::new(1.0, 0.0)).norm() < 1e-9);
        prop_assert!(max_abs(&(&rho - rho.adjoint())) < 1e-9);
        let herm = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
        let eig = herm.symmetric_eigen();
        prop_assert!(eig.eigenvalues.iter().all(|&e| e > -1e-9));
    }

    #[test]
    fn spectroscopy_converges_as_noise_vanishes(j in 0.002f64..0.01, seed in 0u64..1000) {
        let p = pair(j, [3, 3]);
        let flux: Vec<f64> = (0..81).map(|k| -0.15 - 0.04 + 0.001 * k as f64).collect();
        let mut last = f64::INFINITY;
        for noise in [1e-4, 1e-5, 1e-6, 1e-7] {
            let fit = spectroscopy_lines(&p, &flux, noise, seed).unwrap();
            let err = (fit.two_j - 2.0 * j).abs();
            prop_assert!(err < 20.0 * noise, "noise {noise}: err {err}");
            last = err;
        }
        prop_assert!(last < 2e-6);
    }
}
