use nalgebra::{Complex, DMatrix, DVector};
use qpu_twin::readout::*;
use qpu_twin::spectrum::*;

type C64 = Complex<f64>;

fn chain(ej: f64, ec: f64, asym: f64, g: f64, wr: f64, wp: f64, j: f64, kp: f64) -> ChainParams {
    ChainParams {
        transmon: TransmonParams::new(ej, ec, asym),
        omega_r_bare: wr,
        omega_p: wp,
        g_qr: g,
        j_rp: j,
        kappa_p: kp,
        kappa_int: 0.0,
        n_r: 5,
        n_p: 5,
    }
}

fn b1() -> ReadoutModes {
    let c = chain(25.44, 0.154, 0.67, 0.13979, 6.70799, 6.707, 0.016, 0.0377);
    ReadoutModes::from_chain(&c, FluxPoint::new(0.24314)).unwrap()
}

fn b2() -> ReadoutModes {
    let c = chain(30.0, 0.156, 0.6, 0.11471, 7.07284, 7.116, 0.0193, 0.0434);
    ReadoutModes::from_chain(&c, FluxPoint::new(0.06073)).unwrap()
}

fn modes(delta_mhz: f64, j_mhz: f64, kp_mhz: f64) -> ReadoutModes {
    let wp = 7.0;
    ReadoutModes {
        omega_r: [wp + delta_mhz * 1e-3; 3],
        omega_p: wp,
        j_rp: j_mhz * 1e-3,
        kappa_p: kp_mhz * 1e-3,
        kappa_int: 0.0,
    }
}

#[test]
fn linewidths_of_aligned_pairs() {
    for (d, j, k, want) in [(21.0, 16.0, 37.7, 7.5), (-19.0, 19.3, 43.4, 11.2)] {
        let m = modes(d, j, k);
        let h = hybridized_linewidths(&m, QubitState::G).unwrap();
        assert!((h.kappa_r_eff * 1e3 - want).abs() <= 0.3, "{}", h.kappa_r_eff * 1e3);
        assert!((h.kappa_r_eff + h.kappa_p_eff - m.kappa_p).abs() < 1e-9);
        assert!(h.resonator_weight > 0.5);
    }
}

/// Poles of S21 from a linear rational fit S·D = N with D monic quadratic.
fn fitted_poles(grid: &[f64], s: &[C64], center: f64) -> [C64; 2] {
    let scale = 0.01;
    let mut a = DMatrix::<C64>::zeros(grid.len(), 5);
    let mut b = DVector::<C64>::zeros(grid.len());
    for (k, (&w, &v)) in grid.iter().zip(s).enumerate() {
        let x = C64::new((w - center) / scale, 0.0);
        // S·(x² + d1 x + d0) = n2 x² + n1 x + n0
        a[(k, 0)] = v * x;
        a[(k, 1)] = v;
        a[(k, 2)] = -x * x;
        a[(k, 3)] = -x;
        a[(k, 4)] = C64::new(-1.0, 0.0);
        b[k] = -v * x * x;
    }
    let sol = a.svd(true, true).solve(&b, 1e-14).unwrap();
    let (d1, d0) = (sol[0], sol[1]);
    let disc = (d1 * d1 - d0 * 4.0).sqrt();
    [(-d1 + disc) / 2.0, (-d1 - disc) / 2.0].map(|r| r * scale + center)
}

#[test]
fn transmission_dips_match_hybridized_widths() {
    let m = b1();
    for s in QubitState::ALL {
        let h = hybridized_linewidths(&m, s).unwrap();
        let grid: Vec<f64> = (0..801).map(|k| 6.64 + k as f64 * 1.5e-4).collect();
        let spec = transmission_s21(&m, s, &grid);
        let poles = fitted_poles(&grid, &spec, 6.72);
        let widths = poles.map(|p| -2.0 * p.im);
        let r = if (poles[0].re - h.omega_r_like).abs() < (poles[1].re - h.omega_r_like).abs() { 0 } else { 1 };
        assert!((widths[r] - h.kappa_r_eff).abs() < 0.02 * h.kappa_r_eff, "{widths:?} vs {h:?}");
        assert!((widths[1 - r] - h.kappa_p_eff).abs() < 0.02 * h.kappa_p_eff, "{widths:?} vs {h:?}");
    }
}

#[test]
fn ground_excited_dip_shift() {
    let m = b1();
    let g = hybridized_linewidths(&m, QubitState::G).unwrap();
    let e = hybridized_linewidths(&m, QubitState::E).unwrap();
    let two_chi = (e.omega_r_like - g.omega_r_like) * 1e3;
    assert!((two_chi + 4.4).abs() < 0.1, "{two_chi}");
    assert!((g.kappa_r_eff * 1e3 - 7.5).abs() < 0.3);
    assert!((m.omega_r[0] - 6.728).abs() < 5e-4);
}

#[test]
fn decoupled_filter_shows_single_notch() {
    let mut m = modes(21.0, 0.0, 37.7);
    m.kappa_int = 1e-4;
    let grid: Vec<f64> = (0..2001).map(|k| 6.9 + k as f64 * 1e-4).collect();
    let s = transmission_s21(&m, QubitState::G, &grid);
    let (kmin, _) = s.iter().enumerate().min_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).unwrap();
    assert!((grid[kmin] - m.omega_p).abs() < 1e-9);
    // Resonator frequency: no feature at all.
    let at_r = transmission_s21(&m, QubitState::G, &[m.omega_r[0]]);
    let lorentz = 1.0 - (m.kappa_p / 2.0) / C64::new(m.kappa_p / 2.0, m.omega_p - m.omega_r[0]);
    assert!((at_r[0] - lorentz).norm() < 1e-15);
}

#[test]
fn probe_between_shifted_lorentzians() {
    // Resonator alone on the feedline: J large against a broad filter is not
    // needed; use a decoupled notch whose frequency moves with state.
    let base = 7.0;
    let chi = -0.002;
    let lor = |w0: f64, grid: &[f64]| -> Vec<C64> {
        grid.iter().map(|&w| C64::new(1.0, 0.0) - 0.0025 / C64::new(0.0025, w0 - w)).collect()
    };
    let grid: Vec<f64> = (0..4001).map(|k| 6.98 + k as f64 * 1e-5).collect();
    let g = lor(base, &grid);
    let e = lor(base + 2.0 * chi, &grid);
    let f = lor(base + 3.5 * chi, &grid);
    let probe = optimal_probe_frequency(&grid, [&g, &e, &f]).unwrap();
    assert!(probe > base + 2.0 * chi - 1e-4 && probe < base + 1e-4, "{probe}");
    // Brute force over the grid agrees.
    let score = |k: usize| (g[k].norm() - e[k].norm()).abs() + (e[k].norm() - f[k].norm()).abs();
    let best = (0..grid.len()).max_by(|&a, &b| score(a).total_cmp(&score(b)).then(b.cmp(&a))).unwrap();
    assert_eq!(probe, grid[best]);
}

#[test]
fn device_b2_probe_near_resonator() {
    let m = b2();
    let model = ReadoutModel::new(&m, &ReadoutConfig::default()).unwrap();
    assert!((model.probe_frequency - 7.10).abs() < 0.03, "{}", model.probe_frequency);
}

fn quiet(shots: usize) -> ReadoutConfig {
    ReadoutConfig {
        drive_amplitude: 20.0,
        eta: 1.0,
        shots,
        residual_excited: 0.0,
        ..ReadoutConfig::default()
    }
}

#[test]
fn noiseless_limit_is_near_perfect() {
    let shots = simulate_shots(&b2(), &quiet(2000), f64::INFINITY).unwrap();
    assert_eq!(shots.records.len(), 6000);
    let clf = fit_classifier(&shots).unwrap();
    let am = assignment_matrix(&shots, &clf, true).unwrap();
    assert!(am.mean_error() < 1e-4, "{am:?}");
    assert_eq!(am.discarded, [0.0; 3]);
}

#[test]
fn decay_during_integration_matches_jump_oracle() {
    let m = b2();
    let t1_us = 2.0;
    let cfg = quiet(10_000);
    let model = ReadoutModel::new(&m, &cfg).unwrap();
    let vg = integrate(&model.weights, &model.mean_trajectories[0]);
    let ve = integrate(&model.weights, &model.mean_trajectories[1]);
    let axis = ve - vg;
    let project = |v: C64| ((v - vg) * axis.conj()).re / axis.norm_sqr();
    // Latest jump sample that still lands on the ground side of the midpoint.
    let n = model.samples();
    let k_star = (1..=n)
        .take_while(|&k| project(integrate(&model.weights, &model.trajectory(&[(0, QubitState::E), (k, QubitState::G)]))) < 0.5)
        .last()
        .unwrap();
    let p = 1.0 - (-(k_star as f64) * model.dt / (t1_us * 1e3)).exp();

    let shots = simulate_shots(&m, &cfg, t1_us).unwrap();
    let e: Vec<&ShotRecord> = shots.records.iter().filter(|r| r.prepared == QubitState::E).collect();
    let low = e.iter().filter(|r| project(C64::new(r.i, r.q)) < 0.5).count() as f64 / e.len() as f64;
    let se = (p * (1.0 - p) / e.len() as f64).sqrt();
    assert!((low - p).abs() < 4.0 * se + 2e-3, "{low} vs {p}");
    // Jump probability over the whole window bounds the count from above.
    let whole = 1.0 - (-160.0 / (t1_us * 1e3)).exp();
    assert!(low < whole);
}

#[test]
fn classifier_recovers_generator_means() {
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;
    let truth = [[0.0, 0.0], [6.0, 0.0], [3.0, 5.0]];
    let sigma = 0.7;
    let n = 3000;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let records = (0..3 * n)
        .map(|k| {
            let s = k / n;
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            ShotRecord {
                prepared: QubitState::from_index(s),
                i: truth[s][0] + sigma * a,
                q: truth[s][1] + sigma * b,
                presel_i: 0.0,
                presel_q: 0.0,
            }
        })
        .collect();
    let shots = IQShotSet {
        records,
        probe_frequency: 7.0,
        sigma,
        snr: 0.0,
    };
    let clf = fit_classifier(&shots).unwrap();
    let tol = 3.0 * sigma / (n as f64).sqrt();
    for (c, t) in clf.components.iter().zip(truth) {
        assert!((c.mean[0] - t[0]).abs() < tol && (c.mean[1] - t[1]).abs() < tol, "{c:?}");
        assert!((c.cov[0][0] / (sigma * sigma) - 1.0).abs() < 0.1);
    }
    let again = fit_classifier(&shots).unwrap();
    assert_eq!(clf, again);
}

#[test]
fn preselection_removes_injected_population() {
    let m = b2();
    let base = ReadoutConfig {
        drive_amplitude: 6.0,
        shots: 10_000,
        residual_excited: 0.05,
        ..ReadoutConfig::default()
    };
    let shots = simulate_shots(&m, &base, 41.0).unwrap();
    let clf = fit_classifier(&shots).unwrap();
    let with = assignment_matrix(&shots, &clf, true).unwrap();
    let without = assignment_matrix(&shots, &clf, false).unwrap();
    for s in 0..3 {
        assert!((with.discarded[s] - 0.05).abs() < 0.01, "{:?}", with.discarded);
    }
    assert!(without.p[0][1] > 0.04, "{:?}", without.p);
    assert!(with.p[0][1] < 0.01, "{:?}", with.p);
}

#[test]
fn rows_are_stochastic() {
    let cfg = ReadoutConfig {
        shots: 1000,
        drive_amplitude: 2.0,
        ..ReadoutConfig::default()
    };
    let shots = simulate_shots(&b2(), &cfg, 41.0).unwrap();
    let clf = fit_classifier(&shots).unwrap();
    let am = assignment_matrix(&shots, &clf, true).unwrap();
    for r in 0..3 {
        assert_eq!(am.row_sum(r), 1.0);
        assert!(am.p[r].iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}

#[test]
fn trace_improves_as_noise_falls() {
    let m = b2();
    let mut last = 0.0;
    for eta in [0.05, 0.15, 0.5, 1.0] {
        let cfg = ReadoutConfig {
            shots: 2000,
            drive_amplitude: 2.0,
            eta,
            residual_excited: 0.0,
            ..ReadoutConfig::default()
        };
        let shots = simulate_shots(&m, &cfg, f64::INFINITY).unwrap();
        let am = assignment_matrix(&shots, &fit_classifier(&shots).unwrap(), false).unwrap();
        let trace = 3.0 * (1.0 - am.mean_error());
        assert!(trace > last, "eta {eta}: {trace} after {last}");
        last = trace;
    }
}

#[test]
fn classification_survives_iq_rotation() {
    let cfg = ReadoutConfig {
        shots: 3000,
        drive_amplitude: 2.0,
        ..ReadoutConfig::default()
    };
    let shots = simulate_shots(&b2(), &cfg, 41.0).unwrap();
    let base = assignment_matrix(&shots, &fit_classifier(&shots).unwrap(), true).unwrap();
    for theta in [0.4, 2.0, -2.9] {
        let rot = shots.rotated(theta);
        let am = assignment_matrix(&rot, &fit_classifier(&rot).unwrap(), true).unwrap();
        assert!((am.mean_error() - base.mean_error()).abs() <= 2.0 / 3000.0, "{theta}");
    }
}

#[test]
fn shots_independent_of_worker_count() {
    let cfg = ReadoutConfig {
        shots: 500,
        seed: 42,
        ..ReadoutConfig::default()
    };
    let m = b1();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate_shots(&m, &cfg, 57.0).unwrap())
    };
    assert_eq!(run(1), run(3));
    let other = simulate_shots(&m, &ReadoutConfig { seed: 43, ..cfg.clone() }, 57.0).unwrap();
    assert_ne!(run(1), other);
}

#[test]
fn doubling_shots_halves_entry_variance() {
    let m = b2();
    // A fixed classifier makes every entry a binomial proportion.
    let reference = ReadoutConfig {
        shots: 5000,
        seed: 1000,
        drive_amplitude: 1.5,
        ..ReadoutConfig::default()
    };
    let clf = fit_classifier(&simulate_shots(&m, &reference, 41.0).unwrap()).unwrap();
    let spread = |shots: usize| {
        let vals: Vec<f64> = (0..16)
            .map(|seed| {
                let cfg = ReadoutConfig {
                    shots,
                    seed,
                    drive_amplitude: 1.5,
                    ..ReadoutConfig::default()
                };
                let s = simulate_shots(&m, &cfg, 41.0).unwrap();
                assignment_matrix(&s, &clf, false).unwrap().p[1][1]
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64, mean)
    };
    let (v1, p1) = spread(500);
    let (v2, _) = spread(1000);
    let binomial = p1 * (1.0 - p1) / 500.0;
    // 15 degrees of freedom per variance estimate.
    assert!(v1 / binomial > 0.3 && v1 / binomial < 3.0, "{v1} vs {binomial}");
    let ratio = v1 / v2;
    assert!(ratio > 0.6 && ratio < 6.5, "{ratio}");
}
