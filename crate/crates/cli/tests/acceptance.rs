//! Acceptance suite: one PASS/FAIL line per criterion. Criteria listed in
//! `KNOWN_FAILURES` are reported but do not fail the run; see README.

use std::f64::consts::PI;
use std::path::Path;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use qpu_twin::device::DeviceDescription;
use qpu_twin::dynamics::*;
use qpu_twin::fit::{fit_chain, forward_model, FitOptions, FitParams, ModelTruncation, Observation, SpectralObservations};
use qpu_twin::flux::*;
use qpu_twin::rb::*;
use qpu_twin::readout::*;
use qpu_twin::spectrum::{build_hamiltonian, diagonalize, FluxPoint};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde_json::Value;

const KNOWN_FAILURES: [u32; 2] = [2, 10];

type Outcome = Result<Vec<String>, Vec<String>>;

/// Collects sub-check lines; the criterion passes when every check does.
#[derive(Default)]
struct Checks {
    lines: Vec<String>,
    ok: bool,
}

impl Checks {
    fn new() -> Self {
        Self { lines: Vec::new(), ok: true }
    }

    fn check(&mut self, pass: bool, line: String) {
        self.ok &= pass;
        self.lines.push(format!("{} {line}", if pass { "ok  " } else { "MISS" }));
    }

    fn finish(self) -> Outcome {
        if self.ok {
            Ok(self.lines)
        } else {
            Err(self.lines)
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn wrapped(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

fn device(name: &str) -> DeviceDescription {
    DeviceDescription::builtin(name).unwrap()
}

fn cli(out: &Path, args: &[&str]) -> i32 {
    let mut v: Vec<String> = std::iter::once("qpu-twin").chain(args.iter().copied()).map(String::from).collect();
    v.push("--out".into());
    v.push(out.display().to_string());
    qpu_twin_cli::run(v)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn linewidths() -> Outcome {
    let mut c = Checks::new();
    for (delta, j, kp, want) in [(21.0, 16.0, 37.7, 7.5), (-19.0, 19.3, 43.4, 11.2)] {
        let m = ReadoutModes {
            omega_r: [7.0 + delta * 1e-3; 3],
            omega_p: 7.0,
            j_rp: j * 1e-3,
            kappa_p: kp * 1e-3,
            kappa_int: 0.0,
        };
        let h = hybridized_linewidths(&m, QubitState::G).unwrap();
        let kr = h.kappa_r_eff * 1e3;
        c.check((kr - want).abs() <= 0.3, format!("Δ {delta} MHz: κ_r {kr:.3} MHz (target {want} ± 0.3)"));
        let sum = (h.kappa_r_eff + h.kappa_p_eff - m.kappa_p).abs();
        c.check(sum < 1e-9, format!("Δ {delta} MHz: |κ_r + κ_p − κ_p,bare| = {sum:.1e}"));
    }
    c.finish()
}

fn parameter_fit() -> Outcome {
    let mut c = Checks::new();
    let d = device("device-a");
    let reference = [("q1", 25.44, 0.154, 0.108), ("q2", 27.79, 0.154, 0.117), ("q3", 25.94, 0.161, 0.115)];
    for (name, ej, ec, g) in reference {
        let q = d.qubit(name).unwrap();
        let rep = fit_chain(&q.observations().unwrap(), &FitOptions::default()).unwrap();
        let p = rep.params;
        for (label, got, want) in [("E_J,max", p.ej_max, ej), ("E_c", p.ec, ec), ("g_qr", p.g_qr, g)] {
            let r = rel(got, want);
            c.check(r <= 0.03, format!("{name} {label}: {got:.5} GHz vs {want} ({:+.1}%)", 100.0 * (got - want) / want));
        }
    }
    // Noiseless observations from the forward model, truth drawn within ±30%.
    let mut rng = qpu_twin::rng::stream(2024, 0);
    let mut worst: f64 = 0.0;
    for (k, (name, ej, ec, g)) in reference.iter().cycle().take(6).enumerate() {
        let q = d.qubit(name).unwrap();
        let mut draw = |v: f64| v * rng.random_range(0.7..1.3);
        let truth = FitParams { ej_max: draw(*ej), ec: draw(*ec), asym: draw(q.asym).min(0.95), g_qr: draw(*g) };
        // Qubit lines at both sweet spots, anharmonicity and a resonator point.
        let template = SpectralObservations::standard(0.0, 0.0, Some(0.0), Some((0.5, 0.0)), q.omega_r_bare_ghz, q.omega_p_ghz, q.j_rp_ghz);
        let order = template.canonical();
        let values = forward_model(&truth, &template, &order, &ModelTruncation::default()).unwrap();
        let obs = SpectralObservations {
            observations: order.iter().zip(values).map(|(o, v)| Observation { value: v, ..*o }).collect(),
            ..template
        };
        let p = fit_chain(&obs, &FitOptions { seed: k as u64, ..FitOptions::default() }).unwrap().params;
        let err = [rel(p.ej_max, truth.ej_max), rel(p.ec, truth.ec), rel(p.asym, truth.asym), rel(p.g_qr, truth.g_qr)]
            .into_iter()
            .fold(0.0, f64::max);
        worst = worst.max(err);
    }
    c.check(worst < 0.005, format!("synthetic round trip, 6 draws: worst relative error {worst:.2e} (< 5e-3)"));
    c.finish()
}

fn interleaved_arithmetic() -> Outcome {
    let mut c = Checks::new();
    let start = Instant::now();
    let r = error_rates(p_from_epc(1.34e-2, 4), Some(p_from_epc(2.02e-2, 4)), 4, None).unwrap();
    let took = start.elapsed();
    let epg = r.epg.unwrap();
    c.check((6.4e-3..=7.4e-3).contains(&epg), format!("EPG {epg:.4e} in [6.4e-3, 7.4e-3]"));
    c.check(took < Duration::from_millis(1), format!("runtime {took:?} (< 1 ms)"));
    c.finish()
}

fn rb_oracle() -> Outcome {
    let mut c = Checks::new();
    let one = RbSettings { seed: 5, ..Default::default() };
    let curve = &run_rb(&NoiseModel::Depolarizing { p: 0.995 }, &Experiment::Single { qubit: 0 }, &one).unwrap()[0];
    let f = summarize(curve, 2, None, None).unwrap().fit;
    let z = (f.p - 0.995).abs() / f.p_err;
    c.check(z < 2.0, format!("1Q depolarizing p 0.995 → {:.6} ± {:.1e} ({z:.2}σ)", f.p, f.p_err));

    let p2 = p_from_epc(1.34e-2, 4);
    let two = RbSettings { lengths: vec![1, 2, 4, 8, 16, 32, 64, 128, 256], seed: 5, ..Default::default() };
    let curve = &run_rb(&NoiseModel::Depolarizing { p: p2 }, &Experiment::Two { interleave: None }, &two).unwrap()[0];
    let f = summarize(curve, 4, None, None).unwrap().fit;
    let z = (f.p - p2).abs() / f.p_err;
    c.check(z < 2.0, format!("2Q depolarizing p {p2:.6} → {:.6} ± {:.1e} ({z:.2}σ)", f.p, f.p_err));

    let set = RbSettings { lengths: vec![1, 2, 7, 32, 128], randomizations: 5, shots: 0, seed: 8 };
    let mut worst: f64 = 0.0;
    let experiments = [
        Experiment::Single { qubit: 0 },
        Experiment::Simultaneous,
        Experiment::Two { interleave: None },
        Experiment::Two { interleave: Some(CliffordElement::cz()) },
    ];
    for exp in &experiments {
        for curve in run_rb(&NoiseModel::Channels(ChannelModel::ideal()), exp, &set).unwrap() {
            for v in curve.survival.iter().flatten() {
                worst = worst.max((v - 1.0).abs());
            }
        }
    }
    c.check(worst < 1e-10, format!("noiseless survival: max |s − 1| = {worst:.1e}"));
    c.finish()
}

fn chevron_and_cz() -> Outcome {
    let mut c = Checks::new();
    let d = device("device-a");
    let pair = d.pair(&d.couplers[0]).unwrap();
    c.check((2.0 * pair.j_qq * 1e3 - 13.4).abs() < 1e-9, format!("programmed 2J {:.3} MHz", 2.0 * pair.j_qq * 1e3));
    let q1 = &pair.qubits[0];
    let q1_flux = q1
        .flux_map
        .flux_for_detuning(q1.idle_phi, pair.interaction_frequency - q1.idle_frequency())
        .unwrap();
    let res = resonant_amplitude(&pair, q1_flux).unwrap();
    let durations: Vec<f64> = (0..=240).map(|k| k as f64 * 0.5).collect();
    let t = chevron_scan(&pair, q1_flux, &durations, &[res]).unwrap().recovery_time(0).unwrap();
    let oracle = 1.0 / (2.0 * 2f64.sqrt() * pair.j_qq);
    c.check(rel(t, oracle) < 0.1, format!("chevron recovery {t:.2} ns vs π/(√2 J) = {oracle:.2} ns"));
    c.check(rel(t, 53.0) < 0.1, format!("chevron recovery {t:.2} ns vs 53 ns ± 10%"));

    let cfg = CzConfig { buffer_ns: d.gates.cz_buffer_ns, ..CzConfig::default() };
    let (report, _) = calibrate_cz(&pair, None, &cfg).unwrap();
    let dphi = wrapped(report.conditional_phase - PI).abs();
    c.check(dphi < 1e-3, format!("|φ_cond − π| = {dphi:.1e} rad"));
    c.check(report.leakage < 1e-4, format!("leakage {:.2e}", report.leakage));
    let total = report.total_duration_ns;
    c.check((total - 103.0).abs() <= 5.0, format!("total duration {total} ns (103 ± 5)"));
    c.finish()
}

fn cryoscope_loop() -> Outcome {
    let mut c = Checks::new();
    let d = device("device-a");
    let line = d.flux_line.transfer_function();
    let taus: Vec<f64> = line.iir_terms.iter().map(|t| t.tau_ns).collect();
    let span = taus.iter().cloned().fold(f64::INFINITY, f64::min)..=taus.iter().cloned().fold(0.0, f64::max);
    c.check(
        *span.start() <= 100.0 && *span.end() >= 100_000.0,
        format!("line time constants span {:.0} ns to {:.0} ns", span.start(), span.end()),
    );
    let map = d.qubits[0].flux_map().unwrap();
    let cfg = ClosedLoopConfig::default();
    let ch = characterize(&line, &map, &cfg).unwrap();
    let corrected = verify(&line, Some(&ch.predistortion), &map, &cfg).unwrap();
    let raw = verify(&line, None, &map, &cfg).unwrap();
    c.check(
        corrected.max_deviation_mhz < 1.0,
        format!(
            "pre-distorted: {:.4} MHz over a {} ns pulse at {} MHz depth",
            corrected.max_deviation_mhz,
            cfg.pulse_ns,
            cfg.depth_ghz * 1e3
        ),
    );
    c.check(raw.max_deviation_mhz > 3.0, format!("uncorrected: {:.2} MHz (> 3)", raw.max_deviation_mhz));
    c.finish()
}

fn avoided_crossing() -> Outcome {
    let mut c = Checks::new();
    let tmp = tempfile::TempDir::new().unwrap();
    let code = cli(tmp.path(), &["gate", "spectroscopy", "--noise-mhz", "0.1"]);
    c.check(code == 0, format!("gate spectroscopy exit {code}"));
    let s = read_json(&tmp.path().join("gate-q1-q2-spectroscopy-fit.json"));
    let (two_j, err) = (s["two_j_mhz"].as_f64().unwrap(), s["two_j_err_mhz"].as_f64().unwrap());
    c.check((two_j - 13.4).abs() <= 0.2, format!("2J {two_j:.3} ± {err:.3} MHz (13.4 ± 0.2)"));
    c.finish()
}

fn readout_statistics() -> Outcome {
    let mut c = Checks::new();
    let d = device("device-b");
    let q = d.qubit("q2").unwrap();
    let modes = q.readout_modes().unwrap();
    let cfg = q.readout_config().unwrap();
    c.check(cfg.shots == 10_000, format!("{} shots per state", cfg.shots));
    let shots = simulate_shots(&modes, &cfg, q.t1_us).unwrap();
    let am = assignment_matrix(&shots, &fit_classifier(&shots).unwrap(), true).unwrap();
    let e = am.mean_error();
    c.check((2e-3..=2e-2).contains(&e), format!("device B q2 mean assignment error {e:.3e} in [2e-3, 2e-2]"));
    let discard = am.total_discarded();
    c.check(discard < 0.01, format!("pre-selection discard {discard:.2e} (< 1e-2)"));
    let sums: Vec<f64> = (0..3).map(|r| am.row_sum(r)).collect();
    c.check(sums.iter().all(|&s| s == 1.0), format!("row sums {sums:?}"));

    let quiet = ReadoutConfig { eta: 1.0, drive_amplitude: 30.0, ..cfg };
    let shots = simulate_shots(&modes, &quiet, f64::INFINITY).unwrap();
    let am = assignment_matrix(&shots, &fit_classifier(&shots).unwrap(), true).unwrap();
    c.check(am.mean_error() < 1e-3, format!("noiseless limit error {:.2e} (< 1e-3)", am.mean_error()));
    c.finish()
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn property_suites() -> Outcome {
    let mut c = Checks::new();
    let mut rng = qpu_twin::rng::stream(99, 0);

    // spectrum-core
    let d = device("device-a");
    let mut herm: f64 = 0.0;
    let mut sorted = true;
    for q in &d.qubits {
        for _ in 0..4 {
            let h = build_hamiltonian(&q.chain(), FluxPoint::new(rng.random_range(-1.0..1.0))).unwrap();
            let scale = h.matrix.iter().map(|v| v.norm()).fold(0.0, f64::max);
            herm = herm.max(h.hermiticity_defect() / scale);
            sorted &= diagonalize(&h).energies.windows(2).all(|w| w[0] <= w[1]);
        }
    }
    c.check(herm < 1e-12 && sorted, format!("Hamiltonians Hermitian (defect {herm:.1e}), spectra real and ordered"));

    // qubit-dynamics
    let pair = d.pair(&d.couplers[0]).unwrap();
    let mut unit: f64 = 0.0;
    let mut trace: f64 = 0.0;
    let mut hermitian: f64 = 0.0;
    for _ in 0..4 {
        let n = rng.random_range(4..60);
        let mut w = || {
            let s: Vec<f64> = (0..n).map(|_| rng.random_range(-0.1..0.1)).collect();
            PulseWaveform::new(s, pair.sample_period_ns).unwrap()
        };
        let (a, b) = (w(), w());
        let u = propagator(&pair, [&a, &b]).unwrap();
        let dim = u.nrows();
        unit = unit.max(max_abs(&(u.adjoint() * &u - DMatrix::<C64>::identity(dim, dim))));
        let r = Rates::from_times(20.0, 15.0).unwrap();
        let mut psi = nalgebra::DVector::<C64>::zeros(dim);
        psi[pair.index(1, 1)] = C64::new(1.0, 0.0);
        let rho = lindblad_propagate(&pair, [&a, &b], &[r, r], &projector(&psi)).unwrap();
        trace = trace.max((rho.trace() - C64::new(1.0, 0.0)).norm());
        hermitian = hermitian.max(max_abs(&(&rho - rho.adjoint())));
    }
    c.check(unit < 1e-9, format!("propagators unitary (defect {unit:.1e})"));
    c.check(trace < 1e-9 && hermitian < 1e-9, format!("Lindblad trace defect {trace:.1e}, Hermiticity defect {hermitian:.1e}"));

    // flux-dsp
    let tf = TransferFunction::default_synthetic();
    let wave = |rng: &mut qpu_twin::rng::Stream| {
        PulseWaveform::new((0..400).map(|_| rng.random_range(-1.0..1.0)).collect(), tf.sample_period_ns).unwrap()
    };
    let (w1, w2) = (wave(&mut rng), wave(&mut rng));
    let (a, b) = (1.7, -0.4);
    let mix = PulseWaveform::new(w1.samples.iter().zip(&w2.samples).map(|(x, y)| a * x + b * y).collect(), tf.sample_period_ns).unwrap();
    let (o, o1, o2) = (apply_transfer(&mix, &tf).unwrap(), apply_transfer(&w1, &tf).unwrap(), apply_transfer(&w2, &tf).unwrap());
    let lin = (0..400).map(|k| (o.samples[k] - a * o1.samples[k] - b * o2.samples[k]).abs()).fold(0.0, f64::max);
    c.check(lin < 1e-12, format!("transfer linear (defect {lin:.1e})"));
    let line = tf.clone();
    let iir = invert_iir(line.dc_gain, &line.iir_terms, line.sample_period_ns).unwrap();
    let fir_only = TransferFunction { dc_gain: 1.0, iir_terms: vec![], ..line.clone() };
    let fir_taps = design_fir_inverse(&fir_only.step_response(64).unwrap(), 24, 1e-12).unwrap();
    let out = apply_transfer(&Predistortion { iir, fir_taps }.apply(&w1).unwrap(), &line).unwrap();
    let round = (1..400).map(|k| (out.samples[k] - w1.samples[k]).abs()).fold(0.0, f64::max);
    c.check(round < 1e-3, format!("IIR and FIR inverse round trip (defect {round:.1e})"));

    // benchmarking
    let c1 = clifford_group_c1();
    c.check(c1.len() == 24 && c1.distinct_tableaus() == 24, format!("|C1| = {}", c1.len()));
    let c2 = clifford_group_c2();
    let mut classes = [0usize; 4];
    for k in 0..c2.len() {
        classes[c2_class(k)] += 1;
    }
    c.check(classes == [576, 5184, 5184, 576], format!("C2 class sizes {classes:?}"));
    let closed = (0..200).all(|_| {
        let (x, y) = (rng.random_range(0..C2_ORDER), rng.random_range(0..C2_ORDER));
        c2.lookup(&c2.elements[x].tableau.then(&c2.elements[y].tableau)).is_some()
    });
    c.check(closed && c2.distinct_tableaus() == C2_ORDER, "C2 closed under sampled products".into());

    // cli-orchestrator
    for name in ["device-a", "device-b"] {
        let d = device(name);
        let toml = DeviceDescription::from_toml(&d.to_toml().unwrap()).unwrap();
        let json = DeviceDescription::from_json(&d.to_json().unwrap()).unwrap();
        c.check(toml == d && json == d, format!("{name} config round trip (TOML, JSON)"));
    }
    let tmp = tempfile::TempDir::new().unwrap();
    let (x, y) = (tmp.path().join("x"), tmp.path().join("y"));
    let args = ["readout", "matrix", "--config", "device-b", "--qubit", "q1", "--shots", "1000", "--seed", "3"];
    let codes = (cli(&x, &args), cli(&y, &args));
    let file = "readout-q1-assignment.json";
    let same = codes == (0, 0) && std::fs::read(x.join(file)).unwrap() == std::fs::read(y.join(file)).unwrap();
    c.check(same, "seeded CLI outputs byte-identical".into());
    c.finish()
}

fn coherence_substitutes() -> Outcome {
    let mut c = Checks::new();
    let seg = |t: f64, t1: f64, t2: f64| CoherenceSegment { duration_ns: t, t1_us: vec![t1], t2_us: vec![t2] };
    let limit = |t, t1, t2| coherence_limit(&[seg(t, t1, t2)]).unwrap();
    let mut monotone = limit(50.0, f64::INFINITY, f64::INFINITY) == 0.0;
    for t in [10.0, 50.0, 200.0] {
        for t1 in [20.0, 80.0] {
            for t2 in [0.2 * t1, t1, 1.6 * t1] {
                let base = limit(t, t1, t2);
                monotone &= limit(1.5 * t, t1, t2) > base && limit(t, 1.5 * t1, t2) < base && limit(t, t1, 1.2 * t2) < base;
            }
        }
    }
    c.check(monotone, "coherence limit monotone in duration, T1 and T2; zero without decoherence".into());

    let noise = QubitNoise { t1_us: 83.0, t2_star_us: 63.0, t2_echo_us: 109.0 };
    let times: Vec<f64> = (0..100).map(|k| k as f64 * 4000.0).collect();
    let r = relaxometry(RelaxometryKind::T1, &times, &noise, 0.0, &DriveModel::new(-0.159, 3)).unwrap();
    c.check(rel(r.fitted_time_us, 83.0) < 0.01, format!("synthetic T1 83 µs → {:.3} µs", r.fitted_time_us));
    let mut rng = qpu_twin::rng::stream(104, 0);
    let normal = Normal::new(83.0, 8.0).unwrap();
    let draws: Vec<f64> = (0..104).map(|_| normal.sample(&mut rng)).collect();
    let cdf = coherence_cdf(&draws).unwrap();
    let se = 1.2533 * 8.0 / 104f64.sqrt();
    c.check((cdf.median - 83.0).abs() < 3.0 * se, format!("104 synthetic T1 draws: median {:.2} µs", cdf.median));

    let d = device("device-a");
    for (name, want) in [("q1", 3.6e-4), ("q2", 5.0e-4)] {
        let q = d.qubit(name).unwrap();
        let e = limit(50.0, q.t1_us, q.t2_star_us);
        c.check(rel(e, want) < 0.3, format!("{name} single-qubit coherence limit {e:.3e} vs {want:.1e} (30% band)"));
    }

    let pair = d.pair(&d.couplers[0]).unwrap();
    let buffer = d.gates.cz_buffer_ns;
    let (report, pulse) = calibrate_cz(&pair, None, &CzConfig { buffer_ns: buffer, ..CzConfig::default() }).unwrap();
    let qs = [d.qubit("q1").unwrap(), d.qubit("q2").unwrap()];
    let t1: Vec<f64> = qs.iter().map(|q| q.t1_us).collect();
    let cz = coherence_limit(&[
        CoherenceSegment {
            duration_ns: report.total_duration_ns - 2.0 * buffer,
            t1_us: t1.clone(),
            t2_us: qs.iter().map(|q| q.t2_echo_us).collect(),
        },
        CoherenceSegment { duration_ns: 2.0 * buffer, t1_us: t1, t2_us: qs.iter().map(|q| q.t2_star_us).collect() },
    ])
    .unwrap();
    c.check(rel(cz, 8.9e-3) < 0.3, format!("CZ coherence limit {cz:.3e} vs 8.9e-3 (30% band)"));
    let rates = |kind| [qs[0].noise().rates(kind).unwrap(), qs[1].noise().rates(kind).unwrap()];
    let lindblad = cz_gate_error(&pair, [&pulse.q1, &pulse.q2], &rates(T2Kind::Echo), report.virtual_z).unwrap();
    c.check(
        (8.9e-3 / 2.0..=8.9e-3 * 2.0).contains(&lindblad),
        format!("CZ Lindblad error with median coherence {lindblad:.3e} vs 8.9e-3 (factor-2 band)"),
    );

    let tmp = tempfile::TempDir::new().unwrap();
    let code = cli(tmp.path(), &["bench", "rb1", "--model", "dynamics", "--simultaneous"]);
    let rec = read_json(&tmp.path().join("bench-rb1.json"));
    for (name, res) in ["q1", "q2"].iter().zip(rec["results"].as_array().unwrap()) {
        let epg = res["epg"].as_f64().unwrap();
        let q = d.qubit(name).unwrap();
        let e = limit(50.0, q.t1_us, q.t2_star_us);
        let ratio = epg / e;
        c.check(
            code == 0 && (0.5..=2.0).contains(&ratio),
            format!("{name} simultaneous RB on the dynamics model: EPG {epg:.3e}, {ratio:.2}× its coherence limit"),
        );
    }
    c.finish()
}

fn main() {
    let criteria: [(u32, &str, Duration, fn() -> Outcome); 10] = [
        (1, "hybridized linewidths", Duration::from_secs(1), linewidths),
        (2, "parameter-fit round trip", Duration::from_secs(120), parameter_fit),
        (3, "interleaved-RB arithmetic", Duration::from_secs(1), interleaved_arithmetic),
        (4, "RB oracle equivalence", Duration::from_secs(120), rb_oracle),
        (5, "chevron and CZ timing", Duration::from_secs(300), chevron_and_cz),
        (6, "cryoscope closed loop", Duration::from_secs(60), cryoscope_loop),
        (7, "avoided-crossing fit", Duration::from_secs(10), avoided_crossing),
        (8, "readout statistics", Duration::from_secs(60), readout_statistics),
        (9, "property suites", Duration::from_secs(300), property_suites),
        (10, "coherence substitutes", Duration::from_secs(300), coherence_substitutes),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut unexpected = Vec::new();
    for (id, name, budget, f) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err(vec!["MISS panicked".into()]));
        let took = start.elapsed();
        let in_time = took <= budget;
        let pass = outcome.is_ok() && in_time;
        let known = KNOWN_FAILURES.contains(&id);
        let note = match (pass, known) {
            (false, true) => " (known failure)",
            (true, true) => " (listed as a known failure)",
            _ => "",
        };
        println!(
            "criterion {id:>2}: {} {name} [{:.1} s, budget {} s]{note}",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            budget.as_secs()
        );
        let lines = match &outcome {
            Ok(l) | Err(l) => l,
        };
        for l in lines {
            println!("    {l}");
        }
        if !in_time {
            println!("    MISS runtime over budget");
        }
        if !pass && !known {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
