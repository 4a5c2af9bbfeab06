use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use qpu_twin::device::DeviceDescription;
use qpu_twin::dynamics::{propagator, resonant_amplitude, CzConfig};
use qpu_twin::flux::{characterize, verify, ClosedLoopConfig, PulseWaveform};
use qpu_twin::rb::{clifford_group_c2, run_rb, sample_c2, Experiment, NoiseModel, RbSettings};
use qpu_twin::readout::simulate_shots;
use qpu_twin::{build_hamiltonian, diagonalize, FluxPoint};

fn spectrum(c: &mut Criterion) {
    let d = DeviceDescription::builtin("device-a").unwrap();
    let chain = d.qubits[0].chain();
    c.bench_function("chain hamiltonian build + diagonalize", |b| {
        b.iter(|| diagonalize(&build_hamiltonian(black_box(&chain), FluxPoint::new(0.2)).unwrap()))
    });
}

fn readout(c: &mut Criterion) {
    let d = DeviceDescription::builtin("device-b").unwrap();
    let q = d.qubit("q2").unwrap();
    let modes = q.readout_modes().unwrap();
    let cfg = qpu_twin::readout::ReadoutConfig { shots: 1000, ..q.readout_config().unwrap() };
    c.bench_function("readout 3x1000 shots", |b| b.iter(|| simulate_shots(&modes, black_box(&cfg), q.t1_us).unwrap()));
}

fn flux(c: &mut Criterion) {
    let d = DeviceDescription::builtin("device-a").unwrap();
    let line = d.flux_line.transfer_function();
    let map = d.qubits[0].flux_map().unwrap();
    let cfg = ClosedLoopConfig::default();
    let ch = characterize(&line, &map, &cfg).unwrap();
    c.bench_function("flux closed-loop verify", |b| {
        b.iter(|| verify(&line, Some(black_box(&ch.predistortion)), &map, &cfg).unwrap())
    });
}

fn dynamics(c: &mut Criterion) {
    let d = DeviceDescription::builtin("device-a").unwrap();
    let pair = d.pair(&d.couplers[0]).unwrap();
    let amp = resonant_amplitude(&pair, 0.0).unwrap_or(0.3);
    let n = (CzConfig::default().half_range_ns.1 / pair.sample_period_ns) as usize;
    let q1 = PulseWaveform::new(vec![0.0; n], pair.sample_period_ns).unwrap();
    let q2 = PulseWaveform::new(vec![amp; n], pair.sample_period_ns).unwrap();
    c.bench_function("pair propagator", |b| b.iter(|| propagator(&pair, [black_box(&q1), &q2]).unwrap()));
}

fn benchmarking(c: &mut Criterion) {
    let c2 = clifford_group_c2();
    let mut k = 0u64;
    c.bench_function("c2 sample + compose + lookup", |b| {
        b.iter(|| {
            k += 2;
            let (x, y) = (sample_c2(k), sample_c2(k + 1));
            c2.lookup(&x.tableau.then(&y.tableau))
        })
    });
    let set = RbSettings { lengths: vec![1, 4, 16, 64], randomizations: 4, shots: 200, seed: 1 };
    c.bench_function("two-qubit depolarizing rb", |b| {
        b.iter(|| run_rb(&NoiseModel::Depolarizing { p: 0.98 }, &Experiment::Two { interleave: None }, black_box(&set)).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = spectrum, readout, flux, dynamics, benchmarking
}
criterion_main!(benches);
