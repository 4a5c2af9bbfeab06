use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{average_gate_fidelity, basis_state, lindblad_superop, propagator, unvec_rho, vec_rho, DuffingPair, Rates, C64};
use crate::error::{invalid, Error, Result};
use crate::flux::{net_zero_from_half, PulseWaveform};
use crate::numeric::{levenberg_marquardt, minimize, wrap_phase, LsqOptions, NelderMeadOptions};
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectroscopyLines {
    /// Flux offsets applied to qubit 2.
    pub flux: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Fitted splitting 2J and its standard error, GHz.
    pub two_j: f64,
    pub two_j_err: f64,
}

/// Eigenfrequencies of the one-excitation block while qubit 2 is swept
/// across qubit 1, with optional Gaussian noise (GHz) on each line, and a
/// hyperbola fit of the splitting.
pub fn spectroscopy_lines(pair: &DuffingPair, flux: &[f64], noise_ghz: f64, seed: u64) -> Result<SpectroscopyLines> {
    pair.validate()?;
    if flux.len() < 4 {
        return Err(invalid("spectroscopy sweep needs at least four points"));
    }
    if !(noise_ghz >= 0.0) {
        return Err(invalid("noise must be non-negative"));
    }
    let f1 = pair.qubits[0].idle_frequency();
    let j = pair.j_qq;
    let f2: Vec<f64> = flux.iter().map(|&d| pair.qubits[1].frequency_at(d)).collect();
    let mut lower = Vec::with_capacity(flux.len());
    let mut upper = Vec::with_capacity(flux.len());
    for (k, &f) in f2.iter().enumerate() {
        let m = 0.5 * (f1 + f);
        let r = (0.25 * (f - f1).powi(2) + j * j).sqrt();
        let mut rng = stream(seed, k as u64);
        let n1: f64 = rng.sample(StandardNormal);
        let n2: f64 = rng.sample(StandardNormal);
        lower.push(m - r + noise_ghz * n1);
        upper.push(m + r + noise_ghz * n2);
    }
    let split: Vec<f64> = upper.iter().zip(&lower).map(|(u, l)| u - l).collect();
    let imin = split
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    if imin == 0 || imin == split.len() - 1 {
        return Err(Error::NoCrossing { index: imin });
    }
    // Splitting² = (f2 − f1 − c)² + s with s = (2J)².
    let s0 = split[imin].powi(2);
    let fit = levenberg_marquardt(
        |p| {
            f2.iter()
                .zip(&split)
                .map(|(f, y)| ((f - f1 - p[0]).powi(2) + p[1]).max(0.0).sqrt() - y)
                .collect()
        },
        &[0.0, s0.max(1e-10)],
        &LsqOptions::default(),
    )?;
    let s = fit.params[1];
    let sigma_s = fit.scaled_std_errors()[1];
    let two_j = s.max(0.0).sqrt();
    let two_j_err = if s > sigma_s { sigma_s / (2.0 * two_j) } else { sigma_s.sqrt() };
    Ok(SpectroscopyLines {
        flux: flux.to_vec(),
        lower,
        upper,
        two_j,
        two_j_err,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChevronMap {
    pub durations_ns: Vec<f64>,
    /// Flux amplitudes applied to qubit 2.
    pub amplitudes: Vec<f64>,
    /// Ground-state population of qubit 1, indexed `[amplitude][duration]`.
    pub p_ground: Vec<Vec<f64>>,
}

impl ChevronMap {
    /// Swap-and-return period along one amplitude column: the fitted T of
    /// A·sin²(π·t/T) + B.
    pub fn recovery_time(&self, amplitude_index: usize) -> Result<f64> {
        let col = self
            .p_ground
            .get(amplitude_index)
            .ok_or_else(|| invalid("amplitude index out of range"))?;
        let t = &self.durations_ns;
        let span = t.iter().cloned().fold(0.0, f64::max);
        if t.len() < 4 || !(span > 0.0) {
            return Err(invalid("recovery time needs at least four durations"));
        }
        // Start from the period whose sin² profile best explains the column,
        // with amplitude and offset solved linearly.
        let step = span / (t.len() - 1) as f64;
        let mut start = (f64::INFINITY, [0.0, span, 0.0]);
        for k in 0..2000 {
            let period = 2.0 * step * (2.0 * span / (2.0 * step)).powf(k as f64 / 1999.0);
            let s: Vec<f64> = t.iter().map(|t| (PI * t / period).sin().powi(2)).collect();
            let n = s.len() as f64;
            let (ms, my) = (s.iter().sum::<f64>() / n, col.iter().sum::<f64>() / n);
            let sxx: f64 = s.iter().map(|x| (x - ms).powi(2)).sum();
            if sxx <= 0.0 {
                continue;
            }
            let a = s.iter().zip(col).map(|(x, y)| (x - ms) * (y - my)).sum::<f64>() / sxx;
            let b = my - a * ms;
            let r: f64 = s.iter().zip(col).map(|(x, y)| (a * x + b - y).powi(2)).sum();
            if r < start.0 {
                start = (r, [a, period, b]);
            }
        }
        let fit = levenberg_marquardt(
            |p| {
                t.iter()
                    .zip(col)
                    .map(|(t, y)| p[0] * (PI * t / p[1]).sin().powi(2) + p[2] - y)
                    .collect()
            },
            &start.1,
            &LsqOptions::default(),
        )?;
        Ok(fit.params[1].abs())
    }
}

/// Qubit 2 flux offset that brings its ef transition onto qubit 1's ge
/// transition, with qubit 1 held at offset `q1_flux`.
pub fn resonant_amplitude(pair: &DuffingPair, q1_flux: f64) -> Result<f64> {
    let target = pair.qubits[0].frequency_at(q1_flux) - pair.qubits[1].anharmonicity;
    let q2 = &pair.qubits[1];
    q2.flux_map.flux_for_detuning(q2.idle_phi, target - q2.idle_frequency())
}

/// Square-pulse chevron from |ee⟩: qubit 1 held at `q1_flux`, qubit 2 at
/// each amplitude for each duration (rounded to whole samples).
pub fn chevron_scan(pair: &DuffingPair, q1_flux: f64, durations_ns: &[f64], amplitudes: &[f64]) -> Result<ChevronMap> {
    pair.validate()?;
    if durations_ns.is_empty() || amplitudes.is_empty() {
        return Err(invalid("chevron grids must be non-empty"));
    }
    if durations_ns.iter().any(|d| !(*d >= 0.0)) {
        return Err(invalid("durations must be non-negative"));
    }
    let dt = pair.sample_period_ns;
    let l2 = pair.qubits[1].levels;
    let psi0 = basis_state(pair, 1, 1);
    let p_ground = amplitudes
        .par_iter()
        .map(|&a| -> Result<Vec<f64>> {
            // Populations do not depend on the frame, so the common frame is used throughout.
            let step = pair.common_step([q1_flux, a])?;
            let mut out = Vec::with_capacity(durations_ns.len());
            for &d in durations_ns {
                let n = (d / dt).round() as usize;
                let mut psi: DVector<C64> = psi0.clone();
                for _ in 0..n {
                    psi = &step * psi;
                }
                out.push((0..l2).map(|j| psi[j].norm_sqr()).sum());
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChevronMap {
        durations_ns: durations_ns.to_vec(),
        amplitudes: amplitudes.to_vec(),
        p_ground,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CzConfig {
    /// Search window for the erf edge width, ns.
    pub sigma_range_ns: (f64, f64),
    pub sigma_points: usize,
    /// Buffer before and after the flux pulse, ns each.
    pub buffer_ns: f64,
    pub phase_weight: f64,
    pub leakage_weight: f64,
    /// Weight on residual |ge⟩ ↔ |eg⟩ exchange.
    pub exchange_weight: f64,
    /// Half-duration search window for the coarse grid, ns.
    pub half_range_ns: (f64, f64),
    /// Detuning window of qubit 2 around resonance for the coarse grid, GHz.
    pub detuning_window: f64,
    pub detuning_points: usize,
    pub max_evals: usize,
    /// Simplex starts per half-duration.
    pub restarts: usize,
    /// Coarse objective below which a half-duration is refined.
    pub coarse_accept: f64,
    pub threshold: f64,
}

impl Default for CzConfig {
    fn default() -> Self {
        Self {
            sigma_range_ns: (0.5, 2.5),
            sigma_points: 9,
            buffer_ns: 20.0,
            phase_weight: 1.0,
            leakage_weight: 1.0,
            exchange_weight: 1.0,
            half_range_ns: (20.0, 45.0),
            detuning_window: 0.01,
            detuning_points: 11,
            max_evals: 800,
            restarts: 3,
            coarse_accept: 0.5,
            threshold: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub conditional_phase: f64,
    pub leakage: f64,
    pub exchange: f64,
    /// Single-qubit dynamic phases of qubit 1 and qubit 2.
    pub dynamic_phases: [f64; 2],
    /// Virtual-Z corrections applied after the pulse.
    pub virtual_z: [f64; 2],
    pub total_duration_ns: f64,
    pub objective: f64,
    /// Average gate error with noise, when noise was supplied.
    pub gate_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CzPulse {
    pub q1: PulseWaveform,
    pub q2: PulseWaveform,
    pub half_duration_ns: f64,
    pub edge_sigma_ns: f64,
    /// Plateau detuning of qubit 2 from its idle frequency, GHz.
    pub q2_detuning: f64,
    pub q1_amplitude: f64,
    pub q2_amplitude: f64,
}

fn edge_shape(half_ns: f64, sigma: f64, dt: f64) -> Vec<f64> {
    let n = (half_ns / dt).ceil().max(1.0) as usize;
    let e = 3.0 * sigma;
    let s = std::f64::consts::SQRT_2 * sigma;
    (0..n)
        .map(|k| {
            let t = (k as f64 + 0.5) * dt;
            0.5 * (libm::erf((t - e) / s) + libm::erf((half_ns - e - t) / s))
        })
        .collect()
}

/// Net-zero flux pulses for both qubits: each half is an erf-edged
/// plateau of the given amplitude, the second half negated.
pub fn cz_waveforms(pair: &DuffingPair, q1_amplitude: f64, q2_amplitude: f64, half_ns: f64, sigma: f64) -> Result<[PulseWaveform; 2]> {
    let shape = edge_shape(half_ns, sigma, pair.sample_period_ns);
    let h1: Vec<f64> = shape.iter().map(|s| q1_amplitude * s).collect();
    let h2: Vec<f64> = shape.iter().map(|s| q2_amplitude * s).collect();
    Ok([
        net_zero_from_half(&h1, pair.sample_period_ns)?,
        net_zero_from_half(&h2, pair.sample_period_ns)?,
    ])
}

/// Computational-subspace indices gg, ge, eg, ee.
fn computational(pair: &DuffingPair) -> [usize; 4] {
    [pair.index(0, 0), pair.index(0, 1), pair.index(1, 0), pair.index(1, 1)]
}

struct CzEval {
    phase: f64,
    leakage: f64,
    /// Population exchanged between computational states, averaged.
    exchange: f64,
    dynamic: [f64; 2],
}

fn evaluate(u: &DMatrix<C64>, comp: &[usize; 4]) -> CzEval {
    let arg = |k: usize| u[(comp[k], comp[k])].arg();
    let phase = wrap_phase(arg(3) - arg(2) - arg(1) + arg(0));
    let mut kept = 0.0;
    let mut exchange = 0.0;
    for &r in comp {
        for &c in comp {
            let p = u[(r, c)].norm_sqr();
            kept += p;
            if r != c {
                exchange += p;
            }
        }
    }
    CzEval {
        phase,
        leakage: (1.0 - kept / 4.0).clamp(0.0, 1.0),
        exchange: exchange / 4.0,
        dynamic: [wrap_phase(arg(2) - arg(0)), wrap_phase(arg(1) - arg(0))],
    }
}

/// Calibrates the net-zero CZ: qubit 1 is pulsed to the interaction
/// frequency; qubit 2's plateau detuning, the half-duration and the edge
/// width are tuned so that |ee⟩ completes one round trip through |gf⟩
/// with conditional phase π. The edge width sets the phase picked up by
/// |gf⟩ while both qubits pass through idle between the two halves. Half
/// durations are whole numbers of samples.
pub fn calibrate_cz(pair: &DuffingPair, noise: Option<&[Rates; 2]>, cfg: &CzConfig) -> Result<(GateReport, CzPulse)> {
    pair.validate()?;
    let dt = pair.sample_period_ns;
    let (s_lo, s_hi) = cfg.sigma_range_ns;
    let (h_lo, h_hi) = cfg.half_range_ns;
    if !(s_lo > 0.0 && s_hi >= s_lo && h_hi > h_lo && h_lo > 0.0) {
        return Err(invalid("invalid CZ search configuration"));
    }
    let q1 = &pair.qubits[0];
    let q2 = &pair.qubits[1];
    let q1_amp = q1
        .flux_map
        .flux_for_detuning(q1.idle_phi, pair.interaction_frequency - q1.idle_frequency())?;
    let resonant = pair.interaction_frequency - q2.anharmonicity - q2.idle_frequency();
    let comp = computational(pair);

    // x = [qubit 2 detuning, edge sigma]; the half-duration is n·dt.
    let run = |x: &[f64], n: usize| -> Result<(CzEval, [PulseWaveform; 2], f64)> {
        let a2 = q2.flux_map.flux_for_detuning(q2.idle_phi, x[0])?;
        let w = cz_waveforms(pair, q1_amp, a2, n as f64 * dt, x[1])?;
        let u = propagator(pair, [&w[0], &w[1]])?;
        Ok((evaluate(&u, &comp), w, a2))
    };
    let objective = |e: &CzEval| {
        cfg.phase_weight * wrap_phase(e.phase - PI).powi(2) + cfg.leakage_weight * e.leakage + cfg.exchange_weight * e.exchange
    };
    let score = |x: &[f64], n: usize| {
        if !(x[1] >= s_lo && x[1] <= s_hi) {
            return f64::INFINITY;
        }
        run(x, n).map(|r| objective(&r.0)).unwrap_or(f64::INFINITY)
    };

    let lin = |lo: f64, hi: f64, m: usize, i: usize| if m <= 1 { 0.5 * (lo + hi) } else { lo + (hi - lo) * i as f64 / (m - 1) as f64 };
    let nd = cfg.detuning_points.max(1);
    let ns = cfg.sigma_points.max(1);
    let n_lo = (h_lo / dt).ceil().max(1.0) as usize;
    let n_hi = (h_hi / dt).floor() as usize;
    let mut grid = Vec::new();
    for n in n_lo..=n_hi {
        for i in 0..nd {
            for k in 0..ns {
                grid.push(([resonant + lin(-cfg.detuning_window, cfg.detuning_window, nd, i), lin(s_lo, s_hi, ns, k)], n));
            }
        }
    }
    let mut coarse: Vec<(f64, [f64; 2], usize)> = grid.par_iter().map(|(x, n)| (score(x, *n), *x, *n)).collect();
    coarse.sort_by(|a, b| a.0.total_cmp(&b.0));
    if coarse.is_empty() || !coarse[0].0.is_finite() {
        return Err(invalid("CZ search grid has no valid point"));
    }

    let step = [
        (cfg.detuning_window / nd.max(2) as f64).max(1e-4),
        ((s_hi - s_lo) / ns.max(2) as f64).max(0.05),
    ];
    let opts = NelderMeadOptions {
        max_evals: cfg.max_evals,
        f_tol: 1e-18,
        x_tol: 1e-10,
    };
    // The shortest half-duration that meets the threshold wins: every
    // later round trip also closes, but costs coherence.
    let mut candidates: Vec<usize> = coarse.iter().filter(|c| c.0 < cfg.coarse_accept).map(|c| c.2).collect();
    candidates.sort_unstable();
    candidates.dedup();
    let mut best: Option<(f64, [f64; 2], usize)> = None;
    for &n in &candidates {
        let starts: Vec<[f64; 2]> = coarse.iter().filter(|c| c.2 == n).take(cfg.restarts.max(1)).map(|c| c.1).collect();
        let found = starts
            .par_iter()
            .map(|x0| minimize(|x| score(x, n), x0, &step, &opts))
            .min_by(|a, b| a.value.total_cmp(&b.value));
        if let Some(m) = found {
            if best.as_ref().map_or(true, |b| m.value < b.0) {
                best = Some((m.value, [m.x[0], m.x[1]], n));
            }
            if m.value <= cfg.threshold {
                break;
            }
        }
    }
    let (_, x_best, n_best) = best.unwrap_or((coarse[0].0, coarse[0].1, coarse[0].2));
    let (eval, waves, a2) = run(&x_best, n_best)?;
    let value = objective(&eval);
    if !(value <= cfg.threshold) {
        return Err(Error::CalibrationFailed {
            objective: value,
            threshold: cfg.threshold,
        });
    }
    let virtual_z = [-eval.dynamic[0], -eval.dynamic[1]];
    let total = waves[0].duration_ns() + 2.0 * cfg.buffer_ns;
    let gate_error = match noise {
        Some(rates) => Some(cz_gate_error(pair, [&waves[0], &waves[1]], rates, virtual_z)?),
        None => None,
    };
    let report = GateReport {
        conditional_phase: eval.phase,
        leakage: eval.leakage,
        exchange: eval.exchange,
        dynamic_phases: eval.dynamic,
        virtual_z,
        total_duration_ns: total,
        objective: value,
        gate_error,
    };
    let pulse = CzPulse {
        q1: waves[0].clone(),
        q2: waves[1].clone(),
        half_duration_ns: n_best as f64 * dt,
        edge_sigma_ns: x_best[1],
        q2_detuning: x_best[0],
        q1_amplitude: q1_amp,
        q2_amplitude: a2,
    };
    Ok((report, pulse))
}

/// Diagonal phase gate diag(e^{iθ·n₁}, e^{iθ·n₂}) on the full pair space.
fn phase_gate(pair: &DuffingPair, phases: [f64; 2]) -> DVector<C64> {
    let (l1, l2) = pair.dims();
    DVector::from_fn(l1 * l2, |k, _| {
        let (i, j) = (k / l2, k % l2);
        C64::from_polar(1.0, phases[0] * i as f64 + phases[1] * j as f64)
    })
}

/// Virtual-Z corrected unitary of the pulse.
pub fn corrected_cz_unitary(pair: &DuffingPair, waves: [&PulseWaveform; 2], virtual_z: [f64; 2]) -> Result<DMatrix<C64>> {
    let u = propagator(pair, waves)?;
    let z = phase_gate(pair, virtual_z);
    Ok(DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| z[i] * u[(i, j)]))
}

/// Average error of the virtual-Z corrected pulse against an ideal CZ,
/// under the given decoherence rates.
pub fn cz_gate_error(pair: &DuffingPair, waves: [&PulseWaveform; 2], rates: &[Rates; 2], virtual_z: [f64; 2]) -> Result<f64> {
    let comp = computational(pair);
    let d = pair.dim();
    let z = phase_gate(pair, virtual_z);
    let ideal = DMatrix::from_diagonal(&DVector::from_vec(vec![
        C64::new(1.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(-1.0, 0.0),
    ]));
    let s = lindblad_superop(pair, waves, rates)?;
    let f = average_gate_fidelity(
        |x| {
            let y = unvec_rho(&(&s * vec_rho(x)), d);
            DMatrix::from_fn(d, d, |r, c| z[r] * y[(r, c)] * z[c].conj())
        },
        &ideal,
        &comp,
        d,
    );
    Ok(1.0 - f)
}
