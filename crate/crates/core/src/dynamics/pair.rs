use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{kron, liouvillian, lowering, number, unitary_step, unvec_rho, vec_rho, C64, STEP_PHASE_LIMIT};
use crate::error::{invalid, Error, Result};
use crate::flux::PulseWaveform;
use crate::fluxmap::FluxMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitModel {
    pub anharmonicity: f64,
    pub levels: usize,
    pub flux_map: FluxMap,
    pub idle_phi: f64,
}

impl QubitModel {
    pub fn idle_frequency(&self) -> f64 {
        self.flux_map.frequency(self.idle_phi)
    }

    /// ge frequency with flux offset `d` applied.
    pub fn frequency_at(&self, d: f64) -> f64 {
        self.flux_map.frequency(self.idle_phi + d)
    }
}

/// Two transmons as Kerr oscillators with static exchange coupling. The
/// one-excitation splitting on resonance is 2·j_qq.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuffingPair {
    pub qubits: [QubitModel; 2],
    pub j_qq: f64,
    pub interaction_frequency: f64,
    pub sample_period_ns: f64,
}

impl DuffingPair {
    pub fn validate(&self) -> Result<()> {
        for q in &self.qubits {
            if q.levels < 2 {
                return Err(invalid("each qubit needs at least two levels"));
            }
            if !(q.anharmonicity < 0.0) {
                return Err(invalid("anharmonicity must be negative"));
            }
        }
        if !(self.j_qq >= 0.0 && self.j_qq.is_finite()) {
            return Err(invalid("j_qq must be non-negative"));
        }
        if !(self.sample_period_ns > 0.0) {
            return Err(invalid("sample period must be positive"));
        }
        Ok(())
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.qubits[0].levels, self.qubits[1].levels)
    }

    pub fn dim(&self) -> usize {
        self.qubits[0].levels * self.qubits[1].levels
    }

    /// Basis index of |i, j⟩ (qubit 1 level i, qubit 2 level j).
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.qubits[1].levels + j
    }

    /// Common frame frequency.
    pub(crate) fn frame(&self) -> f64 {
        0.5 * (self.qubits[0].idle_frequency() + self.qubits[1].idle_frequency())
    }

    fn operators(&self) -> PairOperators {
        let (l1, l2) = self.dims();
        let i1 = DMatrix::identity(l1, l1);
        let i2 = DMatrix::identity(l2, l2);
        let a1 = kron(&lowering(l1), &i2);
        let a2 = kron(&i1, &lowering(l2));
        let n1 = kron(&number(l1), &i2);
        let n2 = kron(&i1, &number(l2));
        let exchange = (a1.transpose() * &a2 + a1.clone() * a2.transpose()) * self.j_qq;
        let kerr = (&n1 * (&n1 - DMatrix::identity(l1 * l2, l1 * l2))) * (0.5 * self.qubits[0].anharmonicity)
            + (&n2 * (&n2 - DMatrix::identity(l1 * l2, l1 * l2))) * (0.5 * self.qubits[1].anharmonicity);
        PairOperators {
            a: [a1, a2],
            n: [n1, n2],
            static_part: exchange + kerr,
        }
    }

    /// Hamiltonian in GHz in the common frame, for qubit frequencies `f`.
    pub fn hamiltonian(&self, f: [f64; 2]) -> DMatrix<f64> {
        let ops = self.operators();
        ops.hamiltonian(f, self.frame())
    }

    /// Converts a common-frame operator over duration `t` into the idle
    /// rotating frames of both qubits.
    fn to_idle_frame(&self, ops: &PairOperators, t: f64) -> DVector<C64> {
        let wc = self.frame();
        let d = self.dim();
        DVector::from_fn(d, |k, _| {
            let phase: f64 = (0..2)
                .map(|q| (self.qubits[q].idle_frequency() - wc) * ops.n[q][(k, k)])
                .sum();
            C64::from_polar(1.0, 2.0 * std::f64::consts::PI * phase * t)
        })
    }

    fn check_trajectories(&self, traj: [&PulseWaveform; 2]) -> Result<usize> {
        self.validate()?;
        for w in traj {
            w.validate()?;
            if (w.sample_period_ns - self.sample_period_ns).abs() > 1e-12 {
                return Err(Error::SampleRateMismatch {
                    left: w.sample_period_ns,
                    right: self.sample_period_ns,
                });
            }
        }
        if traj[0].start_time_ns != traj[1].start_time_ns {
            return Err(invalid("flux trajectories must start at the same time"));
        }
        if traj[0].len() != traj[1].len() {
            return Err(invalid("flux trajectories must have equal length"));
        }
        Ok(traj[0].len())
    }

    /// One common-frame step with constant flux offsets.
    pub(crate) fn common_step(&self, flux: [f64; 2]) -> Result<DMatrix<C64>> {
        let f = [self.qubits[0].frequency_at(flux[0]), self.qubits[1].frequency_at(flux[1])];
        let h = self.operators().hamiltonian(f, self.frame());
        let dt = self.sample_period_ns;
        let phase = 2.0 * std::f64::consts::PI * spectral_bound(&h) * dt;
        if phase > STEP_PHASE_LIMIT {
            return Err(Error::StepTooLarge {
                phase,
                limit: STEP_PHASE_LIMIT,
            });
        }
        Ok(unitary_step(&h, dt))
    }

    fn frequencies(&self, traj: [&PulseWaveform; 2], k: usize) -> [f64; 2] {
        [
            self.qubits[0].frequency_at(traj[0].samples[k]),
            self.qubits[1].frequency_at(traj[1].samples[k]),
        ]
    }
}

struct PairOperators {
    a: [DMatrix<f64>; 2],
    n: [DMatrix<f64>; 2],
    static_part: DMatrix<f64>,
}

impl PairOperators {
    fn hamiltonian(&self, f: [f64; 2], wc: f64) -> DMatrix<f64> {
        &self.static_part + &self.n[0] * (f[0] - wc) + &self.n[1] * (f[1] - wc)
    }
}

fn spectral_bound(h: &DMatrix<f64>) -> f64 {
    (0..h.nrows())
        .map(|i| (0..h.ncols()).map(|j| h[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn key(f: [f64; 2]) -> (u64, u64) {
    (f[0].to_bits(), f[1].to_bits())
}

/// Full propagator over the trajectories, expressed in the idle frames.
pub fn propagator(pair: &DuffingPair, traj: [&PulseWaveform; 2]) -> Result<DMatrix<C64>> {
    let n = pair.check_trajectories(traj)?;
    let ops = pair.operators();
    let wc = pair.frame();
    let dt = pair.sample_period_ns;
    let d = pair.dim();
    let mut cache: HashMap<(u64, u64), DMatrix<C64>> = HashMap::new();
    let mut u = DMatrix::<C64>::identity(d, d);
    for k in 0..n {
        let f = pair.frequencies(traj, k);
        let step = match cache.get(&key(f)) {
            Some(s) => s,
            None => {
                let h = ops.hamiltonian(f, wc);
                let phase = 2.0 * std::f64::consts::PI * spectral_bound(&h) * dt;
                if phase > STEP_PHASE_LIMIT {
                    return Err(Error::StepTooLarge {
                        phase,
                        limit: STEP_PHASE_LIMIT,
                    });
                }
                cache.entry(key(f)).or_insert_with(|| unitary_step(&h, dt))
            }
        };
        u = step * u;
    }
    let t0 = traj[0].start_time_ns;
    let end = pair.to_idle_frame(&ops, t0 + n as f64 * dt);
    let start = pair.to_idle_frame(&ops, t0);
    for i in 0..d {
        for j in 0..d {
            u[(i, j)] *= end[i] * start[j].conj();
        }
    }
    Ok(u)
}

pub fn propagate(pair: &DuffingPair, traj: [&PulseWaveform; 2], psi0: &DVector<C64>) -> Result<DVector<C64>> {
    if psi0.len() != pair.dim() {
        return Err(invalid("state dimension does not match the pair"));
    }
    if (psi0.norm() - 1.0).abs() > 1e-9 {
        return Err(invalid("initial state must be normalized"));
    }
    Ok(propagator(pair, traj)? * psi0)
}

/// Relaxation and pure-dephasing rates, 1/ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub gamma1: f64,
    pub gamma_phi: f64,
}

impl Rates {
    pub const NONE: Rates = Rates {
        gamma1: 0.0,
        gamma_phi: 0.0,
    };

    /// From T1 and a T2 in µs; requires T2 ≤ 2·T1.
    pub fn from_times(t1_us: f64, t2_us: f64) -> Result<Self> {
        if !(t1_us > 0.0 && t2_us > 0.0) {
            return Err(invalid("coherence times must be positive"));
        }
        if t2_us > 2.0 * t1_us * (1.0 + 1e-12) {
            return Err(invalid(format!("T2 = {t2_us} µs exceeds 2·T1 = {} µs", 2.0 * t1_us)));
        }
        let gamma1 = 1.0 / (t1_us * 1e3);
        let gamma_phi = (1.0 / (t2_us * 1e3) - 0.5 * gamma1).max(0.0);
        Ok(Self { gamma1, gamma_phi })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitNoise {
    pub t1_us: f64,
    pub t2_star_us: f64,
    pub t2_echo_us: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum T2Kind {
    Star,
    Echo,
}

impl QubitNoise {
    pub fn validate(&self) -> Result<()> {
        Rates::from_times(self.t1_us, self.t2_star_us)?;
        Rates::from_times(self.t1_us, self.t2_echo_us)?;
        Ok(())
    }

    pub fn rates(&self, kind: T2Kind) -> Result<Rates> {
        let t2 = match kind {
            T2Kind::Star => self.t2_star_us,
            T2Kind::Echo => self.t2_echo_us,
        };
        Rates::from_times(self.t1_us, t2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub qubits: [QubitNoise; 2],
}

impl NoiseParams {
    pub fn rates(&self, kind: T2Kind) -> Result<[Rates; 2]> {
        Ok([self.qubits[0].rates(kind)?, self.qubits[1].rates(kind)?])
    }
}

fn collapse_ops(ops: &PairOperators, rates: &[Rates; 2]) -> Vec<DMatrix<C64>> {
    let mut out = Vec::new();
    for q in 0..2 {
        if rates[q].gamma1 > 0.0 {
            out.push(ops.a[q].map(|x| C64::new(x * rates[q].gamma1.sqrt(), 0.0)));
        }
        if rates[q].gamma_phi > 0.0 {
            out.push(ops.n[q].map(|x| C64::new(x * (2.0 * rates[q].gamma_phi).sqrt(), 0.0)));
        }
    }
    out
}

/// Column-stacked superoperator of the trajectories with amplitude damping
/// (√n matrix elements) and pure dephasing, mapping common-frame inputs to
/// common-frame outputs.
fn lindblad_frames(
    pair: &DuffingPair,
    traj: [&PulseWaveform; 2],
    rates: &[Rates; 2],
) -> Result<(DMatrix<C64>, DVector<C64>, DVector<C64>)> {
    let n = pair.check_trajectories(traj)?;
    for r in rates {
        if !(r.gamma1 >= 0.0 && r.gamma_phi >= 0.0) {
            return Err(invalid("rates must be non-negative"));
        }
    }
    let ops = pair.operators();
    let wc = pair.frame();
    let dt = pair.sample_period_ns;
    let d = pair.dim();
    let collapse = collapse_ops(&ops, rates);
    let mut cache: HashMap<(u64, u64), DMatrix<C64>> = HashMap::new();
    let mut s = DMatrix::<C64>::identity(d * d, d * d);
    for k in 0..n {
        let f = pair.frequencies(traj, k);
        if !cache.contains_key(&key(f)) {
            let h = ops.hamiltonian(f, wc);
            let phase = 2.0 * std::f64::consts::PI * spectral_bound(&h) * dt;
            if phase > STEP_PHASE_LIMIT {
                return Err(Error::StepTooLarge {
                    phase,
                    limit: STEP_PHASE_LIMIT,
                });
            }
            let hc = h.map(|x| C64::new(x, 0.0));
            cache.insert(key(f), (liouvillian(&hc, &collapse) * C64::new(dt, 0.0)).exp());
        }
        s = &cache[&key(f)] * s;
    }
    let t0 = traj[0].start_time_ns;
    Ok((s, pair.to_idle_frame(&ops, t0), pair.to_idle_frame(&ops, t0 + n as f64 * dt)))
}

/// Superoperator on column-stacked density matrices, in the idle frames.
pub fn lindblad_superop(pair: &DuffingPair, traj: [&PulseWaveform; 2], rates: &[Rates; 2]) -> Result<DMatrix<C64>> {
    let (mut s, start, end) = lindblad_frames(pair, traj, rates)?;
    let d = pair.dim();
    // Element (i, j) of the output picks up end[i]·conj(end[j]); of the input, the inverse at start.
    for row in 0..d * d {
        let (i, j) = (row % d, row / d);
        let fo = end[i] * end[j].conj();
        for col in 0..d * d {
            let (k, l) = (col % d, col / d);
            s[(row, col)] *= fo * (start[k] * start[l].conj()).conj();
        }
    }
    Ok(s)
}

/// Density-matrix evolution with amplitude damping (√n matrix elements)
/// and pure dephasing, returned in the idle frames.
pub fn lindblad_propagate(
    pair: &DuffingPair,
    traj: [&PulseWaveform; 2],
    rates: &[Rates; 2],
    rho0: &DMatrix<C64>,
) -> Result<DMatrix<C64>> {
    let d = pair.dim();
    if rho0.nrows() != d || rho0.ncols() != d {
        return Err(invalid("density matrix dimension does not match the pair"));
    }
    let s = lindblad_superop(pair, traj, rates)?;
    Ok(unvec_rho(&(s * vec_rho(rho0)), d))
}

/// Pure state |i, j⟩.
pub fn basis_state(pair: &DuffingPair, i: usize, j: usize) -> DVector<C64> {
    let mut v = DVector::zeros(pair.dim());
    v[pair.index(i, j)] = C64::new(1.0, 0.0);
    v
}

pub fn projector(psi: &DVector<C64>) -> DMatrix<C64> {
    psi * psi.adjoint()
}
