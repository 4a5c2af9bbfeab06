use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::clifford::{
    clifford_group_c1, clifford_group_c2, CliffordElement, CliffordTable, Primitive, Tableau,
};
use crate::dynamics::{
    calibrate_single_qubit, lindblad_superop, rotation, single_qubit_gate, single_qubit_superop,
    CzPulse, DriveModel, DuffingPair, Rates, C64,
};
use crate::error::{invalid, Error, Result};
use crate::flux::PulseWaveform;
use crate::rng::{stream, stream2, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    C1,
    C2,
}

impl Group {
    pub fn table(self) -> &'static CliffordTable {
        match self {
            Group::C1 => clifford_group_c1(),
            Group::C2 => clifford_group_c2(),
        }
    }

    pub fn qubits(self) -> usize {
        match self {
            Group::C1 => 1,
            Group::C2 => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Random,
    Interleaved,
    Recovery,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub kind: StepKind,
    pub element: CliffordElement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sequence {
    pub group: Group,
    pub steps: Vec<Step>,
}

impl Sequence {
    pub fn circuit(&self) -> Vec<Primitive> {
        self.steps.iter().flat_map(|s| s.element.circuit.iter().copied()).collect()
    }

    pub fn tableau(&self) -> Tableau {
        self.steps
            .iter()
            .fold(Tableau::identity(self.group.qubits()), |t, s| t.then(&s.element.tableau))
    }

    /// Number of random Cliffords.
    pub fn length(&self) -> usize {
        self.steps.iter().filter(|s| s.kind == StepKind::Random).count()
    }
}

/// `m` random Cliffords, each followed by `interleave` when given, then the
/// recovery Clifford that inverts the whole sequence.
pub fn generate_sequence(m: usize, group: Group, interleave: Option<&CliffordElement>, seed: u64) -> Result<Sequence> {
    generate_with(m, group, interleave, &mut stream(seed, 0))
}

fn generate_with(m: usize, group: Group, interleave: Option<&CliffordElement>, rng: &mut Stream) -> Result<Sequence> {
    if m == 0 {
        return Err(invalid("sequence length must be at least 1"));
    }
    if let Some(g) = interleave {
        if g.qubits() != group.qubits() {
            return Err(invalid("interleaved gate acts on the wrong number of qubits"));
        }
    }
    let table = group.table();
    let mut steps = Vec::with_capacity(2 * m + 1);
    let mut total = Tableau::identity(group.qubits());
    for _ in 0..m {
        let e = &table.elements[rng.random_range(0..table.len())];
        total = total.then(&e.tableau);
        steps.push(Step { kind: StepKind::Random, element: e.clone() });
        if let Some(g) = interleave {
            total = total.then(&g.tableau);
            steps.push(Step { kind: StepKind::Interleaved, element: g.clone() });
        }
    }
    let k = table
        .lookup(&total.inverse())
        .ok_or_else(|| invalid("interleaved gate is not a Clifford"))?;
    steps.push(Step { kind: StepKind::Recovery, element: table.elements[k].clone() });
    Ok(Sequence { group, steps })
}

/// Kraus channels applied after the ideal primitive, acting on the levels
/// of the qubits the primitive touches. `None` marks a primitive the model
/// cannot execute.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    pub levels: usize,
    pub single: Option<Vec<DMatrix<C64>>>,
    pub cz: Option<Vec<DMatrix<C64>>>,
}

impl ChannelModel {
    /// Noiseless two-level model for both gate types.
    pub fn ideal() -> Self {
        Self {
            levels: 2,
            single: Some(vec![DMatrix::identity(2, 2)]),
            cz: Some(vec![DMatrix::identity(4, 4)]),
        }
    }
}

/// Kraus form of ρ → λ·ρ + (1 − λ)·I/d on `qubits` qubits.
pub fn depolarizing_kraus(lambda: f64, qubits: usize) -> Vec<DMatrix<C64>> {
    let d = 1usize << qubits;
    let n = d * d;
    let w_id = (1.0 - (1.0 - lambda) * (n - 1) as f64 / n as f64).max(0.0).sqrt();
    let w = ((1.0 - lambda) / n as f64).max(0.0).sqrt();
    (0..n as u8)
        .map(|k| {
            let x = k % d as u8;
            let z = k / d as u8;
            let p = super::clifford::Pauli { x, z, phase: (x & z).count_ones() as u8 % 4 }.matrix(qubits);
            p * C64::new(if k == 0 { w_id } else { w }, 0.0)
        })
        .collect()
}

/// Three-level amplitude transfer |e⟩ → |f⟩ with probability `leak` and
/// |f⟩ → |e⟩ with probability `seep`.
pub fn leakage_kraus(leak: f64, seep: f64) -> Vec<DMatrix<C64>> {
    let c = |v: f64| C64::new(v, 0.0);
    let mut k0 = DMatrix::zeros(3, 3);
    k0[(0, 0)] = c(1.0);
    k0[(1, 1)] = c((1.0 - leak).sqrt());
    k0[(2, 2)] = c((1.0 - seep).sqrt());
    let mut k1 = DMatrix::zeros(3, 3);
    k1[(2, 1)] = c(leak.sqrt());
    let mut k2 = DMatrix::zeros(3, 3);
    k2[(1, 2)] = c(seep.sqrt());
    vec![k0, k1, k2]
}

/// Pulse-level superoperators on `levels` per qubit, column-stacked.
#[derive(Debug, Clone)]
pub struct DynamicsBackend {
    pub levels: Vec<usize>,
    /// Per qubit: idle, X(π/2) and X(π) superoperators for one pulse slot.
    pub pulses: Vec<[DMatrix<C64>; 3]>,
    /// CZ including buffers and virtual-Z corrections.
    pub cz: Option<DMatrix<C64>>,
    pub pulse_ns: f64,
    /// Static ZZ interaction during pulse slots, GHz.
    pub zz_ghz: f64,
}

impl DynamicsBackend {
    /// Calibrated sin² pulses of `duration_ns` for each qubit.
    pub fn new(qubits: &[(DriveModel, Rates)], duration_ns: f64, sample_period_ns: f64) -> Result<Self> {
        if qubits.is_empty() || qubits.len() > 2 {
            return Err(invalid("dynamics backend supports one or two qubits"));
        }
        let mut pulses = Vec::new();
        for (model, rates) in qubits {
            let op = |angle: f64| -> Result<DMatrix<C64>> {
                let g = single_qubit_gate(angle, 0.0, duration_ns, sample_period_ns)?;
                let g = calibrate_single_qubit(&g, model)?;
                single_qubit_superop(&g, model, rates)
            };
            pulses.push([op(0.0)?, op(PI / 2.0)?, op(PI)?]);
        }
        Ok(Self {
            levels: qubits.iter().map(|(m, _)| m.levels).collect(),
            pulses,
            cz: None,
            pulse_ns: duration_ns,
            zz_ghz: 0.0,
        })
    }

    /// Adds the CZ: leading buffer, flux pulse, trailing buffer, then the
    /// virtual-Z corrections.
    pub fn with_cz(
        mut self,
        pair: &DuffingPair,
        pulse: &CzPulse,
        virtual_z: [f64; 2],
        pulse_rates: &[Rates; 2],
        buffer_rates: &[Rates; 2],
        buffer_ns: f64,
    ) -> Result<Self> {
        let (l1, l2) = pair.dims();
        if self.levels != [l1, l2] {
            return Err(invalid("pair levels do not match the single-qubit models"));
        }
        let dt = pair.sample_period_ns;
        let main = lindblad_superop(pair, [&pulse.q1, &pulse.q2], pulse_rates)?;
        let mut s = main;
        let nb = (buffer_ns / dt).round() as usize;
        if nb > 0 {
            let idle = PulseWaveform::new(vec![0.0; nb], dt)?;
            let b = lindblad_superop(pair, [&idle, &idle], buffer_rates)?;
            s = &b * s * &b;
        }
        let d = l1 * l2;
        let z: Vec<C64> = (0..d)
            .map(|k| C64::from_polar(1.0, virtual_z[0] * (k / l2) as f64 + virtual_z[1] * (k % l2) as f64))
            .collect();
        for row in 0..d * d {
            let f = z[row % d] * z[row / d].conj();
            for col in 0..d * d {
                s[(row, col)] *= f;
            }
        }
        self.cz = Some(s);
        Ok(self)
    }
}

#[derive(Debug, Clone)]
pub enum NoiseModel {
    /// ρ → p·ρ + (1 − p)·I/d after every Clifford, including the recovery.
    Depolarizing { p: f64 },
    Channels(ChannelModel),
    Dynamics(Box<DynamicsBackend>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    /// C1 sequences on one qubit of the model.
    Single { qubit: usize },
    /// Independent C1 sequences on qubits 0 and 1, played together.
    Simultaneous,
    /// C2 sequences, with an optional interleaved gate.
    Two { interleave: Option<CliffordElement> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbSettings {
    pub lengths: Vec<usize>,
    pub randomizations: usize,
    /// Shots per sequence; 0 reports exact populations.
    pub shots: u64,
    pub seed: u64,
}

impl Default for RbSettings {
    fn default() -> Self {
        Self {
            lengths: (0..=10).map(|k| 1 << k).collect(),
            randomizations: 30,
            shots: 1000,
            seed: 0,
        }
    }
}

/// Raw survival and leaked population, indexed `[length][randomization]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbCurve {
    pub lengths: Vec<usize>,
    pub survival: Vec<Vec<f64>>,
    pub leakage: Vec<Vec<f64>>,
    pub shots: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum Slot {
    Idle = 0,
    X90 = 1,
    X180 = 2,
}

#[derive(Debug, Clone, PartialEq)]
enum Op {
    Frame { qubit: usize, quarter_turns: u8 },
    Layer(Vec<Slot>),
    Cz,
}

/// Aligns pulses on different qubits into common slots; frames stay in
/// order relative to their own qubit's pulses.
fn schedule(circuit: &[Primitive], n: usize) -> Vec<Op> {
    let mut out = Vec::new();
    let mut queues: Vec<Vec<Primitive>> = vec![Vec::new(); n];
    let flush = |queues: &mut Vec<Vec<Primitive>>, out: &mut Vec<Op>| {
        let mut cursor = vec![0usize; n];
        loop {
            let mut slots = vec![Slot::Idle; n];
            let mut any = false;
            for q in 0..n {
                while let Some(&Primitive::Z { quarter_turns, .. }) = queues[q].get(cursor[q]) {
                    out.push(Op::Frame { qubit: q, quarter_turns });
                    cursor[q] += 1;
                }
                match queues[q].get(cursor[q]) {
                    Some(Primitive::X90 { .. }) => slots[q] = Slot::X90,
                    Some(Primitive::X180 { .. }) => slots[q] = Slot::X180,
                    _ => continue,
                }
                cursor[q] += 1;
                any = true;
            }
            if !any {
                break;
            }
            out.push(Op::Layer(slots));
        }
        queues.iter_mut().for_each(Vec::clear);
    };
    for p in circuit {
        match *p {
            Primitive::Cz => {
                flush(&mut queues, &mut out);
                out.push(Op::Cz);
            }
            Primitive::X90 { qubit } | Primitive::X180 { qubit } | Primitive::Z { qubit, .. } => {
                queues[qubit as usize].push(*p)
            }
        }
    }
    flush(&mut queues, &mut out);
    out
}

fn embed_qubit_unitary(u: &DMatrix<C64>, levels: usize) -> DMatrix<C64> {
    let mut m = DMatrix::identity(levels, levels);
    m.view_mut((0, 0), (2, 2)).copy_from(u);
    m
}

fn kron_all(factors: &[DMatrix<C64>]) -> DMatrix<C64> {
    factors
        .iter()
        .fold(DMatrix::from_element(1, 1, C64::new(1.0, 0.0)), |m, f| m.kronecker(f))
}

/// Superoperator of independent local maps on a two-qubit space.
fn combine_local(s: [&DMatrix<C64>; 2], levels: [usize; 2]) -> DMatrix<C64> {
    let [la, lb] = levels;
    let d = la * lb;
    let split = |v: usize| {
        let (i, j) = (v % d, v / d);
        ((i / lb) + la * (j / lb), (i % lb) + lb * (j % lb))
    };
    DMatrix::from_fn(d * d, d * d, |r, c| {
        let (ra, rb) = split(r);
        let (ca, cb) = split(c);
        s[0][(ra, ca)] * s[1][(rb, cb)]
    })
}

/// One run of the machine: a density matrix on the product of the local
/// qubits' levels.
struct Machine<'a> {
    model: &'a NoiseModel,
    /// Model qubit behind each local qubit.
    qubits: Vec<usize>,
    levels: Vec<usize>,
    dim: usize,
    layers: HashMap<Vec<Slot>, DMatrix<C64>>,
    cz_unitary: Option<DMatrix<C64>>,
}

impl<'a> Machine<'a> {
    fn new(model: &'a NoiseModel, qubits: Vec<usize>) -> Result<Self> {
        let levels: Vec<usize> = match model {
            NoiseModel::Depolarizing { p } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(invalid("depolarizing parameter must lie in [0, 1]"));
                }
                vec![2; qubits.len()]
            }
            NoiseModel::Channels(c) => {
                if c.levels < 2 {
                    return Err(invalid("channel model needs at least two levels"));
                }
                vec![c.levels; qubits.len()]
            }
            NoiseModel::Dynamics(b) => {
                if let Some(&q) = qubits.iter().find(|&&q| q >= b.levels.len()) {
                    return Err(invalid(format!("dynamics backend has no qubit {q}")));
                }
                qubits.iter().map(|&q| b.levels[q]).collect()
            }
        };
        let dim: usize = levels.iter().product();
        let mut layers = HashMap::new();
        if let NoiseModel::Dynamics(b) = model {
            let slots = [Slot::Idle, Slot::X90, Slot::X180];
            if qubits.len() == 1 {
                for s in slots {
                    layers.insert(vec![s], b.pulses[qubits[0]][s as usize].clone());
                }
            } else {
                let zz: Option<Vec<C64>> = zz_phases(&levels, b.zz_ghz * b.pulse_ns);
                for s0 in slots {
                    for s1 in slots {
                        let ops = [&b.pulses[qubits[0]][s0 as usize], &b.pulses[qubits[1]][s1 as usize]];
                        let mut s = combine_local(ops, [levels[0], levels[1]]);
                        if let Some(z) = zz.as_deref() {
                            for row in 0..dim * dim {
                                let f: C64 = z[row % dim] * z[row / dim].conj();
                                s.row_mut(row).iter_mut().for_each(|v| *v *= f);
                            }
                        }
                        layers.insert(vec![s0, s1], s);
                    }
                }
            }
        }
        let cz_unitary = (qubits.len() == 2).then(|| {
            let l1 = levels[1];
            DMatrix::from_fn(dim, dim, |r, c| match (r == c, r == l1 + 1) {
                (false, _) => C64::new(0.0, 0.0),
                (true, true) => C64::new(-1.0, 0.0),
                (true, false) => C64::new(1.0, 0.0),
            })
        });
        Ok(Self { model, qubits, levels, dim, layers, cz_unitary })
    }

    fn ground(&self) -> DMatrix<C64> {
        let mut rho = DMatrix::zeros(self.dim, self.dim);
        rho[(0, 0)] = C64::new(1.0, 0.0);
        rho
    }

    /// Levels of each local qubit in basis state `k`.
    fn digits(&self, mut k: usize) -> Vec<usize> {
        let mut d = vec![0; self.levels.len()];
        for q in (0..self.levels.len()).rev() {
            d[q] = k % self.levels[q];
            k /= self.levels[q];
        }
        d
    }

    fn frame(&self, rho: &mut DMatrix<C64>, qubit: usize, quarter_turns: u8) {
        let theta = quarter_turns as f64 * PI / 2.0;
        let v: Vec<C64> = (0..self.dim)
            .map(|k| C64::from_polar(1.0, theta * self.digits(k)[qubit] as f64))
            .collect();
        for c in 0..self.dim {
            for r in 0..self.dim {
                rho[(r, c)] *= v[r] * v[c].conj();
            }
        }
    }

    fn local_operator(&self, qubit: usize, op: &DMatrix<C64>) -> DMatrix<C64> {
        let factors: Vec<DMatrix<C64>> = (0..self.levels.len())
            .map(|q| if q == qubit { op.clone() } else { DMatrix::identity(self.levels[q], self.levels[q]) })
            .collect();
        kron_all(&factors)
    }

    fn kraus(rho: &DMatrix<C64>, ops: &[DMatrix<C64>]) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(rho.nrows(), rho.ncols());
        for k in ops {
            out += k * rho * k.adjoint();
        }
        out
    }

    fn superop(rho: &DMatrix<C64>, s: &DMatrix<C64>) -> DMatrix<C64> {
        let n = rho.nrows();
        let v = nalgebra::DVector::from_column_slice(rho.as_slice());
        DMatrix::from_column_slice(n, n, (s * v).as_slice())
    }

    fn apply(&self, rho: &mut DMatrix<C64>, op: &Op) -> Result<()> {
        match op {
            Op::Frame { qubit, quarter_turns } => self.frame(rho, *qubit, *quarter_turns),
            Op::Layer(slots) => match self.model {
                NoiseModel::Dynamics(_) => *rho = Self::superop(rho, &self.layers[slots]),
                NoiseModel::Depolarizing { .. } | NoiseModel::Channels(_) => {
                    for (q, s) in slots.iter().enumerate() {
                        let angle = match s {
                            Slot::Idle => continue,
                            Slot::X90 => PI / 2.0,
                            Slot::X180 => PI,
                        };
                        let u = self.local_operator(q, &embed_qubit_unitary(&rotation(angle, 0.0), self.levels[q]));
                        *rho = &u * &*rho * u.adjoint();
                        if let NoiseModel::Channels(c) = self.model {
                            let kraus = c.single.as_ref().ok_or_else(|| Error::ModelMismatch("single-qubit pulse".into()))?;
                            let ops: Vec<_> = kraus.iter().map(|k| self.local_operator(q, k)).collect();
                            *rho = Self::kraus(rho, &ops);
                        }
                    }
                }
            },
            Op::Cz => match self.model {
                NoiseModel::Dynamics(b) => {
                    let s = b.cz.as_ref().ok_or_else(|| Error::ModelMismatch("CZ".into()))?;
                    *rho = Self::superop(rho, s);
                }
                NoiseModel::Depolarizing { .. } | NoiseModel::Channels(_) => {
                    let u = self.cz_unitary.as_ref().ok_or_else(|| Error::ModelMismatch("CZ on one qubit".into()))?;
                    *rho = u * &*rho * u.adjoint();
                    if let NoiseModel::Channels(c) = self.model {
                        let kraus = c.cz.as_ref().ok_or_else(|| Error::ModelMismatch("CZ".into()))?;
                        *rho = Self::kraus(rho, kraus);
                    }
                }
            },
        }
        Ok(())
    }

    fn end_step(&self, rho: &mut DMatrix<C64>) {
        if let NoiseModel::Depolarizing { p } = self.model {
            let tr = rho.trace();
            *rho *= C64::new(*p, 0.0);
            for k in 0..self.dim {
                rho[(k, k)] += tr * (1.0 - p) / self.dim as f64;
            }
        }
    }

    /// Runs aligned steps; `circuits[k]` is the k-th step for every local qubit.
    fn run(&self, steps: &[Vec<Primitive>]) -> Result<DMatrix<C64>> {
        let mut rho = self.ground();
        for circuit in steps {
            for op in schedule(circuit, self.qubits.len()) {
                self.apply(&mut rho, &op)?;
            }
            self.end_step(&mut rho);
        }
        Ok(rho)
    }

    /// Ground population of each local qubit and of the whole register,
    /// and the population with any qubit outside {g, e}.
    fn measure(&self, rho: &DMatrix<C64>) -> (Vec<f64>, f64, f64) {
        let n = self.levels.len();
        let mut marginal = vec![0.0; n];
        let mut leaked = 0.0;
        for k in 0..self.dim {
            let p = rho[(k, k)].re.max(0.0);
            let d = self.digits(k);
            for q in 0..n {
                if d[q] == 0 {
                    marginal[q] += p;
                }
            }
            if d.iter().any(|&v| v >= 2) {
                leaked += p;
            }
        }
        (marginal, rho[(0, 0)].re, leaked)
    }
}

fn zz_phases(levels: &[usize], cycles: f64) -> Option<Vec<C64>> {
    if cycles == 0.0 {
        return None;
    }
    let l1 = levels[1];
    let d = levels[0] * l1;
    Some(
        (0..d)
            .map(|k| C64::from_polar(1.0, -2.0 * PI * cycles * ((k / l1) * (k % l1)) as f64))
            .collect(),
    )
}

fn sample(p: f64, shots: u64, rng: &mut Stream) -> f64 {
    let p = p.clamp(0.0, 1.0);
    if shots == 0 {
        return p;
    }
    let k = Binomial::new(shots, p).expect("probability clamped to [0, 1]").sample(rng);
    k as f64 / shots as f64
}

/// Executes one sequence per (length, randomization) with per-task random
/// streams. Returns one curve per reported qubit: one for `Single` and
/// `Two`, two for `Simultaneous`.
pub fn run_rb(model: &NoiseModel, experiment: &Experiment, settings: &RbSettings) -> Result<Vec<RbCurve>> {
    if settings.lengths.is_empty() || settings.randomizations == 0 {
        return Err(invalid("need at least one length and one randomization"));
    }
    if settings.lengths.contains(&0) {
        return Err(invalid("sequence lengths must be at least 1"));
    }
    let (local, reported) = match experiment {
        Experiment::Single { qubit } => (vec![*qubit], 1),
        Experiment::Simultaneous => (vec![0, 1], 2),
        Experiment::Two { .. } => (vec![0, 1], 1),
    };
    let machine = Machine::new(model, local)?;
    let tasks: Vec<(usize, usize)> = (0..settings.lengths.len())
        .flat_map(|li| (0..settings.randomizations).map(move |r| (li, r)))
        .collect();
    let results = tasks
        .par_iter()
        .map(|&(li, r)| -> Result<(Vec<f64>, Vec<f64>)> {
            let m = settings.lengths[li];
            let mut rng = stream2(settings.seed, li as u64, r as u64);
            let steps: Vec<Vec<Primitive>> = match experiment {
                Experiment::Single { .. } => generate_with(m, Group::C1, None, &mut rng)?
                    .steps
                    .into_iter()
                    .map(|s| s.element.circuit)
                    .collect(),
                Experiment::Simultaneous => {
                    let a = generate_with(m, Group::C1, None, &mut rng)?;
                    let b = generate_with(m, Group::C1, None, &mut rng)?;
                    a.steps
                        .iter()
                        .zip(&b.steps)
                        .map(|(sa, sb)| {
                            let mut c = sa.element.circuit.clone();
                            c.extend(sb.element.circuit.iter().map(|p| p.on_qubit(1)));
                            c
                        })
                        .collect()
                }
                Experiment::Two { interleave } => generate_with(m, Group::C2, interleave.as_ref(), &mut rng)?
                    .steps
                    .into_iter()
                    .map(|s| s.element.circuit)
                    .collect(),
            };
            let rho = machine.run(&steps)?;
            let (marginal, joint, leaked) = machine.measure(&rho);
            let surv = match experiment {
                Experiment::Simultaneous => marginal,
                _ => vec![joint],
            };
            let surv = surv.into_iter().map(|p| sample(p, settings.shots, &mut rng)).collect();
            let leak = vec![sample(leaked, settings.shots, &mut rng); reported];
            Ok((surv, leak))
        })
        .collect::<Result<Vec<_>>>()?;

    let nl = settings.lengths.len();
    let nr = settings.randomizations;
    Ok((0..reported)
        .map(|q| RbCurve {
            lengths: settings.lengths.clone(),
            survival: (0..nl).map(|li| (0..nr).map(|r| results[li * nr + r].0[q]).collect()).collect(),
            leakage: (0..nl).map(|li| (0..nr).map(|r| results[li * nr + r].1[q]).collect()).collect(),
            shots: settings.shots,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_aligns_pulses() {
        let c = vec![
            Primitive::Z { qubit: 0, quarter_turns: 1 },
            Primitive::X90 { qubit: 0 },
            Primitive::X90 { qubit: 0 },
            Primitive::X90 { qubit: 1 },
            Primitive::Cz,
            Primitive::Z { qubit: 1, quarter_turns: 2 },
        ];
        let ops = schedule(&c, 2);
        assert_eq!(
            ops,
            vec![
                Op::Frame { qubit: 0, quarter_turns: 1 },
                Op::Layer(vec![Slot::X90, Slot::X90]),
                Op::Layer(vec![Slot::X90, Slot::Idle]),
                Op::Cz,
                Op::Frame { qubit: 1, quarter_turns: 2 },
            ]
        );
    }

    #[test]
    fn combine_local_matches_kronecker_of_unitaries() {
        let a = rotation(0.3, 0.2);
        let b = rotation(1.1, -0.4);
        let sup = |u: &DMatrix<C64>| u.conjugate().kronecker(u);
        let joint = combine_local([&sup(&a), &sup(&b)], [2, 2]);
        assert!((joint - sup(&a.kronecker(&b))).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn depolarizing_kraus_is_trace_preserving() {
        for q in 1..=2 {
            let ks = depolarizing_kraus(0.9, q);
            let d = 1 << q;
            let s = ks.iter().fold(DMatrix::<C64>::zeros(d, d), |acc, k| acc + k.adjoint() * k);
            assert!((s - DMatrix::identity(d, d)).iter().all(|z| z.norm() < 1e-12));
        }
    }
}
