use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{rotation, rz, C64};

/// `i^phase · Π_q X_q^{x_q} Z_q^{z_q}` with bit q of `x` and `z` acting on
/// qubit q. Factors are ordered by qubit, X before Z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pauli {
    pub x: u8,
    pub z: u8,
    pub phase: u8,
}

impl Pauli {
    pub const IDENTITY: Pauli = Pauli { x: 0, z: 0, phase: 0 };

    pub fn x(q: usize) -> Self {
        Pauli { x: 1 << q, z: 0, phase: 0 }
    }

    pub fn z(q: usize) -> Self {
        Pauli { x: 0, z: 1 << q, phase: 0 }
    }

    /// `i·X·Z` on qubit q.
    pub fn y(q: usize) -> Self {
        Pauli { x: 1 << q, z: 1 << q, phase: 1 }
    }

    pub fn with_phase(self, k: u8) -> Self {
        Pauli { phase: (self.phase + k) % 4, ..self }
    }

    pub fn mul(self, rhs: Pauli) -> Pauli {
        let swaps = (self.z & rhs.x).count_ones() as u8;
        Pauli {
            x: self.x ^ rhs.x,
            z: self.z ^ rhs.z,
            phase: (self.phase + rhs.phase + 2 * swaps) % 4,
        }
    }

    pub fn commutes(self, other: Pauli) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    pub fn is_hermitian(self) -> bool {
        self.phase % 2 == ((self.x & self.z).count_ones() % 2) as u8
    }

    /// Dense matrix on `n` qubits, qubit 0 as the most significant factor.
    pub fn matrix(self, n: usize) -> DMatrix<C64> {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let xm = DMatrix::from_row_slice(2, 2, &[zero, one, one, zero]);
        let zm = DMatrix::from_row_slice(2, 2, &[one, zero, zero, -one]);
        let mut m = DMatrix::from_element(1, 1, one);
        for q in 0..n {
            let mut f = DMatrix::<C64>::identity(2, 2);
            if self.x >> q & 1 == 1 {
                f = &f * &xm;
            }
            if self.z >> q & 1 == 1 {
                f = &f * &zm;
            }
            m = m.kronecker(&f);
        }
        let ph = [one, C64::new(0.0, 1.0), -one, C64::new(0.0, -1.0)][self.phase as usize];
        m * ph
    }
}

/// Clifford operation stored as the images `C·P·C†` of X_q and Z_q,
/// laid out as `[X_0, Z_0, X_1, Z_1, …]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Tableau {
    pub qubits: usize,
    pub images: Vec<Pauli>,
}

impl Tableau {
    pub fn identity(qubits: usize) -> Self {
        let images = (0..qubits).flat_map(|q| [Pauli::x(q), Pauli::z(q)]).collect();
        Self { qubits, images }
    }

    /// Image of an arbitrary Pauli.
    pub fn apply(&self, p: Pauli) -> Pauli {
        let mut acc = Pauli { phase: p.phase, ..Pauli::IDENTITY };
        for q in 0..self.qubits {
            if p.x >> q & 1 == 1 {
                acc = acc.mul(self.images[2 * q]);
            }
            if p.z >> q & 1 == 1 {
                acc = acc.mul(self.images[2 * q + 1]);
            }
        }
        acc
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Tableau) -> Tableau {
        Tableau {
            qubits: self.qubits,
            images: self.images.iter().map(|&p| next.apply(p)).collect(),
        }
    }

    pub fn inverse(&self) -> Tableau {
        let n = self.qubits;
        let mut images = Vec::with_capacity(2 * n);
        for g in Tableau::identity(n).images {
            let mut found = None;
            'search: for x in 0..(1u8 << n) {
                for z in 0..(1u8 << n) {
                    let img = self.apply(Pauli { x, z, phase: 0 });
                    if img.x == g.x && img.z == g.z {
                        found = Some(Pauli { x, z, phase: (4 + g.phase - img.phase) % 4 });
                        break 'search;
                    }
                }
            }
            images.push(found.expect("tableau is not invertible"));
        }
        Tableau { qubits: n, images }
    }

    /// Images are Hermitian and obey the canonical commutation relations.
    pub fn is_valid(&self) -> bool {
        if self.images.len() != 2 * self.qubits {
            return false;
        }
        if !self.images.iter().all(|p| p.is_hermitian() && (p.x | p.z) != 0) {
            return false;
        }
        for a in 0..self.images.len() {
            for b in a + 1..self.images.len() {
                let anti = a / 2 == b / 2;
                if self.images[a].commutes(self.images[b]) == anti {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_identity(&self) -> bool {
        *self == Tableau::identity(self.qubits)
    }

    /// Tableau of a Clifford unitary found by conjugating each generator.
    pub fn from_unitary(u: &DMatrix<C64>, qubits: usize) -> Option<Tableau> {
        let mut images = Vec::with_capacity(2 * qubits);
        for g in Tableau::identity(qubits).images {
            let m = u * g.matrix(qubits) * u.adjoint();
            let mut found = None;
            for x in 0..(1u8 << qubits) {
                for z in 0..(1u8 << qubits) {
                    for phase in 0..4 {
                        let p = Pauli { x, z, phase };
                        if max_abs_diff(&m, &p.matrix(qubits)) < 1e-8 {
                            found = Some(p);
                        }
                    }
                }
            }
            images.push(found?);
        }
        Some(Tableau { qubits, images })
    }
}

fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Physical gate set: microwave X pulses, virtual Z rotations by multiples
/// of π/2, and the flux-pulsed CZ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum Primitive {
    X90 { qubit: u8 },
    X180 { qubit: u8 },
    Z { qubit: u8, quarter_turns: u8 },
    Cz,
}

impl Primitive {
    pub fn is_pulse(&self) -> bool {
        !matches!(self, Primitive::Z { .. })
    }

    pub fn on_qubit(self, q: u8) -> Primitive {
        match self {
            Primitive::X90 { .. } => Primitive::X90 { qubit: q },
            Primitive::X180 { .. } => Primitive::X180 { qubit: q },
            Primitive::Z { quarter_turns, .. } => Primitive::Z { qubit: q, quarter_turns },
            Primitive::Cz => Primitive::Cz,
        }
    }

    /// Unitary on the qubit subspace of `qubits` qubits.
    pub fn unitary(&self, qubits: usize) -> DMatrix<C64> {
        let local = |q: u8, u: DMatrix<C64>| -> DMatrix<C64> {
            let mut m = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
            for k in 0..qubits {
                m = if k == q as usize { m.kronecker(&u) } else { m.kronecker(&DMatrix::identity(2, 2)) };
            }
            m
        };
        match *self {
            Primitive::X90 { qubit } => local(qubit, rotation(PI / 2.0, 0.0)),
            Primitive::X180 { qubit } => local(qubit, rotation(PI, 0.0)),
            Primitive::Z { qubit, quarter_turns } => local(qubit, rz(quarter_turns as f64 * PI / 2.0)),
            Primitive::Cz => {
                assert_eq!(qubits, 2, "CZ needs two qubits");
                let mut m = DMatrix::<C64>::identity(4, 4);
                m[(3, 3)] = C64::new(-1.0, 0.0);
                m
            }
        }
    }

    /// Symbolic tableau.
    pub fn tableau(&self, qubits: usize) -> Tableau {
        let mut t = Tableau::identity(qubits);
        match *self {
            Primitive::X90 { qubit } => t.images[2 * qubit as usize + 1] = Pauli::y(qubit as usize).with_phase(2),
            Primitive::X180 { qubit } => t.images[2 * qubit as usize + 1] = Pauli::z(qubit as usize).with_phase(2),
            Primitive::Z { qubit, quarter_turns } => {
                let q = qubit as usize;
                t.images[2 * q] = match quarter_turns % 4 {
                    0 => Pauli::x(q),
                    1 => Pauli::y(q),
                    2 => Pauli::x(q).with_phase(2),
                    _ => Pauli::y(q).with_phase(2),
                };
            }
            Primitive::Cz => {
                t.images[0] = Pauli { x: 1, z: 2, phase: 0 };
                t.images[2] = Pauli { x: 2, z: 1, phase: 0 };
            }
        }
        t
    }
}

pub fn circuit_tableau(circuit: &[Primitive], qubits: usize) -> Tableau {
    circuit
        .iter()
        .fold(Tableau::identity(qubits), |t, p| t.then(&p.tableau(qubits)))
}

pub fn circuit_unitary(circuit: &[Primitive], qubits: usize) -> DMatrix<C64> {
    let d = 1 << qubits;
    circuit
        .iter()
        .fold(DMatrix::identity(d, d), |u, p| p.unitary(qubits) * u)
}

/// True when `a = e^{iφ}·b` for some global phase φ.
pub fn equal_up_to_phase(a: &DMatrix<C64>, b: &DMatrix<C64>, tol: f64) -> bool {
    let overlap = (b.adjoint() * a).trace();
    let d = a.nrows() as f64;
    if overlap.norm() < 1e-12 {
        return false;
    }
    let phase = overlap / overlap.norm();
    max_abs_diff(a, &(b * phase)) < tol && (overlap.norm() - d).abs() < tol * d
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliffordElement {
    pub tableau: Tableau,
    /// Time-ordered physical primitives.
    pub circuit: Vec<Primitive>,
}

impl CliffordElement {
    pub fn qubits(&self) -> usize {
        self.tableau.qubits
    }

    pub fn pulse_count(&self) -> usize {
        self.circuit.iter().filter(|p| p.is_pulse()).count()
    }

    pub fn cz_count(&self) -> usize {
        self.circuit.iter().filter(|p| matches!(p, Primitive::Cz)).count()
    }

    pub fn unitary(&self) -> DMatrix<C64> {
        circuit_unitary(&self.circuit, self.qubits())
    }

    /// The bare CZ as a two-qubit Clifford, used for interleaving.
    pub fn cz() -> Self {
        Self {
            tableau: Primitive::Cz.tableau(2),
            circuit: vec![Primitive::Cz],
        }
    }
}

/// A Clifford group with a compiled circuit per element and a
/// tableau-keyed index for inversion and membership tests.
#[derive(Debug)]
pub struct CliffordTable {
    pub elements: Vec<CliffordElement>,
    index: HashMap<Tableau, usize>,
}

impl CliffordTable {
    fn from_elements(elements: Vec<CliffordElement>) -> Self {
        let index = elements
            .iter()
            .enumerate()
            .map(|(k, e)| (e.tableau.clone(), k))
            .collect();
        Self { elements, index }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn lookup(&self, t: &Tableau) -> Option<usize> {
        self.index.get(t).copied()
    }

    pub fn distinct_tableaus(&self) -> usize {
        self.index.len()
    }
}

fn z(q: u8, k: u8) -> Option<Primitive> {
    (k % 4 != 0).then_some(Primitive::Z { qubit: q, quarter_turns: k % 4 })
}

fn build_c1() -> CliffordTable {
    let mut candidates: Vec<Vec<Primitive>> = (0..4).map(|k| z(0, k).into_iter().collect()).collect();
    let mut xz: Vec<[u8; 3]> = (0..64u8).map(|i| [i / 16, (i / 4) % 4, i % 4]).collect();
    xz.sort_by_key(|k| k.iter().filter(|&&v| v != 0).count());
    for [a, b, c] in xz {
        let x90 = Some(Primitive::X90 { qubit: 0 });
        candidates.push([z(0, a), x90, z(0, b), x90, z(0, c)].into_iter().flatten().collect());
    }
    let mut seen = HashMap::new();
    let mut elements = Vec::new();
    for circuit in candidates {
        let tableau = circuit_tableau(&circuit, 1);
        if seen.contains_key(&tableau) {
            continue;
        }
        seen.insert(tableau.clone(), elements.len());
        elements.push(CliffordElement { tableau, circuit });
    }
    CliffordTable::from_elements(elements)
}

/// The 24 single-qubit Cliffords. Diagonal elements are pure virtual-Z
/// frames; every other element is `Z·X90·Z·X90·Z` with zero-angle Z
/// stages elided.
pub fn clifford_group_c1() -> &'static CliffordTable {
    static C1: OnceLock<CliffordTable> = OnceLock::new();
    C1.get_or_init(build_c1)
}

fn c1_find(images: [Pauli; 2]) -> usize {
    let t = Tableau { qubits: 1, images: images.to_vec() };
    clifford_group_c1().lookup(&t).expect("not a single-qubit Clifford")
}

/// Class sizes of the two-qubit group: local, CNOT-like, iSWAP-like, SWAP-like.
pub const C2_CLASS_SIZES: [usize; 4] = [576, 5184, 5184, 576];

pub const C2_ORDER: usize = 11520;

enum Layer {
    Local(Vec<usize>, Vec<usize>),
    Cz,
}

fn build_c2() -> CliffordTable {
    let c1 = clifford_group_c1();
    let all: Vec<usize> = (0..c1.len()).collect();
    let id = c1_find([Pauli::x(0), Pauli::z(0)]);
    let h = c1_find([Pauli::z(0), Pauli::x(0)]);
    // Rotations by ±2π/3 about (1, 1, 1): X → Y → Z → X and its inverse.
    let s1 = vec![id, c1_find([Pauli::y(0), Pauli::x(0)]), c1_find([Pauli::z(0), Pauli::y(0)])];
    let local = |a: &[usize], b: &[usize]| Layer::Local(a.to_vec(), b.to_vec());
    let classes = [
        vec![local(&all, &all)],
        vec![local(&all, &all), Layer::Cz, local(&[id], &[h]), local(&s1, &s1)],
        vec![local(&all, &all), Layer::Cz, local(&[h], &[h]), Layer::Cz, local(&[h], &[id]), local(&s1, &s1)],
        vec![local(&all, &all), Layer::Cz, local(&[h], &[h]), Layer::Cz, local(&[h], &[h]), Layer::Cz, local(&[id], &[h])],
    ];
    let mut elements = Vec::with_capacity(C2_ORDER);
    for layers in &classes {
        let radices: Vec<usize> = layers
            .iter()
            .flat_map(|l| match l {
                Layer::Local(a, b) => vec![a.len(), b.len()],
                Layer::Cz => vec![],
            })
            .collect();
        let count: usize = radices.iter().product();
        for mut code in 0..count {
            let mut digits = vec![0; radices.len()];
            for (d, r) in digits.iter_mut().zip(&radices).rev() {
                *d = code % r;
                code /= r;
            }
            elements.push(compile_c2(layers, &digits));
        }
    }
    CliffordTable::from_elements(elements)
}

/// Merges consecutive local layers into one C1 element per qubit and
/// emits their XZ circuits around the CZs.
fn compile_c2(layers: &[Layer], digits: &[usize]) -> CliffordElement {
    let c1 = clifford_group_c1();
    let mut circuit = Vec::new();
    let mut pending = [Tableau::identity(1), Tableau::identity(1)];
    let flush = |pending: &mut [Tableau; 2], circuit: &mut Vec<Primitive>| {
        for (q, t) in pending.iter_mut().enumerate() {
            let k = c1.lookup(t).expect("local layer left the Clifford group");
            circuit.extend(c1.elements[k].circuit.iter().map(|p| p.on_qubit(q as u8)));
            *t = Tableau::identity(1);
        }
    };
    let mut d = digits.iter();
    for layer in layers {
        match layer {
            Layer::Local(a, b) => {
                let ka = a[*d.next().unwrap()];
                let kb = b[*d.next().unwrap()];
                pending[0] = pending[0].then(&c1.elements[ka].tableau);
                pending[1] = pending[1].then(&c1.elements[kb].tableau);
            }
            Layer::Cz => {
                flush(&mut pending, &mut circuit);
                circuit.push(Primitive::Cz);
            }
        }
    }
    flush(&mut pending, &mut circuit);
    CliffordElement {
        tableau: circuit_tableau(&circuit, 2),
        circuit,
    }
}

/// The 11520 two-qubit Cliffords, ordered by class.
pub fn clifford_group_c2() -> &'static CliffordTable {
    static C2: OnceLock<CliffordTable> = OnceLock::new();
    C2.get_or_init(build_c2)
}

/// Class (0..4) of a C2 table index.
pub fn c2_class(index: usize) -> usize {
    let mut acc = 0;
    for (k, size) in C2_CLASS_SIZES.iter().enumerate() {
        acc += size;
        if index < acc {
            return k;
        }
    }
    C2_CLASS_SIZES.len()
}

pub fn sample_c2_index<R: Rng>(rng: &mut R) -> usize {
    rng.random_range(0..C2_ORDER)
}

/// Uniform two-qubit Clifford for `seed`.
pub fn sample_c2(seed: u64) -> CliffordElement {
    let mut rng = crate::rng::stream(seed, 0);
    clifford_group_c2().elements[sample_c2_index(&mut rng)].clone()
}
