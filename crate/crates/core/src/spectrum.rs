//! Transmon, readout resonator and Purcell filter: Hamiltonian construction,
//! diagonalization and dressed observables as a function of flux.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{Complex, ComplexField, DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Overlap (probability) a label needs before downstream code will trust it.
pub const LABEL_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmonParams {
    /// E_J,max / h in GHz.
    pub ej_max: f64,
    /// E_c / h in GHz.
    pub ec: f64,
    /// SQUID junction asymmetry.
    pub asym: f64,
    /// Charge basis runs over −cutoff..=cutoff.
    pub charge_cutoff: usize,
    pub levels_kept: usize,
}

impl TransmonParams {
    pub fn new(ej_max: f64, ec: f64, asym: f64) -> Self {
        Self {
            ej_max,
            ec,
            asym,
            charge_cutoff: 20,
            levels_kept: 5,
        }
    }

    pub fn charge_basis(&self) -> usize {
        2 * self.charge_cutoff + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels_kept > self.charge_basis() {
            return Err(Error::Truncation {
                levels_kept: self.levels_kept,
                basis: self.charge_basis(),
            });
        }
        if !(self.ej_max.is_finite() && self.ej_max > 0.0) {
            return Err(invalid(format!("ej_max must be positive, got {}", self.ej_max)));
        }
        if !(self.ec.is_finite() && self.ec > 0.0) {
            return Err(invalid(format!("ec must be positive, got {}", self.ec)));
        }
        if self.ej_max / self.ec <= 10.0 {
            return Err(invalid(format!(
                "ej_max/ec = {:.2} is outside the transmon regime (> 10)",
                self.ej_max / self.ec
            )));
        }
        if !(0.0..1.0).contains(&self.asym) {
            return Err(invalid(format!("asym must lie in [0, 1), got {}", self.asym)));
        }
        if self.charge_cutoff < 10 {
            return Err(invalid("charge_cutoff must be at least 10"));
        }
        if self.levels_kept < 3 {
            return Err(invalid("levels_kept must be at least 3"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub transmon: TransmonParams,
    pub omega_r_bare: f64,
    pub omega_p: f64,
    pub g_qr: f64,
    pub j_rp: f64,
    pub kappa_p: f64,
    #[serde(default)]
    pub kappa_int: f64,
    pub n_r: usize,
    pub n_p: usize,
}

impl ChainParams {
    pub fn validate(&self) -> Result<()> {
        self.transmon.validate()?;
        for (name, v) in [
            ("omega_r_bare", self.omega_r_bare),
            ("omega_p", self.omega_p),
            ("g_qr", self.g_qr),
            ("j_rp", self.j_rp),
            ("kappa_p", self.kappa_p),
            ("kappa_int", self.kappa_int),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if self.n_r < 3 || self.n_p < 3 {
            return Err(invalid("photon truncations n_r and n_p must be at least 3"));
        }
        Ok(())
    }

    /// The same chain with the filter removed from the Hamiltonian.
    ///
    /// The returned value uses a one-state filter space, which is below the
    /// public minimum of 3 and therefore only valid for internal evaluation.
    pub fn without_filter(&self) -> Self {
        Self {
            j_rp: 0.0,
            n_p: 1,
            ..*self
        }
    }

    pub fn dims(&self) -> ProductDims {
        ProductDims {
            levels: self.transmon.levels_kept,
            n_r: self.n_r,
            n_p: self.n_p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxPoint {
    /// Φ/Φ₀.
    pub phi: f64,
}

impl FluxPoint {
    pub const MAX: FluxPoint = FluxPoint { phi: 0.0 };
    pub const MIN: FluxPoint = FluxPoint { phi: 0.5 };

    pub fn new(phi: f64) -> Self {
        Self { phi }
    }

    /// Equivalent flux folded into [0, 0.5].
    pub fn folded(&self) -> f64 {
        let x = self.phi.rem_euclid(1.0);
        x.min(1.0 - x)
    }
}

/// Effective Josephson energy of an asymmetric SQUID at the given flux, GHz.
pub fn josephson_energy(t: &TransmonParams, f: FluxPoint) -> f64 {
    let x = PI * f.folded();
    let (s, c) = x.sin_cos();
    t.ej_max * (c * c + t.asym * t.asym * s * s).sqrt()
}

/// Transmon eigenlevels relative to the ground level together with the
/// charge-operator matrix in the eigenbasis, truncated to `levels` states.
pub fn transmon_levels(ej: f64, ec: f64, cutoff: usize, levels: usize) -> (Vec<f64>, DMatrix<f64>) {
    let dim = 2 * cutoff + 1;
    let charges: Vec<f64> = (0..dim).map(|k| k as f64 - cutoff as f64).collect();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for k in 0..dim {
        h[(k, k)] = 4.0 * ec * charges[k] * charges[k];
        if k + 1 < dim {
            h[(k, k + 1)] = -ej / 2.0;
            h[(k + 1, k)] = -ej / 2.0;
        }
    }
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let order = &order[..levels];
    let e0 = eig.eigenvalues[order[0]];
    let energies = order.iter().map(|&i| eig.eigenvalues[i] - e0).collect();

    // Fix each eigenvector's sign so its largest component is positive.
    let vecs: Vec<Vec<f64>> = order
        .iter()
        .map(|&i| {
            let col = eig.eigenvectors.column(i);
            let pivot = col.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            let s = if pivot < 0.0 { -1.0 } else { 1.0 };
            col.iter().map(|v| s * v).collect()
        })
        .collect();
    let mut n_op = DMatrix::zeros(levels, levels);
    for i in 0..levels {
        for j in i..levels {
            // Levels of equal charge parity (including i = j) have no n
            // matrix element; skip them so the product Hamiltonian keeps its
            // exact block structure.
            if (i + j) % 2 == 0 {
                continue;
            }
            let v: f64 = (0..dim).map(|k| vecs[i][k] * charges[k] * vecs[j][k]).sum();
            n_op[(i, j)] = v;
            n_op[(j, i)] = v;
        }
    }
    (energies, n_op)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProductDims {
    pub levels: usize,
    pub n_r: usize,
    pub n_p: usize,
}

impl ProductDims {
    pub fn total(&self) -> usize {
        self.levels * self.n_r * self.n_p
    }

    pub fn index(&self, l: BareLabel) -> Option<usize> {
        (l.transmon < self.levels && l.resonator < self.n_r && l.filter < self.n_p)
            .then(|| (l.transmon * self.n_r + l.resonator) * self.n_p + l.filter)
    }

    pub fn label(&self, index: usize) -> BareLabel {
        BareLabel {
            transmon: index / (self.n_r * self.n_p),
            resonator: (index / self.n_p) % self.n_r,
            filter: index % self.n_p,
        }
    }
}

/// Bare product state: transmon level, resonator photons, filter photons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BareLabel {
    pub transmon: usize,
    pub resonator: usize,
    pub filter: usize,
}

impl BareLabel {
    pub const fn new(transmon: usize, resonator: usize, filter: usize) -> Self {
        Self {
            transmon,
            resonator,
            filter,
        }
    }
}

impl fmt::Display for BareLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{},{},{}>", self.transmon, self.resonator, self.filter)
    }
}

/// A Hamiltonian on the transmon ⊗ resonator ⊗ filter product space.
#[derive(Debug, Clone)]
pub struct Hamiltonian<T> {
    pub matrix: DMatrix<T>,
    pub dims: ProductDims,
    /// Non-fatal diagnostics, e.g. a chain outside the dispersive regime.
    pub warnings: Vec<String>,
}

impl<T: ComplexField<RealField = f64>> Hamiltonian<T> {
    /// Wrap an arbitrary Hermitian matrix; its basis is labelled as transmon levels.
    pub fn from_matrix(matrix: DMatrix<T>) -> Self {
        let n = matrix.nrows();
        Self {
            matrix,
            dims: ProductDims {
                levels: n,
                n_r: 1,
                n_p: 1,
            },
            warnings: Vec::new(),
        }
    }

    /// max |H − H†|.
    pub fn hermiticity_defect(&self) -> f64 {
        let m = &self.matrix;
        let mut worst = 0.0f64;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let d = (m[(i, j)].clone() - m[(j, i)].clone().conjugate()).modulus();
                worst = worst.max(d);
            }
        }
        worst
    }
}

fn ladder(n: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = (k as f64).sqrt();
    }
    a
}

fn kron3<T: ComplexField>(a: &DMatrix<T>, b: &DMatrix<T>, c: &DMatrix<T>) -> DMatrix<T> {
    a.kronecker(b).kronecker(c)
}

struct Blocks {
    energies: Vec<f64>,
    n_op: DMatrix<f64>,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    warnings: Vec<String>,
}

fn blocks(c: &ChainParams, f: FluxPoint) -> Blocks {
    let t = &c.transmon;
    let ej = josephson_energy(t, f);
    let (energies, n_op) = transmon_levels(ej, t.ec, t.charge_cutoff, t.levels_kept);
    let mut warnings = Vec::new();
    let detuning = (c.omega_r_bare - energies[1]).abs();
    if c.g_qr >= detuning {
        warnings.push(format!(
            "g_qr = {:.4} GHz is not below the qubit-resonator detuning {:.4} GHz at phi = {}",
            c.g_qr, detuning, f.phi
        ));
    }
    Blocks {
        energies,
        n_op,
        a: ladder(c.n_r),
        b: ladder(c.n_p),
        warnings,
    }
}

/// The chain Hamiltonian in its literal complex form, GHz.
///
/// Couplings are `i g n (a† − a)` and `−J (a − a†)(b − b†)`.
pub fn build_hamiltonian(c: &ChainParams, f: FluxPoint) -> Result<Hamiltonian<Complex<f64>>> {
    c.transmon.validate()?;
    let bl = blocks(c, f);
    let cx = |m: &DMatrix<f64>| m.map(|v| Complex::new(v, 0.0));
    let i = Complex::new(0.0, 1.0);
    let (iq, ir, ip) = (
        DMatrix::<Complex<f64>>::identity(c.transmon.levels_kept, c.transmon.levels_kept),
        DMatrix::<Complex<f64>>::identity(c.n_r, c.n_r),
        DMatrix::<Complex<f64>>::identity(c.n_p, c.n_p),
    );
    let a = cx(&bl.a);
    let b = cx(&bl.b);
    let ad = a.adjoint();
    let bd = b.adjoint();
    let hq = cx(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(bl.energies.clone())));
    let mut h = kron3(&hq, &ir, &ip);
    h += kron3(&iq, &(&ad * &a), &ip) * Complex::new(c.omega_r_bare, 0.0);
    h += kron3(&iq, &ir, &(&bd * &b)) * Complex::new(c.omega_p, 0.0);
    h += kron3(&cx(&bl.n_op), &((&ad - &a) * i), &ip) * Complex::new(c.g_qr, 0.0);
    h -= kron3(&iq, &(&a - &ad), &(&b - &bd)) * Complex::new(c.j_rp, 0.0);
    Ok(Hamiltonian {
        matrix: h,
        dims: c.dims(),
        warnings: bl.warnings,
    })
}

/// The same Hamiltonian after the diagonal gauge change a → i a, b → i b,
/// which makes every matrix element real without changing the spectrum or
/// the meaning of the bare labels.
pub fn build_real_hamiltonian(c: &ChainParams, f: FluxPoint) -> Result<Hamiltonian<f64>> {
    c.transmon.validate()?;
    let bl = blocks(c, f);
    let dims = c.dims();
    let n = dims.total();
    let mut h = DMatrix::<f64>::zeros(n, n);
    let idx = |q: usize, r: usize, p: usize| (q * c.n_r + r) * c.n_p + p;
    for q in 0..dims.levels {
        for r in 0..c.n_r {
            for p in 0..c.n_p {
                let k = idx(q, r, p);
                h[(k, k)] = bl.energies[q] + c.omega_r_bare * r as f64 + c.omega_p * p as f64;
                // g n (a + a†): connects r and r + 1.
                if r + 1 < c.n_r && c.g_qr != 0.0 {
                    let amp = c.g_qr * ((r + 1) as f64).sqrt();
                    for q2 in 0..dims.levels {
                        let v = amp * bl.n_op[(q, q2)];
                        if v != 0.0 {
                            let k2 = idx(q2, r + 1, p);
                            h[(k, k2)] += v;
                            h[(k2, k)] += v;
                        }
                    }
                }
                // J (a + a†)(b + b†): r ± 1 and p ± 1; add each unordered pair once.
                if r + 1 < c.n_r && c.j_rp != 0.0 {
                    let ar = ((r + 1) as f64).sqrt();
                    if p + 1 < c.n_p {
                        let v = c.j_rp * ar * ((p + 1) as f64).sqrt();
                        let k2 = idx(q, r + 1, p + 1);
                        h[(k, k2)] += v;
                        h[(k2, k)] += v;
                    }
                    if p >= 1 {
                        let v = c.j_rp * ar * (p as f64).sqrt();
                        let k2 = idx(q, r + 1, p - 1);
                        h[(k, k2)] += v;
                        h[(k2, k)] += v;
                    }
                }
            }
        }
    }
    Ok(Hamiltonian {
        matrix: h,
        dims,
        warnings: bl.warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DressedSpectrum {
    /// Level frequencies in GHz relative to the lowest one, ascending.
    pub energies: Vec<f64>,
    pub labels: Vec<BareLabel>,
    /// |⟨bare|dressed⟩|² for each level's assigned label.
    pub overlaps: Vec<f64>,
    #[serde(skip)]
    pub dims: ProductDims,
}

impl DressedSpectrum {
    pub fn level_of(&self, label: BareLabel) -> Result<usize> {
        let k = self
            .labels
            .iter()
            .position(|l| *l == label)
            .ok_or_else(|| Error::LabelAmbiguity {
                label: label.to_string(),
                overlap: 0.0,
            })?;
        if self.overlaps[k] <= LABEL_THRESHOLD {
            return Err(Error::LabelAmbiguity {
                label: label.to_string(),
                overlap: self.overlaps[k],
            });
        }
        Ok(k)
    }

    pub fn energy_of(&self, label: BareLabel) -> Result<f64> {
        Ok(self.energies[self.level_of(label)?])
    }
}

/// Eigen-decompose a Hermitian Hamiltonian and label each dressed level by
/// greedy maximum-overlap matching against the bare product basis.
///
/// Uncoupled blocks (e.g. the two parity sectors of the chain) are found from
/// the sparsity pattern and diagonalized separately.
pub fn diagonalize<T>(h: &Hamiltonian<T>) -> DressedSpectrum
where
    T: ComplexField<RealField = f64>,
{
    let n = h.matrix.nrows();
    // (eigenvalue, component, eigenvector weights over the component's basis)
    let mut levels: Vec<(f64, usize, Vec<f64>)> = Vec::with_capacity(n);
    let components = connected_blocks(&h.matrix);
    for (ci, comp) in components.iter().enumerate() {
        let m = comp.len();
        let sub = DMatrix::from_fn(m, m, |i, j| h.matrix[(comp[i], comp[j])].clone());
        let eig = SymmetricEigen::new(sub);
        for k in 0..m {
            let w = eig.eigenvectors.column(k).iter().map(|v| v.clone().modulus_squared()).collect();
            levels.push((eig.eigenvalues[k], ci, w));
        }
    }
    levels.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let e0 = levels[0].0;
    let energies: Vec<f64> = levels.iter().map(|l| l.0 - e0).collect();

    let mut level_label = vec![usize::MAX; n];
    let mut level_overlap = vec![0.0; n];
    for (ci, comp) in components.iter().enumerate() {
        let members: Vec<usize> = (0..n).filter(|&k| levels[k].1 == ci).collect();
        let mut used = vec![false; comp.len()];
        let mut assigned = 0;
        // Large overlaps settle almost every level; only then fall back to
        // the full (sorted) list for whatever is left.
        for cutoff in [1e-3, f64::NEG_INFINITY] {
            let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
            for &lvl in &members {
                if level_label[lvl] != usize::MAX {
                    continue;
                }
                for (local, &x) in levels[lvl].2.iter().enumerate() {
                    if x >= cutoff && !used[local] {
                        pairs.push((x, lvl, local));
                    }
                }
            }
            pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
            for (x, lvl, local) in pairs {
                if level_label[lvl] != usize::MAX || used[local] {
                    continue;
                }
                level_label[lvl] = comp[local];
                level_overlap[lvl] = x;
                used[local] = true;
                assigned += 1;
            }
            if assigned == members.len() {
                break;
            }
        }
    }
    DressedSpectrum {
        energies,
        labels: level_label.iter().map(|&b| h.dims.label(b)).collect(),
        overlaps: level_overlap,
        dims: h.dims,
    }
}

/// Index sets of the connected components of the matrix's nonzero pattern.
fn connected_blocks<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if m[(i, j)].clone().modulus() != 0.0 || m[(j, i)].clone().modulus() != 0.0 {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = root(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[r]].push(i);
    }
    blocks
}

/// Dressed quantities read off the labelled spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DressedObservables {
    pub ge: f64,
    pub ef: f64,
    pub anharmonicity: f64,
    /// Resonator-like transition frequency with the qubit in g, e, f.
    pub resonator: [f64; 3],
    /// 2χ = ω_r,e − ω_r,g.
    pub two_chi: f64,
}

impl DressedObservables {
    pub fn chi(&self) -> f64 {
        self.two_chi / 2.0
    }
}

pub fn observables_from(spec: &DressedSpectrum) -> Result<DressedObservables> {
    let e = |q, r| spec.energy_of(BareLabel::new(q, r, 0));
    let (g0, e0, f0) = (e(0, 0)?, e(1, 0)?, e(2, 0)?);
    let ge = e0 - g0;
    let ef = f0 - e0;
    let resonator = [e(0, 1)? - g0, e(1, 1)? - e0, e(2, 1)? - f0];
    Ok(DressedObservables {
        ge,
        ef,
        anharmonicity: ef - ge,
        resonator,
        two_chi: resonator[1] - resonator[0],
    })
}

pub fn dressed_observables(c: &ChainParams, f: FluxPoint) -> Result<DressedObservables> {
    observables_from(&diagonalize(&build_real_hamiltonian(c, f)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn table_chain(ej: f64, ec: f64, g: f64, wr: f64) -> ChainParams {
        ChainParams {
            transmon: TransmonParams::new(ej, ec, 0.3),
            omega_r_bare: wr,
            omega_p: wr + 0.06,
            g_qr: g,
            j_rp: 0.02,
            kappa_p: 0.025,
            kappa_int: 0.0,
            n_r: 5,
            n_p: 5,
        }
    }

    #[test]
    fn josephson_energy_extrema() {
        let t = TransmonParams::new(25.44, 0.154, 0.3);
        assert_eq!(josephson_energy(&t, FluxPoint::MAX), 25.44);
        assert!((josephson_energy(&t, FluxPoint::MIN) - 7.632).abs() < 1e-12);
    }

    #[test]
    fn validation_errors() {
        let mut t = TransmonParams::new(25.44, 0.154, 0.3);
        t.levels_kept = 30;
        t.charge_cutoff = 10;
        assert!(matches!(t.validate(), Err(Error::Truncation { levels_kept: 30, basis: 21 })));
        assert!(TransmonParams::new(1.0, 0.2, 0.3).validate().is_err());
        assert!(TransmonParams::new(25.0, 0.2, 1.0).validate().is_err());
    }

    #[test]
    fn asymptotic_transmon_frequency() {
        let mut c = table_chain(25.44, 0.154, 0.0, 7.0);
        c.j_rp = 0.0;
        let o = dressed_observables(&c, FluxPoint::MAX).unwrap();
        let oracle = (8.0f64 * 25.44 * 0.154).sqrt() - 0.154;
        assert!((o.ge - oracle).abs() < 0.010, "{} vs {}", o.ge, oracle);
        assert!(o.two_chi.abs() < 1e-12);
        assert!((o.resonator[0] - 7.0).abs() < 1e-12);
        assert!((o.resonator[2] - 7.0).abs() < 1e-12);
    }

    #[test]
    fn separable_limit_sums_mode_energies() {
        let mut c = table_chain(25.44, 0.154, 0.0, 6.6);
        c.j_rp = 0.0;
        let spec = diagonalize(&build_real_hamiltonian(&c, FluxPoint::MAX).unwrap());
        let t = &c.transmon;
        let (lv, _) = transmon_levels(t.ej_max, t.ec, t.charge_cutoff, t.levels_kept);
        for (k, l) in spec.labels.iter().enumerate() {
            let bare = lv[l.transmon] + 6.6 * l.resonator as f64 + c.omega_p * l.filter as f64;
            assert!((spec.energies[k] - bare).abs() < 1e-9);
            assert!((spec.overlaps[k] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn complex_and_real_forms_agree() {
        let c = table_chain(27.79, 0.154, 0.117, 7.022);
        let hc = build_hamiltonian(&c, FluxPoint::new(0.2)).unwrap();
        let hr = build_real_hamiltonian(&c, FluxPoint::new(0.2)).unwrap();
        let max = hc.matrix.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(hc.hermiticity_defect() < 1e-12 * max);
        let sc = diagonalize(&hc);
        let sr = diagonalize(&hr);
        for (a, b) in sc.energies.iter().zip(&sr.energies) {
            assert!((a - b).abs() < 1e-9);
        }
        assert_eq!(sc.labels[..20], sr.labels[..20]);
    }

    #[test]
    fn diagonal_input() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 3.0, 2.0]));
        let s = diagonalize(&Hamiltonian::from_matrix(m));
        assert_eq!(s.energies, vec![0.0, 1.0, 2.0]);
        assert!(s.overlaps.iter().all(|&o| o == 1.0));
        assert_eq!(s.labels[1].transmon, 2);
    }

    #[test]
    fn resonant_two_level_splitting() {
        let g = 0.0123;
        let m = DMatrix::from_row_slice(2, 2, &[5.0, g, g, 5.0]);
        let s = diagonalize(&Hamiltonian::from_matrix(m));
        assert!((s.energies[1] - 2.0 * g).abs() < 1e-14);
    }

    #[test]
    fn ambiguous_label_is_reported() {
        // The non-degenerate ground state is an equal superposition of all three.
        let m = DMatrix::from_row_slice(3, 3, &[0.0, -1.0, -1.0, -1.0, 0.0, -1.0, -1.0, -1.0, 0.0]);
        let s = diagonalize(&Hamiltonian::from_matrix(m));
        assert!((s.overlaps[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!(matches!(
            s.energy_of(s.labels[0]),
            Err(Error::LabelAmbiguity { .. })
        ));
    }

    #[test]
    fn perturbative_dispersive_shift() {
        // |Δ| > 8 g keeps the full model close to the second-order result.
        let mut c = table_chain(25.44, 0.154, 0.05, 6.0);
        c.j_rp = 0.0;
        c.n_p = 3;
        let o = dressed_observables(&c, FluxPoint::MAX).unwrap();
        let delta = o.ge - 6.0;
        assert!(delta.abs() > 8.0 * c.g_qr);
        // The coupling enters through the charge operator, so the effective
        // ge coupling is g_qr·|n_01|.
        let t = &c.transmon;
        let (_, n) = transmon_levels(t.ej_max, t.ec, t.charge_cutoff, 3);
        let g01 = c.g_qr * n[(0, 1)].abs();
        let a = o.anharmonicity;
        let textbook = 2.0 * g01 * g01 * a / (delta * (delta + a));
        assert!((o.two_chi - textbook).abs() / textbook.abs() < 0.15, "{} vs {}", o.two_chi, textbook);
        assert!(o.two_chi < 0.0);
    }
}
