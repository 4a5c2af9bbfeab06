//! Time evolution of coupled Duffing oscillators under flux control:
//! unitary and Lindblad propagation, single-qubit gates, relaxometry,
//! spectroscopy, chevrons and CZ calibration.

mod pair;
mod single;
mod twoqubit;

pub use pair::*;
pub use single::*;
pub use twoqubit::*;

use nalgebra::{Complex, DMatrix};

pub type C64 = Complex<f64>;

/// Phase budget per step, radians of 2π·|H|·dt. Steps are exact for
/// piecewise-constant Hamiltonians; the budget guards against sample
/// periods that under-resolve the waveform itself.
pub const STEP_PHASE_LIMIT: f64 = 50.0;

pub(crate) fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

pub(crate) fn lowering(levels: usize) -> DMatrix<f64> {
    DMatrix::from_fn(levels, levels, |i, j| if j == i + 1 { (j as f64).sqrt() } else { 0.0 })
}

pub(crate) fn number(levels: usize) -> DMatrix<f64> {
    DMatrix::from_fn(levels, levels, |i, j| if i == j { i as f64 } else { 0.0 })
}

/// exp(−i·2π·H·dt) for real symmetric H in GHz.
pub(crate) fn unitary_step(h: &DMatrix<f64>, dt: f64) -> DMatrix<C64> {
    let eig = h.clone().symmetric_eigen();
    let v = eig.eigenvectors.map(|x| C64::new(x, 0.0));
    let phases = eig
        .eigenvalues
        .map(|e| C64::from_polar(1.0, -2.0 * std::f64::consts::PI * e * dt));
    let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * phases[j]);
    scaled * v.adjoint()
}

/// Lindblad generator on column-stacked density matrices.
pub(crate) fn liouvillian(h: &DMatrix<C64>, collapse: &[DMatrix<C64>]) -> DMatrix<C64> {
    let n = h.nrows();
    let id = DMatrix::<C64>::identity(n, n);
    let mi = C64::new(0.0, -2.0 * std::f64::consts::PI);
    let mut l = (id.kronecker(h) - h.transpose().kronecker(&id)) * mi;
    for c in collapse {
        let cdc = c.adjoint() * c;
        l += c.conjugate().kronecker(c);
        l -= id.kronecker(&cdc) * C64::new(0.5, 0.0);
        l -= cdc.transpose().kronecker(&id) * C64::new(0.5, 0.0);
    }
    l
}

pub(crate) fn vec_rho(rho: &DMatrix<C64>) -> nalgebra::DVector<C64> {
    nalgebra::DVector::from_column_slice(rho.as_slice())
}

pub(crate) fn unvec_rho(v: &nalgebra::DVector<C64>, n: usize) -> DMatrix<C64> {
    DMatrix::from_column_slice(n, n, v.as_slice())
}

/// exp(−i·2π·H·dt) for Hermitian H in GHz.
pub(crate) fn hermitian_step(h: &DMatrix<C64>, dt: f64) -> DMatrix<C64> {
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = eig
        .eigenvalues
        .map(|e| C64::from_polar(1.0, -2.0 * std::f64::consts::PI * e * dt));
    let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * phases[j]);
    scaled * v.adjoint()
}

/// Average gate fidelity of a channel on the subspace spanned by the basis
/// states `subspace`, against the ideal unitary `ideal` on that subspace.
/// `channel` maps full-space operators to full-space operators.
pub fn average_gate_fidelity<F>(channel: F, ideal: &DMatrix<C64>, subspace: &[usize], dim: usize) -> f64
where
    F: Fn(&DMatrix<C64>) -> DMatrix<C64>,
{
    let d = subspace.len();
    let image = |i: usize| -> nalgebra::DVector<C64> {
        let mut v = nalgebra::DVector::zeros(dim);
        for (r, &s) in subspace.iter().enumerate() {
            v[s] = ideal[(r, i)];
        }
        v
    };
    let images: Vec<_> = (0..d).map(image).collect();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            let mut x = DMatrix::zeros(dim, dim);
            x[(subspace[i], subspace[j])] = C64::new(1.0, 0.0);
            let y = channel(&x);
            acc += (images[i].adjoint() * y * &images[j])[(0, 0)];
        }
    }
    let f_pro = acc.re / (d * d) as f64;
    (d as f64 * f_pro + 1.0) / (d as f64 + 1.0)
}
