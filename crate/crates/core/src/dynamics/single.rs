use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{hermitian_step, liouvillian, lowering, number, unvec_rho, vec_rho, Rates, QubitNoise, T2Kind, C64};
use crate::error::{invalid, Error, Result};
use crate::numeric::{levenberg_marquardt, LsqOptions};

/// Resonant microwave pulse with a sin² envelope. `envelope` holds the
/// Rabi frequency Ω (GHz) at sample midpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleQubitGate {
    pub angle: f64,
    pub phase: f64,
    pub duration_ns: f64,
    pub sample_period_ns: f64,
    pub envelope: Vec<f64>,
    #[serde(default)]
    pub correction: PhaseCorrection,
}

/// Drive-frequency offset applied during the pulse plus virtual-Z frame
/// updates before and after it; cancels the ac-Stark shift from |f⟩.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseCorrection {
    pub drive_detuning: f64,
    pub z_before: f64,
    pub z_after: f64,
}

impl SingleQubitGate {
    /// Rotation on the qubit subspace implemented by the pulse.
    pub fn ideal_unitary(&self) -> DMatrix<C64> {
        rotation(self.angle, self.phase)
    }
}

/// Builds a sin² pulse whose sampled area 2π·ΣΩ·dt equals `angle`.
pub fn single_qubit_gate(angle: f64, phase: f64, duration_ns: f64, sample_period_ns: f64) -> Result<SingleQubitGate> {
    if !(duration_ns > 0.0 && sample_period_ns > 0.0) {
        return Err(invalid("duration and sample period must be positive"));
    }
    if !(angle.is_finite() && phase.is_finite()) {
        return Err(invalid("angle and phase must be finite"));
    }
    let n = (duration_ns / sample_period_ns).round().max(1.0) as usize;
    let shape: Vec<f64> = (0..n)
        .map(|k| {
            let t = (k as f64 + 0.5) * sample_period_ns;
            (PI * t / duration_ns).sin().powi(2)
        })
        .collect();
    let area: f64 = shape.iter().sum::<f64>() * sample_period_ns;
    let omega0 = angle / (2.0 * PI * area);
    Ok(SingleQubitGate {
        angle,
        phase,
        duration_ns,
        sample_period_ns,
        envelope: shape.into_iter().map(|s| omega0 * s).collect(),
        correction: PhaseCorrection::default(),
    })
}

/// exp(−i·θ/2·(cos φ·X + sin φ·Y)).
pub fn rotation(theta: f64, phi: f64) -> DMatrix<C64> {
    let c = C64::new((theta / 2.0).cos(), 0.0);
    let s = (theta / 2.0).sin();
    let off = C64::new(0.0, -s);
    DMatrix::from_row_slice(
        2,
        2,
        &[c, off * C64::from_polar(1.0, -phi), off * C64::from_polar(1.0, phi), c],
    )
}

/// diag(e^{−iθ/2}, e^{iθ/2}).
pub fn rz(theta: f64) -> DMatrix<C64> {
    DMatrix::from_row_slice(
        2,
        2,
        &[
            C64::from_polar(1.0, -theta / 2.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::from_polar(1.0, theta / 2.0),
        ],
    )
}

/// Software frame for virtual-Z gates. Z rotations cost no time; later
/// pulses are played with their phase shifted by the accumulated frame.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct VirtualFrame {
    pub phase: f64,
}

impl VirtualFrame {
    pub fn z(&mut self, theta: f64) {
        self.phase += theta;
    }

    /// Physical drive phase for a pulse about nominal axis `phi`.
    pub fn pulse_phase(&self, phi: f64) -> f64 {
        phi - self.phase
    }

    /// The Z rotation still owed by the frame.
    pub fn pending(&self) -> DMatrix<C64> {
        rz(self.phase)
    }
}

/// Drive-frame model of one transmon for pulse-level simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveModel {
    pub anharmonicity: f64,
    pub levels: usize,
    /// Qubit frequency minus drive frequency, GHz.
    pub detuning: f64,
}

impl DriveModel {
    pub fn new(anharmonicity: f64, levels: usize) -> Self {
        Self {
            anharmonicity,
            levels,
            detuning: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.levels < 2 {
            return Err(invalid("need at least two levels"));
        }
        if !(self.anharmonicity < 0.0) {
            return Err(invalid("anharmonicity must be negative"));
        }
        Ok(())
    }

    fn hamiltonian(&self, omega: f64, phase: f64) -> DMatrix<C64> {
        let n = number(self.levels);
        let a = lowering(self.levels);
        let drift = &n * self.detuning + (&n * (&n - DMatrix::identity(self.levels, self.levels))) * (0.5 * self.anharmonicity);
        let e = C64::from_polar(0.5 * omega, phase);
        let ad = a.transpose().map(|x| e * x);
        let drive = &ad + ad.adjoint();
        drift.map(|x| C64::new(x, 0.0)) + drive
    }
}

/// diag(e^{iθ·n}) on `levels` levels.
fn frame_phase(theta: f64, levels: usize) -> DMatrix<C64> {
    DMatrix::from_fn(levels, levels, |i, j| if i == j { C64::from_polar(1.0, theta * i as f64) } else { C64::new(0.0, 0.0) })
}

fn corrected_model(gate: &SingleQubitGate, model: &DriveModel) -> DriveModel {
    DriveModel {
        detuning: model.detuning - gate.correction.drive_detuning,
        ..*model
    }
}

/// Unitary of the pulse on all `model.levels` levels.
pub fn single_qubit_unitary(gate: &SingleQubitGate, model: &DriveModel) -> Result<DMatrix<C64>> {
    model.validate()?;
    let d = model.levels;
    let m = corrected_model(gate, model);
    let mut u = frame_phase(gate.correction.z_before, d);
    for &omega in &gate.envelope {
        u = hermitian_step(&m.hamiltonian(omega, gate.phase), gate.sample_period_ns) * u;
    }
    Ok(frame_phase(gate.correction.z_after, d) * u)
}

/// Superoperator (column-stacked) of the pulse under relaxation and dephasing.
pub fn single_qubit_superop(gate: &SingleQubitGate, model: &DriveModel, rates: &Rates) -> Result<DMatrix<C64>> {
    model.validate()?;
    let d = model.levels;
    let m = corrected_model(gate, model);
    let collapse = collapse_single(d, rates);
    let conj = |u: DMatrix<C64>| u.conjugate().kronecker(&u);
    let mut s = conj(frame_phase(gate.correction.z_before, d));
    for &omega in &gate.envelope {
        let l = liouvillian(&m.hamiltonian(omega, gate.phase), &collapse);
        s = (l * C64::new(gate.sample_period_ns, 0.0)).exp() * s;
    }
    Ok(conj(frame_phase(gate.correction.z_after, d)) * s)
}

/// Average fidelity of a unitary restricted to {g, e} against `ideal`,
/// counting leaked amplitude as lost.
fn subspace_fidelity(u: &DMatrix<C64>, ideal: &DMatrix<C64>) -> f64 {
    let sub = u.view((0, 0), (2, 2)).into_owned();
    let m = ideal.adjoint() * &sub;
    let tr = m[(0, 0)] + m[(1, 1)];
    let norm = (sub.adjoint() * &sub).trace().re;
    (tr.norm_sqr() + norm) / 6.0
}

/// Tunes the drive-frequency offset and virtual-Z frame updates so the
/// pulse best matches its ideal rotation in the noiseless model.
pub fn calibrate_single_qubit(gate: &SingleQubitGate, model: &DriveModel) -> Result<SingleQubitGate> {
    model.validate()?;
    if gate.angle == 0.0 {
        return Ok(gate.clone());
    }
    let ideal = gate.ideal_unitary();
    let trial = |x: &[f64]| {
        let mut g = gate.clone();
        g.correction = PhaseCorrection {
            drive_detuning: x[0],
            z_before: x[1],
            z_after: x[2],
        };
        g
    };
    let cost = |x: &[f64]| {
        single_qubit_unitary(&trial(x), model)
            .map(|u| 1.0 - subspace_fidelity(&u, &ideal))
            .unwrap_or(f64::INFINITY)
    };
    let scale = 1.0 / gate.duration_ns;
    let best = crate::numeric::minimize(
        cost,
        &[0.0, 0.0, 0.0],
        &[0.05 * scale, 0.05, 0.05],
        &crate::numeric::NelderMeadOptions {
            max_evals: 3000,
            f_tol: 1e-20,
            x_tol: 1e-12,
        },
    );
    Ok(trial(&best.x))
}

fn collapse_single(levels: usize, rates: &Rates) -> Vec<DMatrix<C64>> {
    let mut c = Vec::new();
    if rates.gamma1 > 0.0 {
        c.push(lowering(levels).map(|x| C64::new(x * rates.gamma1.sqrt(), 0.0)));
    }
    if rates.gamma_phi > 0.0 {
        c.push(number(levels).map(|x| C64::new(x * (2.0 * rates.gamma_phi).sqrt(), 0.0)));
    }
    c
}

/// Population outside {g, e} after the pulse, averaged over g and e inputs.
pub fn single_qubit_leakage(gate: &SingleQubitGate, model: &DriveModel) -> Result<f64> {
    let u = single_qubit_unitary(gate, model)?;
    let mut kept = 0.0;
    for c in 0..2 {
        for r in 0..2 {
            kept += u[(r, c)].norm_sqr();
        }
    }
    Ok(1.0 - kept / 2.0)
}

/// Average gate error of the pulse on the qubit subspace.
pub fn single_qubit_gate_error(gate: &SingleQubitGate, model: &DriveModel, rates: &Rates) -> Result<f64> {
    let s = single_qubit_superop(gate, model, rates)?;
    let d = model.levels;
    let f = super::average_gate_fidelity(|x| unvec_rho(&(&s * vec_rho(x)), d), &gate.ideal_unitary(), &[0, 1], d);
    Ok(1.0 - f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelaxometryKind {
    T1,
    Ramsey,
    Echo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relaxometry {
    pub kind: RelaxometryKind,
    pub times_ns: Vec<f64>,
    /// Excited-state population at each delay.
    pub populations: Vec<f64>,
    pub fitted_time_us: f64,
    pub fitted_time_err_us: f64,
    /// Ramsey fringe frequency, MHz.
    pub fringe_mhz: Option<f64>,
}

/// Embeds a qubit-subspace unitary into `levels` levels.
fn embed(u2: &DMatrix<C64>, levels: usize) -> DMatrix<C64> {
    let mut u = DMatrix::<C64>::identity(levels, levels);
    u.view_mut((0, 0), (2, 2)).copy_from(u2);
    u
}

/// Simulated T1, Ramsey or Hahn-echo experiment with instantaneous ideal
/// pulses. Ramsey uses T2*, echo uses T2 echo.
pub fn relaxometry(
    kind: RelaxometryKind,
    times_ns: &[f64],
    noise: &QubitNoise,
    detuning_ghz: f64,
    model: &DriveModel,
) -> Result<Relaxometry> {
    model.validate()?;
    if times_ns.is_empty() {
        return Err(invalid("no delay times"));
    }
    if times_ns.windows(2).any(|w| !(w[1] > w[0])) || times_ns[0] < 0.0 {
        return Err(invalid("delay times must be non-negative and ascending"));
    }
    let rates = noise.rates(match kind {
        RelaxometryKind::Echo => T2Kind::Echo,
        _ => T2Kind::Star,
    })?;
    let d = model.levels;
    let idle = DriveModel {
        detuning: detuning_ghz,
        ..*model
    };
    let l = liouvillian(&idle.hamiltonian(0.0, 0.0), &collapse_single(d, &rates));
    let half_pi = embed(&rotation(PI / 2.0, 0.0), d);
    let pi_x = embed(&rotation(PI, 0.0), d);
    let apply = |u: &DMatrix<C64>, rho: &DMatrix<C64>| u * rho * u.adjoint();
    let wait = |rho: &DMatrix<C64>, t: f64| unvec_rho(&((&l * C64::new(t, 0.0)).exp() * vec_rho(rho)), d);
    let mut ground = DMatrix::<C64>::zeros(d, d);
    ground[(0, 0)] = C64::new(1.0, 0.0);

    let populations: Vec<f64> = times_ns
        .par_iter()
        .map(|&t| {
            let rho = match kind {
                RelaxometryKind::T1 => wait(&apply(&pi_x, &ground), t),
                RelaxometryKind::Ramsey => {
                    let r = wait(&apply(&half_pi, &ground), t);
                    apply(&half_pi, &r)
                }
                RelaxometryKind::Echo => {
                    let r = wait(&apply(&half_pi, &ground), t / 2.0);
                    let r = wait(&apply(&pi_x, &r), t / 2.0);
                    apply(&half_pi, &r)
                }
            };
            rho[(1, 1)].re
        })
        .collect();

    let span = times_ns[times_ns.len() - 1] - times_ns[0];
    if !(span > 0.0) {
        return Err(Error::FitDivergence("need at least two distinct delays".into()));
    }
    let opts = LsqOptions::default();
    let (time, err, fringe) = match kind {
        RelaxometryKind::T1 | RelaxometryKind::Echo => {
            let p0 = populations[0];
            let pl = populations[populations.len() - 1];
            let fit = levenberg_marquardt(
                |p| {
                    times_ns
                        .iter()
                        .zip(&populations)
                        .map(|(t, y)| p[0] * (-t / p[1]).exp() + p[2] - y)
                        .collect()
                },
                &[p0 - pl, span / 2.0, pl],
                &opts,
            )?;
            (fit.params[1], fit.scaled_std_errors()[1], None)
        }
        RelaxometryKind::Ramsey => {
            // Several decay seeds; the lowest cost wins.
            let mut best: Option<crate::numeric::LsqFit> = None;
            for tau in [span / 8.0, span / 2.0, 2.0 * span] {
                let fit = levenberg_marquardt(
                    |p| {
                        times_ns
                            .iter()
                            .zip(&populations)
                            .map(|(t, y)| p[0] * (-t / p[1]).exp() * (2.0 * PI * p[2] * t + p[3]).cos() + p[4] - y)
                            .collect()
                    },
                    &[0.5, tau, detuning_ghz.abs(), 0.0, 0.5],
                    &opts,
                );
                if let Ok(f) = fit {
                    if best.as_ref().map_or(true, |b| f.chi2 < b.chi2) {
                        best = Some(f);
                    }
                }
            }
            let fit = best.ok_or_else(|| Error::FitDivergence("ramsey fit failed".into()))?;
            (fit.params[1].abs(), fit.scaled_std_errors()[1], Some(fit.params[2].abs() * 1e3))
        }
    };
    if !(time.is_finite() && time > 0.0) {
        return Err(Error::FitDivergence(format!("fitted time constant {time}")));
    }
    Ok(Relaxometry {
        kind,
        times_ns: times_ns.to_vec(),
        populations,
        fitted_time_us: time * 1e-3,
        fitted_time_err_us: err * 1e-3,
        fringe_mhz: fringe,
    })
}

/// Propagates a pure state through the pulse.
pub fn apply_single_qubit(gate: &SingleQubitGate, model: &DriveModel, psi: &DVector<C64>) -> Result<DVector<C64>> {
    if psi.len() != model.levels {
        return Err(invalid("state dimension does not match the model"));
    }
    Ok(single_qubit_unitary(gate, model)? * psi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &DMatrix<C64>, b: &DMatrix<C64>, tol: f64) -> bool {
        (a - b).iter().all(|z| z.norm() < tol)
    }

    #[test]
    fn zero_angle_is_identity() {
        let g = single_qubit_gate(0.0, 0.3, 40.0, 0.5).unwrap();
        assert!(g.envelope.iter().all(|&x| x == 0.0));
        let u = single_qubit_unitary(&g, &DriveModel::new(-0.2, 3)).unwrap();
        assert!(close(&u, &DMatrix::identity(3, 3), 1e-14));
    }

    #[test]
    fn sampled_area_matches_angle() {
        let g = single_qubit_gate(PI, 0.0, 40.0, 0.5).unwrap();
        let area: f64 = g.envelope.iter().sum::<f64>() * 0.5 * 2.0 * PI;
        assert!((area - PI).abs() < 1e-12);
        // Two-level propagation reproduces the ideal rotation exactly.
        let u = single_qubit_unitary(&g, &DriveModel::new(-0.2, 2)).unwrap();
        assert!(close(&u, &g.ideal_unitary(), 1e-12));
    }

    #[test]
    fn virtual_frame_moves_z_to_the_end() {
        // X90 · Z(θ) · X90 played as X90 then a phase-shifted X90, with Z(θ) owed.
        let theta = 0.7;
        let direct = rotation(PI / 2.0, 0.0) * rz(theta) * rotation(PI / 2.0, 0.0);
        let mut frame = VirtualFrame::default();
        let first = rotation(PI / 2.0, frame.pulse_phase(0.0));
        frame.z(theta);
        let second = rotation(PI / 2.0, frame.pulse_phase(0.0));
        let played = frame.pending() * second * first;
        assert!(close(&direct, &played, 1e-14));
    }
}
