//! Dispersive readout through a resonator and Purcell filter: feedline
//! transmission, hybridized linewidths, single-shot IQ records and their
//! classification.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{Complex, Matrix2, Vector2};
use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::stream;
use crate::spectrum::{dressed_observables, ChainParams, FluxPoint};

type C64 = Complex<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QubitState {
    G,
    E,
    F,
}

impl QubitState {
    pub const ALL: [QubitState; 3] = [QubitState::G, QubitState::E, QubitState::F];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    pub fn symbol(self) -> &'static str {
        ["g", "e", "f"][self.index()]
    }
}

impl fmt::Display for QubitState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Resonator/filter pair as seen from the feedline. `omega_r` holds the
/// qubit-state-dependent resonator frequency with the filter decoupled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutModes {
    pub omega_r: [f64; 3],
    pub omega_p: f64,
    pub j_rp: f64,
    pub kappa_p: f64,
    pub kappa_int: f64,
}

impl ReadoutModes {
    /// Per-state resonator frequencies from the chain spectrum at `flux`.
    pub fn from_chain(c: &ChainParams, flux: FluxPoint) -> Result<Self> {
        c.validate()?;
        let o = dressed_observables(&c.without_filter(), flux)?;
        Ok(Self {
            omega_r: o.resonator,
            omega_p: c.omega_p,
            j_rp: c.j_rp,
            kappa_p: c.kappa_p,
            kappa_int: c.kappa_int,
        })
    }

    pub fn two_chi(&self) -> f64 {
        self.omega_r[1] - self.omega_r[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridModes {
    pub kappa_r_eff: f64,
    pub kappa_p_eff: f64,
    pub omega_r_like: f64,
    pub omega_p_like: f64,
    /// Resonator weight of the resonator-like eigenvector.
    pub resonator_weight: f64,
}

impl HybridModes {
    /// Complex eigenvalue ω − iκ/2 of the resonator-like mode.
    pub fn resonator_pole(&self) -> C64 {
        C64::new(self.omega_r_like, -self.kappa_r_eff / 2.0)
    }
}

/// Eigenmodes of [[ω_r − iκ_int/2, J], [J, ω_p − iκ_p/2]].
pub fn hybridized_linewidths(m: &ReadoutModes, s: QubitState) -> Result<HybridModes> {
    let wr = m.omega_r[s.index()];
    if m.j_rp == 0.0 {
        return Ok(HybridModes {
            kappa_r_eff: m.kappa_int,
            kappa_p_eff: m.kappa_p,
            omega_r_like: wr,
            omega_p_like: m.omega_p,
            resonator_weight: 1.0,
        });
    }
    let a = C64::new(wr, -m.kappa_int / 2.0);
    let d = C64::new(m.omega_p, -m.kappa_p / 2.0);
    let j = C64::new(m.j_rp, 0.0);
    let half = (a - d) / 2.0;
    let root = (half * half + j * j).sqrt();
    let mean = (a + d) / 2.0;
    let lambdas = [mean + root, mean - root];
    // Eigenvector (J, λ − a).
    let weight = |l: C64| {
        let r = j.norm_sqr();
        let p = (l - a).norm_sqr();
        r / (r + p)
    };
    let w = [weight(lambdas[0]), weight(lambdas[1])];
    if (w[0] - 0.5).abs() < 0.01 && (w[1] - 0.5).abs() < 0.01 {
        return Err(Error::ModeMixing { weight: w[0] });
    }
    let (r, p) = if w[0] >= w[1] { (0, 1) } else { (1, 0) };
    Ok(HybridModes {
        kappa_r_eff: -2.0 * lambdas[r].im,
        kappa_p_eff: -2.0 * lambdas[p].im,
        omega_r_like: lambdas[r].re,
        omega_p_like: lambdas[p].re,
        resonator_weight: w[r],
    })
}

/// Feedline transmission of a notch-coupled filter with a resonator hanging
/// off it.
pub fn transmission_s21(m: &ReadoutModes, s: QubitState, grid: &[f64]) -> Vec<C64> {
    let wr = m.omega_r[s.index()];
    let i = C64::new(0.0, 1.0);
    grid.iter()
        .map(|&w| {
            let res = C64::new(m.kappa_int / 2.0, 0.0) + i * (wr - w);
            if res.norm_sqr() == 0.0 && m.j_rp != 0.0 {
                return C64::new(1.0, 0.0);
            }
            let den = C64::new(m.kappa_p / 2.0, 0.0) + i * (m.omega_p - w) + m.j_rp * m.j_rp / res;
            C64::new(1.0, 0.0) - (m.kappa_p / 2.0) / den
        })
        .collect()
}

/// Probe frequency maximizing ||S_g| − |S_e|| + ||S_e| − |S_f||; ties go to
/// the lowest frequency.
pub fn optimal_probe_frequency(grid: &[f64], spectra: [&[C64]; 3]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if spectra.iter().any(|s| s.len() != grid.len()) {
        return Err(invalid("spectra and grid lengths differ"));
    }
    let mut best = (f64::NEG_INFINITY, f64::INFINITY);
    for (k, &w) in grid.iter().enumerate() {
        let (g, e, f) = (spectra[0][k].norm(), spectra[1][k].norm(), spectra[2][k].norm());
        let score = (g - e).abs() + (e - f).abs();
        if score > best.0 || (score == best.0 && w < best.1) {
            best = (score, w);
        }
    }
    Ok(best.1)
}

/// Uniform grid spanning both modes with `margin` GHz on either side.
pub fn default_grid(m: &ReadoutModes, margin: f64, points: usize) -> Vec<f64> {
    let lo = m.omega_r.iter().chain([&m.omega_p]).copied().fold(f64::INFINITY, f64::min) - margin;
    let hi = m.omega_r.iter().chain([&m.omega_p]).copied().fold(f64::NEG_INFINITY, f64::max) + margin;
    let n = points.max(2);
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoStep {
    pub initial_scale: f64,
    pub initial_duration_ns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutConfig {
    /// GHz; chosen by [`optimal_probe_frequency`] when absent.
    pub probe_frequency: Option<f64>,
    pub integration_time_ns: f64,
    /// Square-root of the steady-state photon number for a resonant drive
    /// on the ground-state resonator-like mode.
    pub drive_amplitude: f64,
    pub eta: f64,
    pub shots: usize,
    pub two_step: Option<TwoStep>,
    pub seed: u64,
    /// Excited-state population before any preparation pulse.
    pub residual_excited: f64,
    pub sample_period_ns: f64,
}

impl Default for ReadoutConfig {
    fn default() -> Self {
        Self {
            probe_frequency: None,
            integration_time_ns: 160.0,
            drive_amplitude: 3.0,
            eta: 0.29,
            shots: 10_000,
            two_step: None,
            seed: 0,
            residual_excited: 0.002,
            sample_period_ns: 0.5,
        }
    }
}

impl ReadoutConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.integration_time_ns > 0.0) {
            return Err(invalid("integration time must be positive"));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(invalid("eta must lie in (0, 1]"));
        }
        if self.shots < 100 {
            return Err(invalid("at least 100 shots per state are required"));
        }
        if !(self.drive_amplitude.is_finite() && self.drive_amplitude > 0.0) {
            return Err(invalid("drive amplitude must be positive"));
        }
        if !(0.0..1.0).contains(&self.residual_excited) {
            return Err(invalid("residual excited population must lie in [0, 1)"));
        }
        if !(self.sample_period_ns > 0.0) {
            return Err(invalid("sample period must be positive"));
        }
        if let Some(ts) = &self.two_step {
            if !(ts.initial_duration_ns >= 0.0 && ts.initial_scale > 0.0) {
                return Err(invalid("two-step segment must have positive scale and non-negative duration"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub prepared: QubitState,
    pub i: f64,
    pub q: f64,
    pub presel_i: f64,
    pub presel_q: f64,
}

impl ShotRecord {
    pub fn iq(&self) -> [f64; 2] {
        [self.i, self.q]
    }

    pub fn presel(&self) -> [f64; 2] {
        [self.presel_i, self.presel_q]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IQShotSet {
    pub records: Vec<ShotRecord>,
    pub probe_frequency: f64,
    /// Noise standard deviation per quadrature.
    pub sigma: f64,
    pub snr: f64,
}

impl IQShotSet {
    pub fn rotated(&self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let rot = |x: f64, y: f64| (c * x - s * y, s * x + c * y);
        let records = self
            .records
            .iter()
            .map(|r| {
                let (i, q) = rot(r.i, r.q);
                let (pi, pq) = rot(r.presel_i, r.presel_q);
                ShotRecord {
                    prepared: r.prepared,
                    i,
                    q,
                    presel_i: pi,
                    presel_q: pq,
                }
            })
            .collect();
        Self {
            records,
            ..self.clone()
        }
    }
}

/// Discrete cavity dynamics for one qubit state: α ← α·decay + ε·gain.
#[derive(Debug, Clone, Copy)]
struct CavityStep {
    decay: C64,
    gain: C64,
}

impl CavityStep {
    fn new(pole: C64, probe: f64, dt: f64) -> Self {
        // α̇ = −z α + ε with z = i 2π (λ − ω_probe).
        let z = C64::new(0.0, 2.0 * PI) * (pole - probe);
        let decay = (-z * dt).exp();
        Self {
            decay,
            gain: (C64::new(1.0, 0.0) - decay) / z,
        }
    }
}

/// Simulation of the readout signal chain, independent of randomness.
#[derive(Debug, Clone)]
pub struct ReadoutModel {
    steps: [CavityStep; 3],
    drive: Vec<C64>,
    pub dt: f64,
    pub probe_frequency: f64,
    pub kappa_r: f64,
    pub weights: Vec<C64>,
    pub mean_trajectories: [Vec<C64>; 3],
    pub sigma: f64,
    pub snr: f64,
}

/// Matched-filter weights conj(ᾱ_e − ᾱ_g) / ‖ᾱ_e − ᾱ_g‖.
pub fn integration_weights(mean_g: &[C64], mean_e: &[C64]) -> Vec<C64> {
    let d: Vec<C64> = mean_e.iter().zip(mean_g).map(|(e, g)| e - g).collect();
    let norm = d.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    d.iter().map(|v| v.conj() / norm).collect()
}

pub fn integrate(weights: &[C64], trajectory: &[C64]) -> C64 {
    weights.iter().zip(trajectory).map(|(w, a)| w * a).sum()
}

impl ReadoutModel {
    pub fn new(m: &ReadoutModes, r: &ReadoutConfig) -> Result<Self> {
        r.validate()?;
        let hybrid: Vec<HybridModes> = QubitState::ALL
            .iter()
            .map(|&s| hybridized_linewidths(m, s))
            .collect::<Result<_>>()?;
        let probe = match r.probe_frequency {
            Some(p) => p,
            None => {
                let grid = default_grid(m, 0.03, 6001);
                let spectra: Vec<Vec<C64>> =
                    QubitState::ALL.iter().map(|&s| transmission_s21(m, s, &grid)).collect();
                optimal_probe_frequency(&grid, [&spectra[0], &spectra[1], &spectra[2]])?
            }
        };
        let dt = r.sample_period_ns;
        let steps = [0, 1, 2].map(|k| CavityStep::new(hybrid[k].resonator_pole(), probe, dt));
        let kappa_r = hybrid[0].kappa_r_eff;
        let n = (r.integration_time_ns / dt).round().max(1.0) as usize;
        let eps = r.drive_amplitude * PI * kappa_r;
        let drive: Vec<C64> = (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                let scale = match &r.two_step {
                    Some(ts) if t < ts.initial_duration_ns => ts.initial_scale,
                    _ => 1.0,
                };
                C64::new(eps * scale, 0.0)
            })
            .collect();
        let mut model = Self {
            steps,
            drive,
            dt,
            probe_frequency: probe,
            kappa_r,
            weights: Vec::new(),
            mean_trajectories: [Vec::new(), Vec::new(), Vec::new()],
            sigma: 0.0,
            snr: 0.0,
        };
        let means = QubitState::ALL.map(|s| model.trajectory(&[(0, s)]));
        model.weights = integration_weights(&means[0], &means[1]);
        let diff2: Vec<f64> = means[1].iter().zip(&means[0]).map(|(e, g)| (e - g).norm_sqr()).collect();
        let mean_diff2 = diff2.iter().sum::<f64>() / n as f64;
        let t_int = n as f64 * dt;
        model.snr = (2.0 * r.eta * 2.0 * PI * kappa_r * t_int * mean_diff2).sqrt();
        let separation = diff2.iter().sum::<f64>().sqrt();
        model.sigma = separation / model.snr;
        model.mean_trajectories = means;
        Ok(model)
    }

    pub fn samples(&self) -> usize {
        self.drive.len()
    }

    /// Cavity trajectory for a qubit that occupies `segments[i].1` from
    /// sample `segments[i].0` onwards; starts from an empty cavity.
    pub fn trajectory(&self, segments: &[(usize, QubitState)]) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.drive.len());
        let mut alpha = C64::new(0.0, 0.0);
        let mut seg = 0;
        for (k, eps) in self.drive.iter().enumerate() {
            while seg + 1 < segments.len() && segments[seg + 1].0 <= k {
                seg += 1;
            }
            let st = self.steps[segments[seg].1.index()];
            alpha = alpha * st.decay + eps * st.gain;
            out.push(alpha);
        }
        out
    }

    /// Integrated, noiseless voltage with the state changing at the given
    /// sample indices.
    fn voltage(&self, segments: &[(usize, QubitState)]) -> C64 {
        let mut alpha = C64::new(0.0, 0.0);
        let mut acc = C64::new(0.0, 0.0);
        let mut seg = 0;
        for (k, eps) in self.drive.iter().enumerate() {
            while seg + 1 < segments.len() && segments[seg + 1].0 <= k {
                seg += 1;
            }
            let st = self.steps[segments[seg].1.index()];
            alpha = alpha * st.decay + eps * st.gain;
            acc += self.weights[k] * alpha;
        }
        acc
    }
}

/// Sample the qubit's decay path over `duration` ns: returns the state
/// segments (start time in ns, state) and the final state.
fn decay_path<R: Rng>(start: QubitState, duration: f64, t1_ns: f64, rng: &mut R) -> Vec<(f64, QubitState)> {
    let mut path = vec![(0.0, start)];
    let mut t = 0.0;
    let mut s = start;
    while s != QubitState::G && t1_ns.is_finite() {
        let rate = if s == QubitState::F { 2.0 / t1_ns } else { 1.0 / t1_ns };
        let dwell: f64 = Exp::new(rate).expect("positive rate").sample(rng);
        t += dwell;
        if t >= duration {
            break;
        }
        s = if s == QubitState::F { QubitState::E } else { QubitState::G };
        path.push((t, s));
    }
    path
}

fn to_samples(path: &[(f64, QubitState)], dt: f64) -> Vec<(usize, QubitState)> {
    path.iter().map(|&(t, s)| ((t / dt).ceil() as usize, s)).collect()
}

/// Preparation pulses as level permutations: e uses π_ge, f uses π_ge then π_ef.
pub fn prepare(initial: QubitState, target: QubitState) -> QubitState {
    use QubitState::*;
    let pi_ge = |s| match s {
        G => E,
        E => G,
        F => F,
    };
    let pi_ef = |s| match s {
        G => G,
        E => F,
        F => E,
    };
    match target {
        G => initial,
        E => pi_ge(initial),
        F => pi_ef(pi_ge(initial)),
    }
}

pub fn simulate_shots(m: &ReadoutModes, r: &ReadoutConfig, t1_us: f64) -> Result<IQShotSet> {
    if !(t1_us > 0.0) {
        return Err(invalid("t1 must be positive"));
    }
    let model = ReadoutModel::new(m, r)?;
    let t1 = t1_us * 1e3;
    let t_int = model.samples() as f64 * model.dt;
    let gap = 10.0 / (2.0 * PI * model.kappa_r);
    let sigma = model.sigma;
    let shots = r.shots;
    let records: Vec<ShotRecord> = (0..3 * shots)
        .into_par_iter()
        .map(|idx| {
            let prepared = QubitState::from_index(idx / shots);
            let mut rng = stream(r.seed, idx as u64);
            let initial = if rng.random::<f64>() < r.residual_excited {
                QubitState::E
            } else {
                QubitState::G
            };
            let pre_path = decay_path(initial, t_int + gap, t1, &mut rng);
            let pre_segments: Vec<(f64, QubitState)> =
                pre_path.iter().copied().filter(|(t, _)| *t < t_int).collect();
            let v_pre = model.voltage(&to_samples(&pre_segments, model.dt));
            let after_pre = pre_path.last().expect("non-empty path").1;
            let start = prepare(after_pre, prepared);
            let path = decay_path(start, t_int, t1, &mut rng);
            let v = model.voltage(&to_samples(&path, model.dt));
            let n: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
            ShotRecord {
                prepared,
                i: v.re + sigma * n[0],
                q: v.im + sigma * n[1],
                presel_i: v_pre.re + sigma * n[2],
                presel_q: v_pre.im + sigma * n[3],
            }
        })
        .collect();
    Ok(IQShotSet {
        records,
        probe_frequency: model.probe_frequency,
        sigma,
        snr: model.snr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian2 {
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
    pub weight: f64,
}

impl Gaussian2 {
    fn log_density(&self, x: [f64; 2]) -> f64 {
        let c = Matrix2::new(self.cov[0][0], self.cov[0][1], self.cov[1][0], self.cov[1][1]);
        let det = c.determinant();
        let inv = c.try_inverse().unwrap_or_else(Matrix2::zeros);
        let d = Vector2::new(x[0] - self.mean[0], x[1] - self.mean[1]);
        let m = (d.transpose() * inv * d)[(0, 0)];
        -0.5 * m - 0.5 * det.ln() - (2.0 * PI).ln()
    }
}

/// Three-component Gaussian mixture; component k stands for state k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    pub components: [Gaussian2; 3],
    pub iterations: usize,
}

impl Classifier {
    fn log_posteriors(&self, x: [f64; 2]) -> [f64; 3] {
        std::array::from_fn(|k| self.components[k].weight.ln() + self.components[k].log_density(x))
    }

    pub fn classify(&self, x: [f64; 2]) -> QubitState {
        let lp = self.log_posteriors(x);
        let mut best = 0;
        for k in 1..3 {
            if lp[k] > lp[best] {
                best = k;
            }
        }
        QubitState::from_index(best)
    }
}

fn regularized(cov: [[f64; 2]; 2], component: usize) -> Result<[[f64; 2]; 2]> {
    let tr = cov[0][0] + cov[1][1];
    let mut c = cov;
    c[0][0] += 1e-9 * tr;
    c[1][1] += 1e-9 * tr;
    let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
    if !(det > 0.0) || !det.is_finite() {
        return Err(Error::SingularCovariance { component });
    }
    Ok(c)
}

fn weighted_moments(points: &[[f64; 2]], resp: &[f64]) -> (f64, [f64; 2], [[f64; 2]; 2]) {
    let w: f64 = resp.iter().sum();
    let mut mean = [0.0; 2];
    for (p, r) in points.iter().zip(resp) {
        mean[0] += r * p[0];
        mean[1] += r * p[1];
    }
    mean[0] /= w;
    mean[1] /= w;
    let mut cov = [[0.0; 2]; 2];
    for (p, r) in points.iter().zip(resp) {
        let d = [p[0] - mean[0], p[1] - mean[1]];
        cov[0][0] += r * d[0] * d[0];
        cov[0][1] += r * d[0] * d[1];
        cov[1][1] += r * d[1] * d[1];
    }
    cov[0][0] /= w;
    cov[0][1] /= w;
    cov[1][1] /= w;
    cov[1][0] = cov[0][1];
    (w, mean, cov)
}

/// Expectation-maximization on the pooled integrated voltages, started from
/// the per-prepared-state sample statistics.
pub fn fit_classifier(shots: &IQShotSet) -> Result<Classifier> {
    let points: Vec<[f64; 2]> = shots.records.iter().map(|r| r.iq()).collect();
    let n = points.len();
    let mut components = [Gaussian2 {
        mean: [0.0; 2],
        cov: [[0.0; 2]; 2],
        weight: 0.0,
    }; 3];
    for s in QubitState::ALL {
        let resp: Vec<f64> = shots
            .records
            .iter()
            .map(|r| if r.prepared == s { 1.0 } else { 0.0 })
            .collect();
        let count: f64 = resp.iter().sum();
        if count < 100.0 {
            return Err(invalid(format!("need at least 100 shots prepared in {s}")));
        }
        let (w, mean, cov) = weighted_moments(&points, &resp);
        components[s.index()] = Gaussian2 {
            mean,
            cov: regularized(cov, s.index())?,
            weight: w / n as f64,
        };
    }

    let mut prev_ll = f64::NEG_INFINITY;
    let mut iterations = 0;
    let mut resp = vec![[0.0f64; 3]; n];
    for it in 0..500 {
        iterations = it + 1;
        let clf = Classifier {
            components,
            iterations,
        };
        let mut ll = 0.0;
        for (p, r) in points.iter().zip(resp.iter_mut()) {
            let lp = clf.log_posteriors(*p);
            let m = lp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = lp.iter().map(|v| (v - m).exp()).sum();
            for k in 0..3 {
                r[k] = (lp[k] - m).exp() / z;
            }
            ll += m + z.ln();
        }
        for k in 0..3 {
            let rk: Vec<f64> = resp.iter().map(|r| r[k]).collect();
            let (w, mean, cov) = weighted_moments(&points, &rk);
            if !(w > 0.0) {
                return Err(Error::SingularCovariance { component: k });
            }
            components[k] = Gaussian2 {
                mean,
                cov: regularized(cov, k)?,
                weight: w / n as f64,
            };
        }
        if (ll - prev_ll).abs() <= 1e-10 * ll.abs().max(1.0) {
            break;
        }
        prev_ll = ll;
    }
    Ok(Classifier {
        components,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentMatrix {
    /// p[prepared][assigned].
    pub p: [[f64; 3]; 3],
    /// Fraction of shots discarded by pre-selection, per prepared state.
    pub discarded: [f64; 3],
    pub retained: [usize; 3],
}

impl AssignmentMatrix {
    pub fn mean_error(&self) -> f64 {
        1.0 - (self.p[0][0] + self.p[1][1] + self.p[2][2]) / 3.0
    }

    /// Row sum evaluated as diagonal + (off-diagonal sum), the order in
    /// which the rows were normalized.
    pub fn row_sum(&self, row: usize) -> f64 {
        let off: f64 = (0..3).filter(|&c| c != row).map(|c| self.p[row][c]).sum();
        self.p[row][row] + off
    }

    pub fn total_discarded(&self) -> f64 {
        self.discarded.iter().sum::<f64>() / 3.0
    }
}

pub fn assignment_matrix(shots: &IQShotSet, clf: &Classifier, preselect: bool) -> Result<AssignmentMatrix> {
    let mut counts = [[0usize; 3]; 3];
    let mut total = [0usize; 3];
    let mut dropped = [0usize; 3];
    for r in &shots.records {
        let s = r.prepared.index();
        total[s] += 1;
        if preselect && clf.classify(r.presel()) != QubitState::G {
            dropped[s] += 1;
            continue;
        }
        counts[s][clf.classify(r.iq()).index()] += 1;
    }
    let mut p = [[0.0; 3]; 3];
    let mut retained = [0usize; 3];
    for s in 0..3 {
        let kept: usize = counts[s].iter().sum();
        if kept == 0 {
            return Err(Error::EmptyClass {
                state: QubitState::from_index(s).to_string(),
            });
        }
        retained[s] = kept;
        let mut off = 0.0;
        for c in 0..3 {
            if c != s {
                p[s][c] = counts[s][c] as f64 / kept as f64;
                off += p[s][c];
            }
        }
        p[s][s] = 1.0 - off;
    }
    let discarded = std::array::from_fn(|s| dropped[s] as f64 / total[s].max(1) as f64);
    Ok(AssignmentMatrix {
        p,
        discarded,
        retained,
    })
}
