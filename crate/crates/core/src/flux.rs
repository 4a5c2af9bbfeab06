//! Flux-line distortion model, cryoscope reconstruction, IIR/FIR
//! pre-distortion and net-zero pulse synthesis.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fluxmap::FluxMap;
use crate::numeric::{levenberg_marquardt, pairwise_sum, wrap_phase, LsqOptions};

/// Adjacent wrapped phase steps at or beyond this magnitude are ambiguous.
pub const UNWRAP_LIMIT: f64 = 0.9 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IirTerm {
    pub amplitude: f64,
    pub tau_ns: f64,
}

/// Causal LTI flux-line response: FIR taps followed by a step response
/// gain·(1 + Σ a_k exp(−t/τ_k)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferFunction {
    pub dc_gain: f64,
    pub iir_terms: Vec<IirTerm>,
    pub fir_taps: Vec<f64>,
    pub sample_period_ns: f64,
}

impl TransferFunction {
    pub fn identity(sample_period_ns: f64) -> Self {
        Self {
            dc_gain: 1.0,
            iir_terms: Vec::new(),
            fir_taps: vec![1.0],
            sample_period_ns,
        }
    }

    /// Synthetic ground truth: overshoots of 2 % at 100 ns, 3 % at 2 µs and
    /// 1 % at 100 µs plus a short ripple.
    pub fn default_synthetic() -> Self {
        Self {
            dc_gain: 1.0,
            iir_terms: vec![
                IirTerm {
                    amplitude: 0.02,
                    tau_ns: 100.0,
                },
                IirTerm {
                    amplitude: 0.03,
                    tau_ns: 2000.0,
                },
                IirTerm {
                    amplitude: 0.01,
                    tau_ns: 100_000.0,
                },
            ],
            fir_taps: vec![1.0, 0.05, -0.03, -0.02],
            sample_period_ns: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_period_ns > 0.0 && self.sample_period_ns.is_finite()) {
            return Err(invalid("sample period must be positive"));
        }
        if !(self.dc_gain.is_finite() && self.dc_gain != 0.0) {
            return Err(invalid("dc gain must be finite and nonzero"));
        }
        for t in &self.iir_terms {
            if !(t.amplitude.abs() < 1.0) || !(t.tau_ns > 0.0 && t.tau_ns.is_finite()) {
                return Err(invalid(format!("invalid IIR term {t:?}")));
            }
        }
        let s: f64 = self.fir_taps.iter().sum();
        if self.fir_taps.is_empty() || !s.is_finite() || s == 0.0 {
            return Err(invalid("FIR taps must sum to a finite nonzero value"));
        }
        Ok(())
    }

    /// Response to a unit step, `n` samples.
    pub fn step_response(&self, n: usize) -> Result<Vec<f64>> {
        let w = PulseWaveform::new(vec![1.0; n], self.sample_period_ns)?;
        Ok(apply_transfer(&w, self)?.samples)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseWaveform {
    pub samples: Vec<f64>,
    pub sample_period_ns: f64,
    pub start_time_ns: f64,
}

impl PulseWaveform {
    pub fn new(samples: Vec<f64>, sample_period_ns: f64) -> Result<Self> {
        let w = Self {
            samples,
            sample_period_ns,
            start_time_ns: 0.0,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(invalid("waveform is empty"));
        }
        if self.samples.iter().any(|v| !v.is_finite()) {
            return Err(invalid("waveform has non-finite samples"));
        }
        if !(self.sample_period_ns > 0.0) {
            return Err(invalid("sample period must be positive"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_ns(&self) -> f64 {
        self.samples.len() as f64 * self.sample_period_ns
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| self.start_time_ns + k as f64 * self.sample_period_ns)
            .collect()
    }

    /// Append `after` zero samples and prepend `before`.
    pub fn padded(&self, before: usize, after: usize) -> Self {
        let mut samples = vec![0.0; before];
        samples.extend_from_slice(&self.samples);
        samples.extend(std::iter::repeat(0.0).take(after));
        Self {
            samples,
            sample_period_ns: self.sample_period_ns,
            start_time_ns: self.start_time_ns - before as f64 * self.sample_period_ns,
        }
    }

    fn with_samples(&self, samples: Vec<f64>) -> Self {
        Self {
            samples,
            ..self.clone()
        }
    }
}

fn check_rate(left: f64, right: f64) -> Result<()> {
    if (left - right).abs() > 1e-12 * left.abs().max(right.abs()) {
        return Err(Error::SampleRateMismatch { left, right });
    }
    Ok(())
}

fn convolve_causal(x: &[f64], taps: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|n| {
            taps.iter()
                .enumerate()
                .take(n + 1)
                .map(|(j, c)| c * x[n - j])
                .sum()
        })
        .collect()
}

fn decay_factors(terms: &[IirTerm], dt: f64) -> Vec<f64> {
    terms.iter().map(|t| (-dt / t.tau_ns).exp()).collect()
}

pub fn apply_transfer(w: &PulseWaveform, tf: &TransferFunction) -> Result<PulseWaveform> {
    w.validate()?;
    tf.validate()?;
    check_rate(w.sample_period_ns, tf.sample_period_ns)?;
    let x = convolve_causal(&w.samples, &tf.fir_taps);
    let r = decay_factors(&tf.iir_terms, tf.sample_period_ns);
    // u_k[n] = r_k u_k[n−1] + x[n]; the step response increment of term k
    // is a_k (u_k[n] − u_k[n−1]).
    let mut u = vec![0.0; r.len()];
    let y = x
        .iter()
        .map(|&xn| {
            let mut acc = xn;
            for (k, t) in tf.iir_terms.iter().enumerate() {
                let prev = u[k];
                u[k] = r[k] * prev + xn;
                acc += t.amplitude * (u[k] - prev);
            }
            tf.dc_gain * acc
        })
        .collect();
    Ok(w.with_samples(y))
}

/// Exact discrete inverse of gain·(1 + Σ a_k exp(−t/τ_k)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IirCorrection {
    pub dc_gain: f64,
    pub terms: Vec<IirTerm>,
    pub sample_period_ns: f64,
}

impl IirCorrection {
    pub fn apply(&self, w: &PulseWaveform) -> Result<PulseWaveform> {
        w.validate()?;
        check_rate(w.sample_period_ns, self.sample_period_ns)?;
        let r = decay_factors(&self.terms, self.sample_period_ns);
        let lead = 1.0 + self.terms.iter().map(|t| t.amplitude).sum::<f64>();
        let mut u = vec![0.0; r.len()];
        let x = w
            .samples
            .iter()
            .map(|&yn| {
                let mut acc = yn / self.dc_gain;
                for (k, t) in self.terms.iter().enumerate() {
                    acc -= t.amplitude * (r[k] - 1.0) * u[k];
                }
                let xn = acc / lead;
                for k in 0..r.len() {
                    u[k] = r[k] * u[k] + xn;
                }
                xn
            })
            .collect();
        Ok(w.with_samples(x))
    }
}

pub fn invert_iir(dc_gain: f64, terms: &[IirTerm], sample_period_ns: f64) -> Result<IirCorrection> {
    if !(sample_period_ns > 0.0) || !(dc_gain.is_finite() && dc_gain != 0.0) {
        return Err(invalid("invalid gain or sample period"));
    }
    for t in terms {
        if t.amplitude <= -1.0 {
            return Err(Error::UnstableTerm {
                amplitude: t.amplitude,
            });
        }
        if !(t.amplitude < 1.0 && t.tau_ns > 0.0) {
            return Err(invalid(format!("invalid IIR term {t:?}")));
        }
    }
    let lead = 1.0 + terms.iter().map(|t| t.amplitude).sum::<f64>();
    if lead <= 0.0 {
        return Err(Error::UnstableTerm {
            amplitude: lead - 1.0,
        });
    }
    Ok(IirCorrection {
        dc_gain,
        terms: terms.to_vec(),
        sample_period_ns,
    })
}

/// Ridge-regularized least-squares FIR deconvolution of a measured step
/// response towards a clean unit step, with Σ taps = 1/gain enforced.
pub fn design_fir_inverse(step: &[f64], n_taps: usize, ridge: f64) -> Result<Vec<f64>> {
    if n_taps == 0 || step.len() < n_taps {
        return Err(invalid("step response must be at least n_taps long"));
    }
    if !(ridge >= 0.0) || step.iter().any(|v| !v.is_finite()) {
        return Err(invalid("ridge and response must be finite"));
    }
    let gain = *step.last().expect("non-empty");
    if gain == 0.0 {
        return Err(Error::IllConditioned);
    }
    let l = step.len();
    let s = DMatrix::from_fn(l, n_taps, |n, j| if n >= j { step[n - j] } else { 0.0 });
    let target = DVector::from_element(l, 1.0);
    let mut ata = s.transpose() * &s;
    let scale = ata.trace() / n_taps as f64;
    for j in 0..n_taps {
        ata[(j, j)] += ridge * scale;
    }
    let atb = s.transpose() * target;
    let mut kkt = DMatrix::zeros(n_taps + 1, n_taps + 1);
    kkt.view_mut((0, 0), (n_taps, n_taps)).copy_from(&ata);
    for j in 0..n_taps {
        kkt[(j, n_taps)] = 1.0;
        kkt[(n_taps, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(n_taps + 1);
    rhs.rows_mut(0, n_taps).copy_from(&atb);
    rhs[n_taps] = 1.0 / gain;
    let sol = kkt.lu().solve(&rhs).ok_or(Error::IllConditioned)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::IllConditioned);
    }
    Ok(sol.rows(0, n_taps).iter().copied().collect())
}

/// Correction chain applied to a desired waveform before it enters the line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predistortion {
    pub iir: IirCorrection,
    pub fir_taps: Vec<f64>,
}

impl Predistortion {
    pub fn apply(&self, w: &PulseWaveform) -> Result<PulseWaveform> {
        let x = self.iir.apply(w)?;
        Ok(x.with_samples(convolve_causal(&x.samples, &self.fir_taps)))
    }
}

/// Two equal halves of opposite sign; the sample sum is exactly zero.
pub fn net_zero_pulse(amplitude: f64, half_duration_ns: f64, sample_period_ns: f64) -> Result<PulseWaveform> {
    if !(sample_period_ns > 0.0) || !amplitude.is_finite() {
        return Err(invalid("invalid amplitude or sample period"));
    }
    let n = (half_duration_ns / sample_period_ns).round();
    if n < 2.0 || (n * sample_period_ns - half_duration_ns).abs() > 1e-9 * sample_period_ns.max(1.0) {
        return Err(invalid(format!(
            "half duration {half_duration_ns} ns must be at least two whole samples"
        )));
    }
    net_zero_from_half(&vec![amplitude; n as usize], sample_period_ns)
}

/// Net-zero waveform whose second half is the exact negation of `half`.
pub fn net_zero_from_half(half: &[f64], sample_period_ns: f64) -> Result<PulseWaveform> {
    let mut samples = half.to_vec();
    samples.extend(half.iter().map(|v| -v));
    let w = PulseWaveform::new(samples, sample_period_ns)?;
    debug_assert_eq!(pairwise_sum(&w.samples), 0.0);
    Ok(w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CryoscopeTrace {
    pub times_ns: Vec<f64>,
    pub freq_offsets_mhz: Vec<f64>,
}

/// Wrapped Ramsey phases at truncation times 0, dt, …, n·dt for a qubit
/// whose detuning (GHz) is piecewise constant over each sample.
pub fn cryoscope_phases(detuning_ghz: &[f64], sample_period_ns: f64) -> Vec<f64> {
    let mut phases = Vec::with_capacity(detuning_ghz.len() + 1);
    let mut acc = 0.0;
    phases.push(0.0);
    for f in detuning_ghz {
        acc += 2.0 * PI * f * sample_period_ns;
        phases.push(wrap_phase(acc));
    }
    phases
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difference {
    /// Frequency at each truncation time; followed by a 3-point average.
    Central,
    /// Frequency over each sample interval, no smoothing.
    Forward,
}

fn unwrap(phases: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(phases.len());
    let mut acc = phases[0];
    out.push(acc);
    for (k, w) in phases.windows(2).enumerate() {
        let step = wrap_phase(w[1] - w[0]);
        if step.abs() >= UNWRAP_LIMIT {
            return Err(Error::UnwrapFailure { index: k + 1, step });
        }
        acc += step;
        out.push(acc);
    }
    Ok(out)
}

pub fn cryoscope_reconstruct(phases: &[f64], sample_period_ns: f64, start_time_ns: f64) -> Result<CryoscopeTrace> {
    cryoscope_reconstruct_with(phases, sample_period_ns, start_time_ns, Difference::Central)
}

pub fn cryoscope_reconstruct_with(
    phases: &[f64],
    sample_period_ns: f64,
    start_time_ns: f64,
    method: Difference,
) -> Result<CryoscopeTrace> {
    if phases.len() < 3 {
        return Err(invalid("cryoscope needs at least three truncation times"));
    }
    if !(sample_period_ns > 0.0) {
        return Err(invalid("sample period must be positive"));
    }
    let p = unwrap(phases)?;
    let to_mhz = 1e3 / (2.0 * PI * sample_period_ns);
    let n = p.len();
    let (times, freq) = match method {
        Difference::Forward => {
            let f: Vec<f64> = p.windows(2).map(|w| (w[1] - w[0]) * to_mhz).collect();
            let t = (0..n - 1).map(|k| start_time_ns + k as f64 * sample_period_ns).collect();
            (t, f)
        }
        Difference::Central => {
            let raw: Vec<f64> = (0..n)
                .map(|k| {
                    if k == 0 {
                        (p[1] - p[0]) * to_mhz
                    } else if k == n - 1 {
                        (p[n - 1] - p[n - 2]) * to_mhz
                    } else {
                        (p[k + 1] - p[k - 1]) * 0.5 * to_mhz
                    }
                })
                .collect();
            let smooth = (0..n)
                .map(|k| {
                    let lo = k.saturating_sub(1);
                    let hi = (k + 1).min(n - 1);
                    raw[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
                })
                .collect();
            let t = (0..n).map(|k| start_time_ns + k as f64 * sample_period_ns).collect();
            (t, smooth)
        }
    };
    Ok(CryoscopeTrace {
        times_ns: times,
        freq_offsets_mhz: freq,
    })
}

/// Flux offsets whose detuning matches each reconstructed frequency.
pub fn trace_to_flux(trace: &CryoscopeTrace, map: &FluxMap, idle_phi: f64) -> Result<Vec<f64>> {
    trace
        .freq_offsets_mhz
        .iter()
        .map(|&f| {
            if f == 0.0 {
                Ok(0.0)
            } else {
                map.flux_for_detuning(idle_phi, f * 1e-3)
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedLoopConfig {
    pub idle_phi: f64,
    /// Qubit detuning at the pulse flat-top, GHz.
    pub depth_ghz: f64,
    pub pulse_ns: f64,
    /// Exponential terms fitted to the long step response.
    pub iir_fit_terms: usize,
    /// Step-response record used for the IIR fit, ns.
    pub long_window_ns: f64,
    /// Samples skipped at the start of the long record, ns.
    pub long_skip_ns: f64,
    pub fir_taps: usize,
    pub fir_record_ns: f64,
    pub ridge: f64,
    /// Excluded from the flat-top at each pulse edge, ns.
    pub edge_exclusion_ns: f64,
    pub budget_mhz: f64,
}

impl Default for ClosedLoopConfig {
    fn default() -> Self {
        Self {
            idle_phi: 0.0,
            depth_ghz: -0.2,
            pulse_ns: 100.0,
            iir_fit_terms: 3,
            long_window_ns: 500_000.0,
            long_skip_ns: 10.0,
            fir_taps: 12,
            fir_record_ns: 40.0,
            ridge: 1e-8,
            edge_exclusion_ns: 2.0,
            budget_mhz: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Characterization {
    pub fitted: TransferFunction,
    pub predistortion: Predistortion,
    pub long_fit_rms: f64,
}

/// Measure the line through the qubit and design the correction: long step
/// response fitted with exponentials, then a cryoscope of the short-time
/// response after IIR correction for the FIR stage.
pub fn characterize(tf: &TransferFunction, map: &FluxMap, cfg: &ClosedLoopConfig) -> Result<Characterization> {
    tf.validate()?;
    let dt = tf.sample_period_ns;
    let amp = map.flux_for_detuning(cfg.idle_phi, cfg.depth_ghz)?;

    let n_long = (cfg.long_window_ns / dt).round() as usize;
    let response = apply_transfer(&PulseWaveform::new(vec![amp; n_long], dt)?, tf)?;
    let skip = (cfg.long_skip_ns / dt).ceil() as usize;
    let points = 240usize;
    let ratio = (n_long as f64 / skip.max(1) as f64).ln();
    let mut idx: Vec<usize> = (0..points)
        .map(|k| ((skip.max(1) as f64) * (ratio * k as f64 / (points - 1) as f64).exp()).round() as usize)
        .map(|i| i.min(n_long - 1))
        .collect();
    idx.dedup();
    let f0 = map.frequency(cfg.idle_phi);
    let measured: Vec<f64> = idx
        .iter()
        .map(|&i| {
            let f = map.frequency(cfg.idle_phi + response.samples[i]) - f0;
            map.flux_for_detuning(cfg.idle_phi, f).map(|phi| phi / amp)
        })
        .collect::<Result<_>>()?;
    let t: Vec<f64> = idx.iter().map(|&i| i as f64 * dt).collect();

    let k = cfg.iir_fit_terms;
    let span = (cfg.long_window_ns / cfg.long_skip_ns.max(dt)).ln();
    let mut p0 = vec![*measured.last().expect("non-empty")];
    for j in 0..k {
        let tau = cfg.long_skip_ns.max(dt) * (span * (j as f64 + 1.0) / (k as f64 + 1.0)).exp();
        p0.push(0.01);
        p0.push(tau.ln());
    }
    let model = |p: &[f64], t: f64| {
        let mut s = 1.0;
        for j in 0..k {
            s += p[1 + 2 * j] * (-t / p[2 + 2 * j].exp()).exp();
        }
        p[0] * s
    };
    let fit = levenberg_marquardt(
        |p| t.iter().zip(&measured).map(|(&ti, &m)| model(p, ti) - m).collect(),
        &p0,
        &LsqOptions::default(),
    )?;
    let terms: Vec<IirTerm> = (0..k)
        .map(|j| IirTerm {
            amplitude: fit.params[1 + 2 * j],
            tau_ns: fit.params[2 + 2 * j].exp(),
        })
        .collect();
    let iir = invert_iir(fit.params[0], &terms, dt)?;

    // Short-time response after the IIR stage, read out by cryoscope.
    let n_short = (cfg.fir_record_ns / dt).round() as usize;
    let drive = iir.apply(&PulseWaveform::new(vec![amp; n_short], dt)?)?;
    let out = apply_transfer(&drive, tf)?;
    let det = map.detunings(cfg.idle_phi, &out.samples);
    let trace = cryoscope_reconstruct_with(&cryoscope_phases(&det, dt), dt, 0.0, Difference::Forward)?;
    let step: Vec<f64> = trace_to_flux(&trace, map, cfg.idle_phi)?
        .iter()
        .map(|phi| phi / amp)
        .collect();
    let fir_taps = design_fir_inverse(&step, cfg.fir_taps, cfg.ridge)?;

    Ok(Characterization {
        fitted: TransferFunction {
            dc_gain: fit.params[0],
            iir_terms: terms,
            fir_taps: vec![1.0],
            sample_period_ns: dt,
        },
        predistortion: Predistortion { iir, fir_taps },
        long_fit_rms: (fit.chi2 / measured.len() as f64).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub target_mhz: f64,
    pub max_deviation_mhz: f64,
    pub trace: CryoscopeTrace,
    /// Flat-top window, ns.
    pub window_ns: (f64, f64),
}

impl VerifyReport {
    pub fn within(&self, budget_mhz: f64) -> bool {
        self.max_deviation_mhz < budget_mhz
    }
}

/// Send a square flux pulse through the line, optionally pre-distorted,
/// and reconstruct the qubit frequency with the cryoscope.
pub fn verify(
    tf: &TransferFunction,
    correction: Option<&Predistortion>,
    map: &FluxMap,
    cfg: &ClosedLoopConfig,
) -> Result<VerifyReport> {
    tf.validate()?;
    let dt = tf.sample_period_ns;
    let amp = map.flux_for_detuning(cfg.idle_phi, cfg.depth_ghz)?;
    let n = (cfg.pulse_ns / dt).round() as usize;
    let pad = 20;
    let pulse = PulseWaveform::new(vec![amp; n], dt)?.padded(0, pad);
    let drive = match correction {
        Some(c) => c.apply(&pulse)?,
        None => pulse.clone(),
    };
    let out = apply_transfer(&drive, tf)?;
    let det = map.detunings(cfg.idle_phi, &out.samples);
    let trace = cryoscope_reconstruct(&cryoscope_phases(&det, dt), dt, 0.0)?;
    let target = cfg.depth_ghz * 1e3;
    let lo = cfg.edge_exclusion_ns;
    let hi = cfg.pulse_ns - cfg.edge_exclusion_ns;
    let max_dev = trace
        .times_ns
        .iter()
        .zip(&trace.freq_offsets_mhz)
        .filter(|(t, _)| **t >= lo && **t <= hi)
        .map(|(_, f)| (f - target).abs())
        .fold(0.0, f64::max);
    Ok(VerifyReport {
        target_mhz: target,
        max_deviation_mhz: max_dev,
        trace,
        window_ns: (lo, hi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_exact() {
        let w = PulseWaveform::new(vec![0.3, -1.0, 2.5, 0.0, 7.0], 0.5).unwrap();
        let out = apply_transfer(&w, &TransferFunction::identity(0.5)).unwrap();
        assert_eq!(out, w);
    }

    #[test]
    fn rate_mismatch_rejected() {
        let w = PulseWaveform::new(vec![1.0; 4], 1.0).unwrap();
        assert!(matches!(
            apply_transfer(&w, &TransferFunction::identity(0.5)),
            Err(Error::SampleRateMismatch { .. })
        ));
    }

    #[test]
    fn unstable_term_rejected() {
        let t = [IirTerm {
            amplitude: -1.0,
            tau_ns: 100.0,
        }];
        assert!(matches!(invert_iir(1.0, &t, 0.5), Err(Error::UnstableTerm { .. })));
    }

    #[test]
    fn net_zero_construction() {
        let w = net_zero_pulse(0.123, 31.5, 0.5).unwrap();
        assert_eq!(w.len(), 126);
        assert!(w.samples[..63].iter().all(|&v| v == 0.123));
        assert!(w.samples[63..].iter().all(|&v| v == -0.123));
        assert_eq!(pairwise_sum(&w.samples), 0.0);
        assert!(net_zero_pulse(1.0, 0.5, 0.5).is_err());
    }

    #[test]
    fn coarse_phases_fail_to_unwrap() {
        let phases = cryoscope_phases(&[1.0; 10], 0.5);
        assert!(matches!(
            cryoscope_reconstruct(&phases, 0.5, 0.0),
            Err(Error::UnwrapFailure { index: 1, .. })
        ));
    }

    #[test]
    fn zero_pulse_gives_zero_trace() {
        let trace = cryoscope_reconstruct(&cryoscope_phases(&[0.0; 50], 0.5), 0.5, 0.0).unwrap();
        assert!(trace.freq_offsets_mhz.iter().all(|&f| f == 0.0));
        assert!(trace.times_ns.windows(2).all(|w| w[1] > w[0]));
    }
}
