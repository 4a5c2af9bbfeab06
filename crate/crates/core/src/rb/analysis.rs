use serde::{Deserialize, Serialize};

use super::execute::RbCurve;
use crate::error::{invalid, Error, Result};
use crate::numeric::{levenberg_marquardt, mean, sample_std, LsqOptions};

/// Fit of `A·p^m + B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub a: f64,
    pub p: f64,
    pub b: f64,
    pub a_err: f64,
    pub p_err: f64,
    pub b_err: f64,
    /// Row-major 3×3 covariance of (A, p, B).
    pub covariance: Vec<f64>,
    pub chi2: f64,
    /// Set when a fitted p slightly above 1 was reported as 1.
    pub clamped: bool,
}

const SIGMA_FLOOR: f64 = 1e-6;

/// Weighted fit of `A·p^m + B`; `sigma` holds the uncertainty of each mean
/// (standard error). B starts at the fully mixed value 1/d. Parameter
/// errors are the larger of the covariance errors with and without
/// reduced chi-square scaling.
pub fn fit_decay(lengths: &[usize], means: &[f64], sigma: &[f64], d: usize) -> Result<DecayFit> {
    if lengths.len() != means.len() || lengths.len() != sigma.len() {
        return Err(invalid("lengths, means and uncertainties differ in size"));
    }
    let mut distinct = lengths.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::FitDivergence(format!("{} distinct lengths, need 3", distinct.len())));
    }
    if d < 2 {
        return Err(invalid("dimension must be at least 2"));
    }
    let lo = means.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 1e-12 {
        return Ok(DecayFit {
            a: 0.0,
            p: 1.0,
            b: means[0],
            a_err: 0.0,
            p_err: 0.0,
            b_err: 0.0,
            covariance: vec![0.0; 9],
            chi2: 0.0,
            clamped: false,
        });
    }

    let m0 = *lengths.iter().min().unwrap() as f64;
    let i0 = lengths.iter().position(|&m| m as f64 == m0).unwrap();
    let b0 = 1.0 / d as f64;
    let a0 = (means[i0] - b0).max(1e-3) / 0.99f64.powf(m0);
    let p0 = lengths
        .iter()
        .zip(means)
        .filter(|(&m, _)| m as f64 > m0)
        .map(|(&m, &y)| {
            let r = ((y - b0) / (means[i0] - b0).max(1e-3)).clamp(1e-3, 1.0 - 1e-9);
            ((r - 0.5).abs(), r.powf(1.0 / (m as f64 - m0)))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, p)| p.clamp(0.5, 1.0 - 1e-9))
        .unwrap_or(0.99);
    let a0 = a0.max((means[i0] - b0).max(1e-3) / p0.powf(m0));

    let w: Vec<f64> = sigma.iter().map(|s| 1.0 / s.max(SIGMA_FLOOR)).collect();
    let residuals = |x: &[f64]| -> Vec<f64> {
        lengths
            .iter()
            .zip(means)
            .zip(&w)
            .map(|((&m, &y), &wi)| (x[0] * x[1].powf(m as f64) + x[2] - y) * wi)
            .collect()
    };
    let fit = levenberg_marquardt(residuals, &[a0, p0, b0], &LsqOptions::default())?;
    let [a, p, b] = [fit.params[0], fit.params[1], fit.params[2]];
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::FitDivergence(format!("decay parameter p = {p}")));
    }
    let scale = if fit.dof > 0 { (fit.chi2 / fit.dof as f64).max(1.0) } else { 1.0 };
    let err: Vec<f64> = fit.std_errors().iter().map(|e| e * scale.sqrt()).collect();
    let mut clamped = false;
    let mut p_out = p;
    if p > 1.0 {
        if p - 1.0 > 2.0 * err[1] + 1e-9 {
            return Err(Error::FitDivergence(format!("decay parameter p = {p} exceeds 1")));
        }
        clamped = true;
        p_out = 1.0;
    }
    Ok(DecayFit {
        a,
        p: p_out,
        b,
        a_err: err[0],
        p_err: err[1],
        b_err: err[2],
        covariance: fit.covariance.transpose().iter().map(|c| c * scale).collect(),
        chi2: fit.chi2,
        clamped,
    })
}

/// `(d − 1)/d·(1 − p)` inverted.
pub fn p_from_epc(epc: f64, d: usize) -> f64 {
    1.0 - epc * d as f64 / (d as f64 - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRates {
    pub epc: f64,
    /// Interleaved error per gate, or EPC divided by the gates-per-Clifford.
    pub epg: Option<f64>,
    /// The interleaved decay was slower than the reference; `epg` is negative.
    pub ratio_out_of_range: bool,
}

pub fn error_rates(p_rb: f64, p_irb: Option<f64>, d: usize, divisor: Option<f64>) -> Result<ErrorRates> {
    let valid = |p: f64| p > 0.0 && p <= 1.0;
    if !valid(p_rb) || p_irb.is_some_and(|p| !valid(p)) {
        return Err(invalid("decay parameters must lie in (0, 1]"));
    }
    if d < 2 {
        return Err(invalid("dimension must be at least 2"));
    }
    if divisor.is_some_and(|v| !(v > 0.0)) {
        return Err(invalid("gates per Clifford must be positive"));
    }
    let f = (d as f64 - 1.0) / d as f64;
    let epc = f * (1.0 - p_rb);
    let (epg, flag) = match (p_irb, divisor) {
        (Some(pi), _) => (Some(f * (1.0 - pi / p_rb)), pi > p_rb),
        (None, Some(n)) => (Some(epc / n), false),
        (None, None) => (None, false),
    };
    Ok(ErrorRates { epc, epg, ratio_out_of_range: flag })
}

/// Fit of the leaked population `L(m) = c + s·(1 − γ^m)/(1 − γ)`, the
/// rising-saturating form `L∞·(1 − γ^m)` with an offset `c` that absorbs
/// leakage from the recovery Clifford.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakageFit {
    /// Saturation level `c + s/(1 − γ)`; `None` when no saturation is resolved.
    pub l_inf: Option<f64>,
    pub gamma: f64,
    pub offset: f64,
    /// Leakage per sequence step, `L∞·(1 − γ)` for zero offset.
    pub per_step: f64,
    pub per_step_err: f64,
}

/// Fits the leaked population against sequence length. Parametrized by the
/// per-step rate so the fit stays well conditioned before saturation; falls
/// back to a straight line when the fitted γ is not below 1.
pub fn leakage_estimate(lengths: &[usize], means: &[f64], sigma: &[f64]) -> Result<LeakageFit> {
    if lengths.len() != means.len() || lengths.len() != sigma.len() {
        return Err(invalid("lengths, means and uncertainties differ in size"));
    }
    let mut distinct = lengths.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::FitDivergence(format!("{} distinct lengths, need 3", distinct.len())));
    }
    if means.iter().all(|v| v.abs() < 1e-15) {
        return Ok(LeakageFit { l_inf: Some(0.0), gamma: 1.0, offset: 0.0, per_step: 0.0, per_step_err: 0.0 });
    }
    let growth = |g: f64, m: f64| {
        if (1.0 - g).abs() < 1e-12 {
            m
        } else {
            (1.0 - g.powf(m)) / (1.0 - g)
        }
    };
    let w: Vec<f64> = sigma.iter().map(|s| 1.0 / s.max(SIGMA_FLOOR)).collect();
    let line = linear_leakage(lengths, means, &w);
    let residuals = |x: &[f64]| -> Vec<f64> {
        lengths
            .iter()
            .zip(means)
            .zip(&w)
            .map(|((&m, &y), &wi)| (x[2] + x[0] * growth(x[1], m as f64) - y) * wi)
            .collect()
    };
    let start = [line.per_step.max(1e-9), 1.0 - 1e-4, line.offset];
    let fit = match levenberg_marquardt(residuals, &start, &LsqOptions::default()) {
        Ok(f) => f,
        Err(_) => return Ok(line),
    };
    let (s, g, c) = (fit.params[0], fit.params[1], fit.params[2]);
    if !(s.is_finite() && g.is_finite() && c.is_finite()) || g <= 0.0 {
        return Err(Error::FitDivergence(format!("leakage fit s = {s}, γ = {g}")));
    }
    if g >= 1.0 {
        return Ok(line);
    }
    let scale = if fit.dof > 0 { (fit.chi2 / fit.dof as f64).max(1.0) } else { 1.0 };
    Ok(LeakageFit {
        l_inf: Some(c + s / (1.0 - g)),
        gamma: g,
        offset: c,
        per_step: s,
        per_step_err: fit.std_errors()[0] * scale.sqrt(),
    })
}

/// Weighted straight line `L(m) = c + s·m`.
fn linear_leakage(lengths: &[usize], means: &[f64], w: &[f64]) -> LeakageFit {
    let (mut s0, mut s1, mut s2, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((&m, &y), &wi) in lengths.iter().zip(means).zip(w) {
        let (m, v) = (m as f64, wi * wi);
        s0 += v;
        s1 += v * m;
        s2 += v * m * m;
        t0 += v * y;
        t1 += v * m * y;
    }
    let det = s0 * s2 - s1 * s1;
    let slope = (s0 * t1 - s1 * t0) / det;
    let offset = (s2 * t0 - s1 * t1) / det;
    let chi2: f64 = lengths
        .iter()
        .zip(means)
        .zip(w)
        .map(|((&m, &y), &wi)| ((offset + slope * m as f64 - y) * wi).powi(2))
        .sum();
    let dof = lengths.len().saturating_sub(2).max(1) as f64;
    LeakageFit {
        l_inf: None,
        gamma: 1.0,
        offset,
        per_step: slope,
        per_step_err: (s0 / det).sqrt() * (chi2 / dof).max(1.0).sqrt(),
    }
}

/// A stretch of time during which each qubit decoheres with fixed T1 and T2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceSegment {
    pub duration_ns: f64,
    pub t1_us: Vec<f64>,
    pub t2_us: Vec<f64>,
}

/// First-order average-gate-error from weak amplitude damping and pure
/// dephasing: `d/(2(d+1))·Σ t·(1/T1 + 1/Tφ)` summed over qubits and
/// segments, with `1/Tφ = 1/T2 − 1/(2·T1)` and `d = 2^n`. For one qubit
/// this is `t/3·(1/T1 + 1/Tφ)`.
pub fn coherence_limit(segments: &[CoherenceSegment]) -> Result<f64> {
    let Some(first) = segments.first() else {
        return Ok(0.0);
    };
    let n = first.t1_us.len();
    if n == 0 {
        return Err(invalid("segments must name at least one qubit"));
    }
    let d = (1usize << n) as f64;
    let mut total = 0.0;
    for s in segments {
        if s.t1_us.len() != n || s.t2_us.len() != n {
            return Err(invalid("every segment must list all qubits"));
        }
        if !(s.duration_ns >= 0.0) {
            return Err(invalid("segment durations must be non-negative"));
        }
        for (&t1, &t2) in s.t1_us.iter().zip(&s.t2_us) {
            if !(t1 > 0.0 && t2 > 0.0) {
                return Err(invalid("coherence times must be positive"));
            }
            if t2 > 2.0 * t1 * (1.0 + 1e-12) {
                return Err(invalid(format!("T2 = {t2} µs exceeds 2·T1")));
            }
            let g1 = 1.0 / (t1 * 1e3);
            let gphi = (1.0 / (t2 * 1e3) - 0.5 * g1).max(0.0);
            total += s.duration_ns * (g1 + gphi);
        }
    }
    Ok(d / (2.0 * (d + 1.0)) * total)
}

/// Empirical distribution of repeated measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    pub sorted: Vec<f64>,
    pub median: f64,
}

impl EmpiricalCdf {
    /// Fraction of samples ≤ x.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    /// (value, cumulative fraction) after each sample.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let n = self.sorted.len() as f64;
        self.sorted.iter().enumerate().map(|(k, &v)| (v, (k + 1) as f64 / n)).collect()
    }
}

pub fn coherence_cdf(samples: &[f64]) -> Result<EmpiricalCdf> {
    if samples.is_empty() {
        return Err(invalid("need at least one sample"));
    }
    if samples.iter().any(|v| v.is_nan()) {
        return Err(invalid("samples contain NaN"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    Ok(EmpiricalCdf { sorted, median })
}

/// Summary of one benchmark curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbResult {
    pub lengths: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub n: usize,
    pub fit: DecayFit,
    pub epc: f64,
    pub epc_err: f64,
    pub epg: Option<f64>,
    pub epg_err: Option<f64>,
    pub ratio_out_of_range: bool,
    pub leakage: Option<LeakageFit>,
}

impl RbResult {
    /// CSV with header `m,mean,std,n`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("m,mean,std,n\n");
        for ((m, mu), sd) in self.lengths.iter().zip(&self.mean).zip(&self.std) {
            s.push_str(&format!("{m},{mu},{sd},{}\n", self.n));
        }
        s
    }
}

/// Per-length mean and sample standard deviation.
pub fn curve_statistics(values: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    (values.iter().map(|v| mean(v)).collect(), values.iter().map(|v| sample_std(v)).collect())
}

/// Fits a curve. Each mean's uncertainty is the spread over
/// randomizations, floored by binomial shot noise. With `reference` (the
/// standard RB fit) the curve is treated as interleaved and `epg` is the
/// interleaved gate error; otherwise `epg` is EPC divided by `divisor`
/// when given. Leakage is fitted when any leaked population was recorded.
pub fn summarize(curve: &RbCurve, d: usize, divisor: Option<f64>, reference: Option<&DecayFit>) -> Result<RbResult> {
    let (mean_s, std_s) = curve_statistics(&curve.survival);
    let n = curve.survival.first().map_or(0, Vec::len);
    let sem = |mean: &[f64], std: &[f64]| -> Vec<f64> {
        mean.iter()
            .zip(std)
            .map(|(&mu, &sd)| {
                let shot = if curve.shots > 0 { (mu * (1.0 - mu)).max(0.0) / curve.shots as f64 } else { 0.0 };
                sd.max(shot.sqrt()) / (n.max(1) as f64).sqrt()
            })
            .collect()
    };
    let fit = fit_decay(&curve.lengths, &mean_s, &sem(&mean_s, &std_s), d)?;
    let own = error_rates(fit.p, None, d, divisor)?;
    let rates = match reference {
        Some(r) => error_rates(r.p, Some(fit.p), d, None)?,
        None => own,
    };
    let f = (d as f64 - 1.0) / d as f64;
    let epg_err = match (reference, divisor) {
        (Some(r), _) => Some(f * ((fit.p_err / r.p).powi(2) + (fit.p * r.p_err / (r.p * r.p)).powi(2)).sqrt()),
        (None, Some(k)) => Some(f * fit.p_err / k),
        (None, None) => None,
    };
    let (mean_l, std_l) = curve_statistics(&curve.leakage);
    let leakage = if mean_l.iter().any(|&v| v > 0.0) {
        Some(leakage_estimate(&curve.lengths, &mean_l, &sem(&mean_l, &std_l))?)
    } else {
        None
    };
    Ok(RbResult {
        lengths: curve.lengths.clone(),
        mean: mean_s,
        std: std_s,
        n,
        epc: own.epc,
        epc_err: f * fit.p_err,
        epg: rates.epg,
        epg_err,
        ratio_out_of_range: rates.ratio_out_of_range,
        fit,
        leakage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_decay_is_recovered() {
        let lengths: Vec<usize> = vec![1, 2, 4, 8, 16, 32, 64, 128, 256];
        let y: Vec<f64> = lengths.iter().map(|&m| 0.75 * 0.98f64.powi(m as i32) + 0.25).collect();
        let f = fit_decay(&lengths, &y, &vec![1e-3; y.len()], 4).unwrap();
        assert!((f.a - 0.75).abs() < 1e-6 && (f.p - 0.98).abs() < 1e-6 && (f.b - 0.25).abs() < 1e-6);
    }

    #[test]
    fn median_by_midpoint() {
        assert_eq!(coherence_cdf(&[4.0, 1.0, 3.0, 2.0]).unwrap().median, 2.5);
        let c = coherence_cdf(&[7.0]).unwrap();
        assert_eq!((c.eval(6.999), c.eval(7.0), c.median), (0.0, 1.0, 7.0));
    }
}
