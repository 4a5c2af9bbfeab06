//! Extraction of transmon and coupling parameters from measured dressed
//! frequencies by repeated diagonalization of the chain model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::{minimize, NelderMeadOptions};
use crate::spectrum::{
    build_real_hamiltonian, diagonalize, BareLabel, ChainParams, FluxPoint, TransmonParams,
};

pub const DEFAULT_EC_GUESS: f64 = 0.160;
pub const DEFAULT_G_GUESS: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObservableKind {
    /// Dressed g-e transition at flux `phi`.
    Ge { phi: f64 },
    /// Dressed (ef − ge) at flux `phi`.
    Anharmonicity { phi: f64 },
    /// Qubit-dressed resonator frequency (qubit in g) at flux `phi`, with the
    /// filter decoupled.
    Resonator { phi: f64 },
}

impl ObservableKind {
    fn rank(&self) -> (u8, f64) {
        match *self {
            ObservableKind::Ge { phi } => (0, phi),
            ObservableKind::Anharmonicity { phi } => (1, phi),
            ObservableKind::Resonator { phi } => (2, phi),
        }
    }

    pub fn name(&self) -> String {
        match *self {
            ObservableKind::Ge { phi } => format!("ge({phi})"),
            ObservableKind::Anharmonicity { phi } => format!("alpha({phi})"),
            ObservableKind::Resonator { phi } => format!("resonator({phi})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub kind: ObservableKind,
    /// GHz.
    pub value: f64,
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

/// Truncations used by the forward model during fitting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelTruncation {
    pub charge_cutoff: usize,
    pub levels_kept: usize,
    pub n_r: usize,
    pub n_p: usize,
}

impl Default for ModelTruncation {
    fn default() -> Self {
        Self {
            charge_cutoff: 20,
            levels_kept: 5,
            n_r: 5,
            n_p: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralObservations {
    pub observations: Vec<Observation>,
    /// Held fixed during the fit, GHz.
    pub omega_r_bare: f64,
    pub omega_p: f64,
    pub j_rp: f64,
}

impl SpectralObservations {
    /// The usual measurement set: ge at both sweet spots, anharmonicity at
    /// the upper one and optionally the dressed resonator at some flux.
    /// Weights: 1 everywhere except 2 on the anharmonicity.
    pub fn standard(
        ge_at_max: f64,
        ge_at_min: f64,
        anharmonicity_at_max: Option<f64>,
        resonator: Option<(f64, f64)>,
        omega_r_bare: f64,
        omega_p: f64,
        j_rp: f64,
    ) -> Self {
        let mut observations = vec![
            Observation {
                kind: ObservableKind::Ge { phi: 0.0 },
                value: ge_at_max,
                weight: 1.0,
            },
            Observation {
                kind: ObservableKind::Ge { phi: 0.5 },
                value: ge_at_min,
                weight: 1.0,
            },
        ];
        if let Some(a) = anharmonicity_at_max {
            observations.push(Observation {
                kind: ObservableKind::Anharmonicity { phi: 0.0 },
                value: a,
                weight: 2.0,
            });
        }
        if let Some((phi, value)) = resonator {
            observations.push(Observation {
                kind: ObservableKind::Resonator { phi },
                value,
                weight: 1.0,
            });
        }
        Self {
            observations,
            omega_r_bare,
            omega_p,
            j_rp,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.observations.is_empty() {
            return Err(invalid("no observations"));
        }
        for o in &self.observations {
            if !o.value.is_finite() || !(o.weight.is_finite() && o.weight > 0.0) {
                return Err(invalid(format!("bad observation {}", o.kind.name())));
            }
            match o.kind {
                ObservableKind::Ge { .. } if o.value <= 0.0 => {
                    return Err(invalid("ge frequencies must be positive"))
                }
                ObservableKind::Anharmonicity { .. } if o.value >= 0.0 => {
                    return Err(invalid("anharmonicity must be negative"))
                }
                _ => {}
            }
        }
        let ge_at = |p: f64| {
            self.observations.iter().find_map(|o| match o.kind {
                ObservableKind::Ge { phi } if FluxPoint::new(phi).folded() == p => Some(o.value),
                _ => None,
            })
        };
        if let (Some(hi), Some(lo)) = (ge_at(0.0), ge_at(0.5)) {
            if hi <= lo {
                return Err(invalid("ge at the upper sweet spot must exceed ge at the lower one"));
            }
        }
        for (name, v) in [
            ("omega_r_bare", self.omega_r_bare),
            ("omega_p", self.omega_p),
            ("j_rp", self.j_rp),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(format!("{name} must be non-negative")));
            }
        }
        Ok(())
    }

    /// Observations in canonical order, so that the fit does not depend on
    /// how the caller listed them.
    pub fn canonical(&self) -> Vec<Observation> {
        let mut obs = self.observations.clone();
        obs.sort_by(|a, b| {
            let (ka, pa) = a.kind.rank();
            let (kb, pb) = b.kind.rank();
            ka.cmp(&kb)
                .then(pa.total_cmp(&pb))
                .then(a.value.total_cmp(&b.value))
                .then(a.weight.total_cmp(&b.weight))
        });
        obs
    }

    fn value_of(&self, pred: impl Fn(&ObservableKind) -> bool) -> Option<f64> {
        self.canonical().into_iter().find(|o| pred(&o.kind)).map(|o| o.value)
    }

    pub fn has_anharmonicity(&self) -> bool {
        self.value_of(|k| matches!(k, ObservableKind::Anharmonicity { .. })).is_some()
    }

    pub fn has_resonator(&self) -> bool {
        self.value_of(|k| matches!(k, ObservableKind::Resonator { .. })).is_some()
    }
}

/// Parameters the fit adjusts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitParams {
    pub ej_max: f64,
    pub ec: f64,
    pub asym: f64,
    pub g_qr: f64,
}

impl FitParams {
    fn to_vec(self) -> [f64; 4] {
        [self.ej_max, self.ec, self.asym, self.g_qr]
    }

    fn from_slice(v: &[f64; 4]) -> Self {
        Self {
            ej_max: v[0],
            ec: v[1],
            asym: v[2],
            g_qr: v[3],
        }
    }

    fn feasible(&self) -> bool {
        self.ej_max > 0.0
            && self.ec > 0.0
            && self.ej_max / self.ec > 10.0
            && (0.0..1.0).contains(&self.asym)
            && self.g_qr >= 0.0
    }
}

pub const PARAM_NAMES: [&str; 4] = ["ej_max", "ec", "asym", "g_qr"];

/// Closed-form starting point from the asymptotic transmon relation
/// ge ≈ sqrt(8 E_J E_c) − E_c.
pub fn seed_guess(obs: &SpectralObservations) -> FitParams {
    let ec = obs
        .value_of(|k| matches!(k, ObservableKind::Anharmonicity { .. }))
        .map(|a| -a)
        .unwrap_or(DEFAULT_EC_GUESS);
    let ej_for = |ge: f64| (ge + ec).powi(2) / (8.0 * ec);
    let ge_max = obs.value_of(|k| matches!(k, ObservableKind::Ge { phi } if FluxPoint::new(*phi).folded() == 0.0));
    let ge_min = obs.value_of(|k| matches!(k, ObservableKind::Ge { phi } if FluxPoint::new(*phi).folded() == 0.5));
    let ej_max = ge_max.map(ej_for).unwrap_or(25.0);
    let asym = match ge_min {
        Some(lo) => (ej_for(lo) / ej_max).clamp(0.01, 0.95),
        None => 0.5,
    };
    FitParams {
        ej_max,
        ec,
        asym,
        g_qr: DEFAULT_G_GUESS,
    }
}

/// Evaluate the model for every observation (in the given order).
pub fn forward_model(
    p: &FitParams,
    obs: &SpectralObservations,
    order: &[Observation],
    trunc: &ModelTruncation,
) -> Result<Vec<f64>> {
    let transmon = TransmonParams {
        ej_max: p.ej_max,
        ec: p.ec,
        asym: p.asym,
        charge_cutoff: trunc.charge_cutoff,
        levels_kept: trunc.levels_kept,
    };
    let chain = ChainParams {
        transmon,
        omega_r_bare: obs.omega_r_bare,
        omega_p: obs.omega_p,
        g_qr: p.g_qr,
        j_rp: obs.j_rp,
        kappa_p: 0.0,
        kappa_int: 0.0,
        n_r: trunc.n_r,
        n_p: if obs.j_rp > 0.0 { trunc.n_p } else { 1 },
    };
    let bare = chain.without_filter();

    // One spectrum per distinct (filter included, phi).
    let mut cache: Vec<(bool, f64, crate::spectrum::DressedSpectrum)> = Vec::new();
    let mut out = Vec::with_capacity(order.len());
    for o in order {
        let (filtered, phi) = match o.kind {
            ObservableKind::Ge { phi } | ObservableKind::Anharmonicity { phi } => (true, phi),
            ObservableKind::Resonator { phi } => (false, phi),
        };
        let i = match cache.iter().position(|(f, x, _)| *f == filtered && *x == phi) {
            Some(i) => i,
            None => {
                let c = if filtered { &chain } else { &bare };
                let s = diagonalize(&build_real_hamiltonian(c, FluxPoint::new(phi))?);
                cache.push((filtered, phi, s));
                cache.len() - 1
            }
        };
        let s = &cache[i].2;
        let e = |q, r| s.energy_of(BareLabel::new(q, r, 0));
        out.push(match o.kind {
            ObservableKind::Ge { .. } => e(1, 0)?,
            ObservableKind::Anharmonicity { .. } => e(2, 0)? - 2.0 * e(1, 0)?,
            ObservableKind::Resonator { .. } => e(0, 1)?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    /// GHz. Convergence requires every residual below this.
    pub tol: f64,
    /// Objective evaluations per simplex run.
    pub max_iter: usize,
    pub seed: u64,
    pub restarts: usize,
    /// Pin parameters that no observation constrains (E_c without an
    /// anharmonicity, g_qr without a resonator frequency) at their seed values.
    pub pin_unconstrained: bool,
    /// Hold g_qr at this value instead of fitting it.
    pub fixed_g_qr: Option<f64>,
    pub truncation: ModelTruncation,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol: 1e-3,
            max_iter: 3000,
            seed: 0,
            restarts: 3,
            pin_unconstrained: true,
            fixed_g_qr: None,
            truncation: ModelTruncation::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationResidual {
    pub observable: String,
    pub observed: f64,
    pub model: f64,
    /// model − observed, GHz.
    pub residual: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub params: FitParams,
    pub transmon: TransmonParams,
    pub residuals: Vec<ObservationResidual>,
    pub objective: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Parameters held at their seed values because nothing constrains them.
    pub unconstrained: Vec<String>,
    pub restart_objectives: Vec<f64>,
}

impl FitReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.residual.abs()).fold(0.0, f64::max)
    }
}

struct RunResult {
    x: [f64; 4],
    value: f64,
    iterations: usize,
    evals: usize,
    improvement: f64,
}

pub fn fit_chain(obs: &SpectralObservations, opts: &FitOptions) -> Result<FitReport> {
    obs.validate()?;
    if !(opts.tol > 0.0) {
        return Err(invalid("tol must be positive"));
    }
    let order = obs.canonical();
    let mut seed = seed_guess(obs);
    if let Some(g) = opts.fixed_g_qr {
        seed.g_qr = g;
    }

    let mut free = [true, true, true, opts.fixed_g_qr.is_none()];
    let mut unconstrained = Vec::new();
    if opts.pin_unconstrained {
        if !obs.has_anharmonicity() {
            free[1] = false;
            unconstrained.push("ec".to_string());
        }
        if free[3] && !obs.has_resonator() {
            free[3] = false;
            unconstrained.push("g_qr".to_string());
        }
    }
    let n_free = free.iter().filter(|f| **f).count();
    if order.len() < n_free {
        return Err(Error::DegenerateObservations {
            observations: order.len(),
            parameters: n_free,
        });
    }
    let free_idx: Vec<usize> = (0..4).filter(|&i| free[i]).collect();
    let base = seed.to_vec();

    let objective = |scaled: &[f64]| -> f64 {
        let mut p = base;
        for (k, &i) in free_idx.iter().enumerate() {
            p[i] = base[i] * scaled[k];
        }
        let fp = FitParams::from_slice(&p);
        if !fp.feasible() {
            return f64::INFINITY;
        }
        match forward_model(&fp, obs, &order, &opts.truncation) {
            Ok(m) => m
                .iter()
                .zip(&order)
                .map(|(v, o)| o.weight * (v - o.value).powi(2))
                .sum(),
            Err(_) => f64::INFINITY,
        }
    };

    let starts: Vec<Vec<f64>> = {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        (0..opts.restarts.max(1))
            .map(|r| {
                free_idx
                    .iter()
                    .map(|_| if r == 0 { 1.0 } else { rng.random_range(0.9..1.1) })
                    .collect()
            })
            .collect()
    };
    let nm = NelderMeadOptions {
        max_evals: opts.max_iter,
        f_tol: 1e-22,
        x_tol: 1e-10,
    };
    let runs: Vec<RunResult> = starts
        .par_iter()
        .map(|x0| {
            let step: Vec<f64> = x0.iter().map(|_| 0.05).collect();
            let first = minimize(objective, x0, &step, &nm);
            let fine: Vec<f64> = x0.iter().map(|_| 0.002).collect();
            let second = minimize(objective, &first.x, &fine, &nm);
            let mut x = base;
            for (k, &i) in free_idx.iter().enumerate() {
                x[i] = base[i] * second.x[k];
            }
            RunResult {
                x,
                value: second.value,
                iterations: first.iterations + second.iterations,
                evals: first.evals + second.evals,
                improvement: first.value - second.value,
            }
        })
        .collect();
    let best = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.value.total_cmp(&b.1.value).then(a.0.cmp(&b.0)))
        .map(|(_, r)| r)
        .expect("at least one restart");

    let params = FitParams::from_slice(&best.x);
    let model = forward_model(&params, obs, &order, &opts.truncation)?;
    let residuals: Vec<ObservationResidual> = order
        .iter()
        .zip(&model)
        .map(|(o, m)| ObservationResidual {
            observable: o.kind.name(),
            observed: o.value,
            model: *m,
            residual: m - o.value,
            weight: o.weight,
        })
        .collect();
    let max_res = residuals.iter().map(|r| r.residual.abs()).fold(0.0, f64::max);
    let converged =
        best.value.is_finite() && best.improvement < opts.tol * opts.tol && max_res < opts.tol;
    Ok(FitReport {
        params,
        transmon: TransmonParams {
            ej_max: params.ej_max,
            ec: params.ec,
            asym: params.asym,
            charge_cutoff: opts.truncation.charge_cutoff,
            levels_kept: opts.truncation.levels_kept,
        },
        residuals,
        objective: best.value,
        iterations: runs.iter().map(|r| r.iterations).sum(),
        evaluations: runs.iter().map(|r| r.evals).sum(),
        converged,
        unconstrained,
        restart_objectives: runs.iter().map(|r| r.value).collect(),
    })
}

/// Asymmetry that places the dressed ge frequency at the lower sweet spot on
/// `target`, found by bisection on the full chain model.
pub fn solve_asym(chain: &ChainParams, target_ge_at_min: f64) -> Result<f64> {
    let ge = |asym: f64| -> Result<f64> {
        let mut c = *chain;
        c.transmon.asym = asym;
        crate::spectrum::dressed_observables(&c, FluxPoint::MIN).map(|o| o.ge)
    };
    let (mut lo, mut hi) = (1e-3, 0.999);
    let (flo, fhi) = (ge(lo)? - target_ge_at_min, ge(hi)? - target_ge_at_min);
    if flo.signum() == fhi.signum() {
        return Err(invalid(format!(
            "no asymmetry in [{lo}, {hi}] reaches ge = {target_ge_at_min} GHz at half flux"
        )));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if (ge(mid)? - target_ge_at_min).signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_from_asymptotic_inversion() {
        let obs = SpectralObservations::standard(5.415, 4.421, Some(-0.159), None, 6.636, 6.699, 0.0);
        let s = seed_guess(&obs);
        assert!((s.ec - 0.159).abs() < 1e-12);
        let forward = (8.0 * s.ej_max * s.ec).sqrt() - s.ec;
        assert!((forward - 5.415).abs() < 1e-9);
        assert!((s.ej_max - 24.4).abs() < 0.1);
        assert_eq!(s.g_qr, DEFAULT_G_GUESS);
    }

    #[test]
    fn seed_without_anharmonicity() {
        let obs = SpectralObservations::standard(5.008, 3.585, None, None, 7.226, 7.3, 0.0);
        assert_eq!(seed_guess(&obs).ec, DEFAULT_EC_GUESS);
    }

    #[test]
    fn degenerate_observations() {
        let obs = SpectralObservations {
            observations: vec![Observation {
                kind: ObservableKind::Ge { phi: 0.0 },
                value: 5.4,
                weight: 1.0,
            }],
            omega_r_bare: 6.6,
            omega_p: 6.7,
            j_rp: 0.0,
        };
        assert!(matches!(
            fit_chain(&obs, &FitOptions::default()),
            Err(Error::DegenerateObservations {
                observations: 1,
                parameters: 2
            })
        ));
    }

    #[test]
    fn inconsistent_observations_rejected() {
        let obs = SpectralObservations::standard(4.0, 4.5, Some(-0.16), None, 6.6, 6.7, 0.0);
        assert!(matches!(fit_chain(&obs, &FitOptions::default()), Err(Error::InvalidParameter(_))));
    }
}
