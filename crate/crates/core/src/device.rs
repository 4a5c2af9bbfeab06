//! Device descriptions: per-qubit chain parameters, coherence, operating
//! points, readout settings, couplers and the flux-line response.
//!
//! The on-disk format is TOML with units in the key names; the same schema
//! is accepted as JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{DuffingPair, QubitModel, QubitNoise};
use crate::error::{Error, Result};
use crate::fit::SpectralObservations;
use crate::flux::{IirTerm, TransferFunction};
use crate::fluxmap::FluxMap;
use crate::readout::{ReadoutConfig, ReadoutModes, TwoStep};
use crate::spectrum::{dressed_observables, ChainParams, FluxPoint, TransmonParams};

const DEVICE_A: &str = include_str!("../../../configs/device-a.toml");
const DEVICE_B: &str = include_str!("../../../configs/device-b.toml");

/// Tabulation density for flux maps built from a chain.
pub const FLUX_MAP_POINTS: usize = 201;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceDescription {
    pub id: String,
    pub qubits: Vec<QubitSpec>,
    #[serde(default)]
    pub couplers: Vec<CouplerSpec>,
    pub flux_line: FluxLineSpec,
    #[serde(default)]
    pub gates: GateSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitSpec {
    pub name: String,
    pub ej_max_ghz: f64,
    pub ec_ghz: f64,
    pub asym: f64,
    pub g_qr_ghz: f64,
    pub omega_r_bare_ghz: f64,
    pub omega_p_ghz: f64,
    pub j_rp_ghz: f64,
    pub kappa_p_ghz: f64,
    #[serde(default)]
    pub kappa_int_ghz: f64,
    #[serde(default = "default_n_r")]
    pub resonator_levels: usize,
    #[serde(default = "default_n_p")]
    pub filter_levels: usize,
    /// Reduced flux Φ/Φ₀ at the idle point.
    pub operating_phi: f64,
    /// Anharmonicity of the Kerr model; derived from the chain when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anharmonicity_ghz: Option<f64>,
    #[serde(default = "default_levels")]
    pub dynamics_levels: usize,
    pub t1_us: f64,
    pub t2_star_us: f64,
    pub t2_echo_us: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured: Option<MeasuredSpectrum>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readout: Option<ReadoutSpec>,
}

fn default_n_r() -> usize {
    5
}

fn default_n_p() -> usize {
    5
}

fn default_levels() -> usize {
    3
}

/// Measured dressed frequencies used by the parameter fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasuredSpectrum {
    pub ge_max_ghz: f64,
    pub ge_min_ghz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anharmonicity_max_ghz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resonator_phi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resonator_ghz: Option<f64>,
}

/// Published parameters the fit is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceParams {
    pub ej_max_ghz: f64,
    pub ec_ghz: f64,
    pub g_qr_ghz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutSpec {
    pub integration_time_ns: f64,
    pub drive_amplitude: f64,
    pub eta: f64,
    pub shots: usize,
    pub residual_excited: f64,
    #[serde(default = "default_dt")]
    pub sample_period_ns: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_frequency_ghz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two_step_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two_step_duration_ns: Option<f64>,
}

fn default_dt() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplerSpec {
    pub qubits: [String; 2],
    pub j_qq_ghz: f64,
    pub interaction_frequency_ghz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxLineSpec {
    pub dc_gain: f64,
    pub sample_period_ns: f64,
    #[serde(default)]
    pub fir_taps: Vec<f64>,
    #[serde(default)]
    pub iir_terms: Vec<IirTermSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IirTermSpec {
    pub amplitude: f64,
    pub tau_ns: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSpec {
    pub single_qubit_duration_ns: f64,
    pub sample_period_ns: f64,
    pub cz_buffer_ns: f64,
}

impl Default for GateSpec {
    fn default() -> Self {
        Self {
            single_qubit_duration_ns: 40.0,
            sample_period_ns: 0.5,
            cz_buffer_ns: 20.0,
        }
    }
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl QubitSpec {
    pub fn chain(&self) -> ChainParams {
        ChainParams {
            transmon: TransmonParams::new(self.ej_max_ghz, self.ec_ghz, self.asym),
            omega_r_bare: self.omega_r_bare_ghz,
            omega_p: self.omega_p_ghz,
            g_qr: self.g_qr_ghz,
            j_rp: self.j_rp_ghz,
            kappa_p: self.kappa_p_ghz,
            kappa_int: self.kappa_int_ghz,
            n_r: self.resonator_levels,
            n_p: self.filter_levels,
        }
    }

    pub fn noise(&self) -> QubitNoise {
        QubitNoise {
            t1_us: self.t1_us,
            t2_star_us: self.t2_star_us,
            t2_echo_us: self.t2_echo_us,
        }
    }

    pub fn operating_point(&self) -> FluxPoint {
        FluxPoint::new(self.operating_phi)
    }

    pub fn observations(&self) -> Option<SpectralObservations> {
        let m = self.measured?;
        let resonator = match (m.resonator_phi, m.resonator_ghz) {
            (Some(p), Some(v)) => Some((p, v)),
            _ => None,
        };
        Some(SpectralObservations::standard(
            m.ge_max_ghz,
            m.ge_min_ghz,
            m.anharmonicity_max_ghz,
            resonator,
            self.omega_r_bare_ghz,
            self.omega_p_ghz,
            self.j_rp_ghz,
        ))
    }

    pub fn flux_map(&self) -> Result<FluxMap> {
        FluxMap::from_chain(&self.chain(), FLUX_MAP_POINTS)
    }

    pub fn anharmonicity(&self) -> Result<f64> {
        match self.anharmonicity_ghz {
            Some(a) => Ok(a),
            None => Ok(dressed_observables(&self.chain().without_filter(), self.operating_point())?.anharmonicity),
        }
    }

    pub fn qubit_model(&self) -> Result<QubitModel> {
        Ok(QubitModel {
            anharmonicity: self.anharmonicity()?,
            levels: self.dynamics_levels,
            flux_map: self.flux_map()?,
            idle_phi: self.operating_phi,
        })
    }

    pub fn readout_modes(&self) -> Result<ReadoutModes> {
        ReadoutModes::from_chain(&self.chain(), self.operating_point())
    }

    pub fn readout_config(&self) -> Option<ReadoutConfig> {
        let r = self.readout?;
        let two_step = match (r.two_step_scale, r.two_step_duration_ns) {
            (Some(s), Some(d)) => Some(TwoStep {
                initial_scale: s,
                initial_duration_ns: d,
            }),
            _ => None,
        };
        Some(ReadoutConfig {
            probe_frequency: r.probe_frequency_ghz,
            integration_time_ns: r.integration_time_ns,
            drive_amplitude: r.drive_amplitude,
            eta: r.eta,
            shots: r.shots,
            two_step,
            residual_excited: r.residual_excited,
            sample_period_ns: r.sample_period_ns,
            ..ReadoutConfig::default()
        })
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("ej_max_ghz", self.ej_max_ghz),
            ("ec_ghz", self.ec_ghz),
            ("omega_r_bare_ghz", self.omega_r_bare_ghz),
            ("omega_p_ghz", self.omega_p_ghz),
            ("t1_us", self.t1_us),
            ("t2_star_us", self.t2_star_us),
            ("t2_echo_us", self.t2_echo_us),
        ];
        for (k, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(cfg_err(format!("qubit {}: {k} must be positive", self.name)));
            }
        }
        for (k, v) in [
            ("g_qr_ghz", self.g_qr_ghz),
            ("j_rp_ghz", self.j_rp_ghz),
            ("kappa_p_ghz", self.kappa_p_ghz),
            ("kappa_int_ghz", self.kappa_int_ghz),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(cfg_err(format!("qubit {}: {k} must be non-negative", self.name)));
            }
        }
        if !(0.0..1.0).contains(&self.asym) {
            return Err(cfg_err(format!("qubit {}: asym must lie in [0, 1)", self.name)));
        }
        if !self.operating_phi.is_finite() {
            return Err(cfg_err(format!("qubit {}: operating_phi must be finite", self.name)));
        }
        if let Some(a) = self.anharmonicity_ghz {
            if !(a < 0.0) {
                return Err(cfg_err(format!("qubit {}: anharmonicity must be negative", self.name)));
            }
        }
        if self.dynamics_levels < 2 || self.resonator_levels < 2 || self.filter_levels < 1 {
            return Err(cfg_err(format!("qubit {}: truncation too small", self.name)));
        }
        self.noise()
            .validate()
            .map_err(|e| cfg_err(format!("qubit {}: {e}", self.name)))?;
        if let Some(o) = self.observations() {
            o.validate().map_err(|e| cfg_err(format!("qubit {}: {e}", self.name)))?;
        }
        if let Some(r) = self.readout_config() {
            r.validate().map_err(|e| cfg_err(format!("qubit {}: {e}", self.name)))?;
        }
        Ok(())
    }
}

impl FluxLineSpec {
    pub fn transfer_function(&self) -> TransferFunction {
        TransferFunction {
            dc_gain: self.dc_gain,
            iir_terms: self
                .iir_terms
                .iter()
                .map(|t| IirTerm {
                    amplitude: t.amplitude,
                    tau_ns: t.tau_ns,
                })
                .collect(),
            fir_taps: self.fir_taps.clone(),
            sample_period_ns: self.sample_period_ns,
        }
    }
}

impl DeviceDescription {
    /// Bundled descriptions: "device-a" and "device-b".
    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "device-a" | "a" => Self::from_toml(DEVICE_A),
            "device-b" | "b" => Self::from_toml(DEVICE_B),
            _ => Err(cfg_err(format!("no bundled device named {name}"))),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let d: Self = toml::from_str(text).map_err(|e| cfg_err(e.to_string()))?;
        d.validate()?;
        Ok(d)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let d: Self = serde_json::from_str(text).map_err(|e| cfg_err(e.to_string()))?;
        d.validate()?;
        Ok(d)
    }

    /// Loads by extension: `.json` as JSON, anything else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| cfg_err(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| cfg_err(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.trim().is_empty() {
            return Err(cfg_err("device id is empty"));
        }
        if self.qubits.is_empty() {
            return Err(cfg_err("device has no qubits"));
        }
        for (i, q) in self.qubits.iter().enumerate() {
            if self.qubits[..i].iter().any(|p| p.name == q.name) {
                return Err(cfg_err(format!("duplicate qubit {}", q.name)));
            }
            q.validate()?;
        }
        for c in &self.couplers {
            if c.qubits[0] == c.qubits[1] {
                return Err(cfg_err("coupler must join two distinct qubits"));
            }
            for name in &c.qubits {
                if self.qubit(name).is_none() {
                    return Err(cfg_err(format!("coupler references unknown qubit {name}")));
                }
            }
            if !(c.j_qq_ghz.is_finite() && c.j_qq_ghz >= 0.0 && c.interaction_frequency_ghz > 0.0) {
                return Err(cfg_err("coupler needs j_qq_ghz ≥ 0 and a positive interaction frequency"));
            }
        }
        self.flux_line
            .transfer_function()
            .validate()
            .map_err(|e| cfg_err(format!("flux line: {e}")))?;
        let g = &self.gates;
        if !(g.single_qubit_duration_ns > 0.0 && g.sample_period_ns > 0.0 && g.cz_buffer_ns >= 0.0) {
            return Err(cfg_err("gate settings must be positive"));
        }
        Ok(())
    }

    pub fn qubit(&self, name: &str) -> Option<&QubitSpec> {
        self.qubits.iter().find(|q| q.name == name)
    }

    pub fn coupler(&self, a: &str, b: &str) -> Option<&CouplerSpec> {
        self.couplers
            .iter()
            .find(|c| (c.qubits[0] == a && c.qubits[1] == b) || (c.qubits[0] == b && c.qubits[1] == a))
    }

    /// Kerr-model pair for a coupler, qubit order as listed in the coupler.
    pub fn pair(&self, coupler: &CouplerSpec) -> Result<DuffingPair> {
        let q = |n: &str| self.qubit(n).ok_or_else(|| cfg_err(format!("unknown qubit {n}")));
        let pair = DuffingPair {
            qubits: [q(&coupler.qubits[0])?.qubit_model()?, q(&coupler.qubits[1])?.qubit_model()?],
            j_qq: coupler.j_qq_ghz,
            interaction_frequency: coupler.interaction_frequency_ghz,
            sample_period_ns: self.gates.sample_period_ns,
        };
        pair.validate()?;
        Ok(pair)
    }
}
