//! Qubit ge frequency as a function of applied flux.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::spectrum::{dressed_observables, ChainParams, FluxPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FluxMap {
    /// Cubic Hermite interpolation over φ ∈ [0, 0.5]; extended by evenness
    /// and unit periodicity.
    Tabulated { phi: Vec<f64>, freq: Vec<f64>, slope: Vec<f64> },
    /// f(φ) = f0 + slope·φ, unfolded.
    Linear { f0: f64, slope: f64 },
}

impl FluxMap {
    /// Tabulate the dressed ge frequency of `c` on `points` uniform fluxes.
    pub fn from_chain(c: &ChainParams, points: usize) -> Result<Self> {
        if points < 5 {
            return Err(invalid("flux map needs at least 5 points"));
        }
        let c = c.without_filter();
        let phi: Vec<f64> = (0..points).map(|k| 0.5 * k as f64 / (points - 1) as f64).collect();
        let freq: Vec<f64> = phi
            .iter()
            .map(|&p| dressed_observables(&c, FluxPoint::new(p)).map(|o| o.ge))
            .collect::<Result<_>>()?;
        let h = phi[1] - phi[0];
        let n = points;
        let mut slope = vec![0.0; n];
        for k in 1..n - 1 {
            // Fourth-order central differences, mirrored across the sweet spots.
            let at = |i: isize| -> f64 {
                let j = if i < 0 {
                    -i
                } else if i >= n as isize {
                    2 * (n as isize - 1) - i
                } else {
                    i
                };
                freq[j as usize]
            };
            let k = k as isize;
            slope[k as usize] = (at(k - 2) - 8.0 * at(k - 1) + 8.0 * at(k + 1) - at(k + 2)) / (12.0 * h);
        }
        Ok(FluxMap::Tabulated { phi, freq, slope })
    }

    pub fn frequency(&self, phi: f64) -> f64 {
        match self {
            FluxMap::Linear { f0, slope } => f0 + slope * phi,
            FluxMap::Tabulated { phi: grid, freq, slope } => {
                let p = FluxPoint::new(phi).folded();
                let h = grid[1] - grid[0];
                let k = ((p / h).floor() as usize).min(grid.len() - 2);
                let t = (p - grid[k]) / h;
                let (t2, t3) = (t * t, t * t * t);
                let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
                let h10 = t3 - 2.0 * t2 + t;
                let h01 = -2.0 * t3 + 3.0 * t2;
                let h11 = t3 - t2;
                h00 * freq[k] + h10 * h * slope[k] + h01 * freq[k + 1] + h11 * h * slope[k + 1]
            }
        }
    }

    /// Flux on the branch starting at `idle_phi` that detunes the qubit by
    /// `detuning` GHz. The branch runs towards φ = 0.5 from a φ = 0 idle
    /// point and towards 0 otherwise.
    pub fn flux_for_detuning(&self, idle_phi: f64, detuning: f64) -> Result<f64> {
        let f_idle = self.frequency(idle_phi);
        let target = f_idle + detuning;
        if let FluxMap::Linear { slope, .. } = self {
            if *slope == 0.0 {
                return Err(invalid("flat flux map cannot be inverted"));
            }
            return Ok(detuning / slope);
        }
        let end = if FluxPoint::new(idle_phi).folded() < 0.25 { 0.5 } else { 0.0 };
        let (mut lo, mut hi) = (0.0f64, end - FluxPoint::new(idle_phi).folded());
        let g = |d: f64| self.frequency(idle_phi + d) - target;
        if g(lo) * g(hi) > 0.0 {
            return Err(Error::InvalidParameter(format!(
                "detuning {detuning} GHz is outside the tunable range"
            )));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) * g(lo) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            if (hi - lo).abs() < 1e-15 {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Detuning from the idle point for each flux offset.
    pub fn detunings(&self, idle_phi: f64, flux: &[f64]) -> Vec<f64> {
        let f0 = self.frequency(idle_phi);
        flux.iter().map(|&d| self.frequency(idle_phi + d) - f0).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::TransmonParams;

    fn chain() -> ChainParams {
        ChainParams {
            transmon: TransmonParams::new(27.79, 0.154, 0.6),
            omega_r_bare: 7.022,
            omega_p: 7.107,
            g_qr: 0.117,
            j_rp: 0.0177,
            kappa_p: 0.0284,
            kappa_int: 0.0,
            n_r: 4,
            n_p: 3,
        }
    }

    #[test]
    fn interpolation_matches_direct_evaluation() {
        let c = chain();
        let map = FluxMap::from_chain(&c, 201).unwrap();
        for phi in [0.0, 0.013, 0.1234, 0.31, 0.4999, -0.2, 1.1] {
            let direct = dressed_observables(&c.without_filter(), FluxPoint::new(phi)).unwrap().ge;
            assert!((map.frequency(phi) - direct).abs() < 2e-6, "{phi}");
        }
    }

    #[test]
    fn inversion_round_trip() {
        let map = FluxMap::from_chain(&chain(), 101).unwrap();
        let d = map.flux_for_detuning(0.0, -0.2).unwrap();
        assert!(d > 0.0);
        assert!((map.frequency(d) - map.frequency(0.0) + 0.2).abs() < 1e-12);
        assert!(map.flux_for_detuning(0.0, -5.0).is_err());
        let lin = FluxMap::Linear { f0: 5.0, slope: -2.0 };
        assert_eq!(lin.flux_for_detuning(0.0, -0.2).unwrap(), 0.1);
    }
}
