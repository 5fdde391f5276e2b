//! Memory decoherence: atomic transit, motional dephasing of the spin-wave
//! grating, and magnetic-gradient dephasing of the multi-sublevel collective
//! excitation.

use crate::atomic::{LevelScheme, F_G, F_S};
use crate::angular::cg2_unchecked;
use crate::bloch::{MediumConfig, Populations};
use crate::constants::{BOHR_MAGNETON_PER_GAUSS, BOLTZMANN, HBAR};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Excited level used for the probe/control Clebsch-Gordan ratio.
const F_E: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DephasingParams {
    /// Probe beam diameter D (m).
    pub beam_diameter: f64,
    /// Probe-control crossing angle (rad).
    pub crossing_angle: f64,
    /// Temperature (K).
    pub temperature: f64,
    /// Atomic mass (kg).
    pub mass: f64,
    /// Optical wavelength (m).
    pub wavelength: f64,
    /// Magnetic field gradient B0 (G/cm).
    pub gradient: f64,
    /// Cloud length L (m).
    pub length: f64,
}

impl DephasingParams {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (name, x) in [
            ("beam_diameter", self.beam_diameter),
            ("temperature", self.temperature),
            ("mass", self.mass),
            ("wavelength", self.wavelength),
            ("length", self.length),
        ] {
            if !(x.is_finite() && x > 0.0) {
                v.push(format!("dephasing.{name} must be > 0"));
            }
        }
        if !(self.crossing_angle.is_finite() && self.crossing_angle >= 0.0) {
            v.push("dephasing.crossing_angle must be >= 0".into());
        }
        if !(self.gradient.is_finite() && self.gradient >= 0.0) {
            v.push("dephasing.gradient must be >= 0".into());
        }
        v
    }

    /// Thermal velocity sqrt(k_B T / m).
    pub fn thermal_velocity(&self) -> f64 {
        (BOLTZMANN * self.temperature / self.mass).sqrt()
    }
}

/// Time for an atom at the thermal velocity to cross the probe beam.
pub fn transit_time(params: &DephasingParams) -> Result<f64> {
    if !(params.temperature > 0.0) {
        return Err(Error::InvalidConfig("temperature must be > 0".into()));
    }
    Ok(params.beam_diameter / params.thermal_velocity())
}

/// Spin-wave grating lifetime lambda / (2 pi sin theta) * sqrt(m / k_B T).
/// `None` means no motional dephasing (collinear beams).
pub fn motional_dephasing_time(params: &DephasingParams) -> Option<f64> {
    let s = params.crossing_angle.sin();
    if s == 0.0 {
        return None;
    }
    Some(params.wavelength / (2.0 * PI * s) * (params.mass / (BOLTZMANN * params.temperature)).sqrt())
}

/// Phase accumulated by the |s_m> - |g_m> coherence at position z after time t.
pub fn magnetic_phase(m: i32, z: f64, t: f64, params: &DephasingParams, scheme: &LevelScheme) -> f64 {
    let field = params.gradient * z * 100.0;
    BOHR_MAGNETON_PER_GAUSS * m as f64 * (scheme.lande_s - scheme.lande_g) * field * t / HBAR
}

/// Probe-to-control Clebsch-Gordan ratio R_m for |g_m>, |s_m> -> |F'=4, m+1>.
pub fn cg_ratio(m: i32) -> f64 {
    let probe = cg2_unchecked(2 * F_G, 2 * m, 2, 2, 2 * F_E, 2 * (m + 1));
    let control = cg2_unchecked(2 * F_S, 2 * m, 2, 2, 2 * F_E, 2 * (m + 1));
    probe / control
}

/// The stored spin wave as a weighted sum of Zeeman components, each with its
/// own Gaussian dephasing envelope in a linear field gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectiveState {
    /// (m, w_m R_m^2, tau_m) for populated sublevels; tau_m = inf for m = 0
    /// or zero gradient.
    components: Vec<(i32, f64, f64)>,
}

impl CollectiveState {
    pub fn new(populations: &Populations, gradient: f64, length: f64, scheme: &LevelScheme) -> Self {
        let dg = scheme.lande_s - scheme.lande_g;
        let components = populations
            .iter()
            .filter(|(_, p)| *p > 0.0)
            .map(|(m, p)| {
                let r = cg_ratio(m);
                let rate = BOHR_MAGNETON_PER_GAUSS * (m as f64 * dg * gradient * length * 100.0).abs();
                let tau = if rate == 0.0 { f64::INFINITY } else { 2.0 * 2f64.sqrt() * HBAR / rate };
                (m, p * r * r, tau)
            })
            .collect();
        CollectiveState { components }
    }

    pub fn from_medium(medium: &MediumConfig, scheme: &LevelScheme) -> Self {
        Self::new(&medium.populations, medium.gradient, medium.length, scheme)
    }

    /// (m, weight, tau_m) of every populated sublevel.
    pub fn components(&self) -> &[(i32, f64, f64)] {
        &self.components
    }

    pub fn dephasing_time(&self, m: i32) -> Option<f64> {
        self.components.iter().find(|c| c.0 == m).map(|c| c.2)
    }

    /// Overlap efficiency eta_s(t), normalised to eta_s(0) = 1.
    pub fn efficiency(&self, t: f64) -> f64 {
        let norm: f64 = self.components.iter().map(|c| c.1).sum();
        if norm == 0.0 {
            return 0.0;
        }
        let amp: f64 = self
            .components
            .iter()
            .map(|&(_, w, tau)| if tau.is_infinite() { w } else { w * (-(t / tau).powi(2)).exp() })
            .sum();
        ((amp / norm).powi(2)).clamp(0.0, 1.0)
    }

    /// Time at which the amplitude overlap sqrt(eta_s) falls to 1/e, found by
    /// bisection. `None` if it never does (e.g. only m = 0 populated).
    pub fn amplitude_decay_time(&self) -> Option<f64> {
        let target = (-1.0f64).exp();
        let amp = |t: f64| self.efficiency(t).sqrt();
        let mut hi = self
            .components
            .iter()
            .map(|c| c.2)
            .filter(|t| t.is_finite())
            .fold(f64::INFINITY, f64::min);
        if !hi.is_finite() {
            return None;
        }
        let mut lo = 0.0;
        let mut tries = 0;
        while amp(hi) > target {
            hi *= 2.0;
            tries += 1;
            if tries > 60 {
                return None;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if amp(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }
}

/// eta_s(t) for the given population distribution and field gradient.
pub fn collective_overlap_efficiency(
    t: f64,
    populations: &Populations,
    params: &DephasingParams,
    scheme: &LevelScheme,
) -> f64 {
    CollectiveState::new(populations, params.gradient, params.length, scheme).efficiency(t)
}

/// Which decay channels multiply the storage-time efficiency. Magnetic
/// dephasing is always included; transit loss and motional dephasing are
/// optional sensitivity terms.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StorageDecay {
    pub include_transit: bool,
    pub include_motional: bool,
    pub dephasing: Option<DephasingParams>,
}

impl StorageDecay {
    /// Extra multiplicative factor from the optional channels at time t.
    pub fn extra_factor(&self, t: f64) -> f64 {
        let Some(params) = self.dephasing else { return 1.0 };
        let mut f = 1.0;
        if self.include_transit {
            if let Ok(tau1) = transit_time(&params) {
                f *= (-t / tau1).exp();
            }
        }
        if self.include_motional {
            if let Some(tau2) = motional_dephasing_time(&params) {
                f *= (-(t / tau2).powi(2)).exp();
            }
        }
        f
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifetimePoint {
    pub time: f64,
    pub efficiency: f64,
    pub band_low: f64,
    pub band_high: f64,
}

/// Overall efficiency versus storage time: the propagation efficiency times
/// eta_s(t), with a band from shifting the gradient by +-`gradient_uncertainty`.
pub fn lifetime_curve(
    storage_times: &[f64],
    propagation_efficiency: f64,
    medium: &MediumConfig,
    scheme: &LevelScheme,
    gradient_uncertainty: f64,
    decay: &StorageDecay,
) -> Vec<LifetimePoint> {
    let nominal = CollectiveState::from_medium(medium, scheme);
    let state_at = |g: f64| CollectiveState::new(&medium.populations, g.max(0.0), medium.length, scheme);
    let lower = state_at(medium.gradient.abs() - gradient_uncertainty);
    let upper = state_at(medium.gradient.abs() + gradient_uncertainty);
    storage_times
        .iter()
        .map(|&t| {
            let extra = decay.extra_factor(t);
            let a = propagation_efficiency * lower.efficiency(t) * extra;
            let b = propagation_efficiency * upper.efficiency(t) * extra;
            LifetimePoint {
                time: t,
                efficiency: propagation_efficiency * nominal.efficiency(t) * extra,
                band_low: a.min(b),
                band_high: a.max(b),
            }
        })
        .collect()
}
