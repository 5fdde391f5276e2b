//! Fourier-domain optical Bloch equations for the sigma+/sigma+ multi-level
//! scheme and the resulting linear probe susceptibility.
//!
//! Each ground sublevel |g_m> forms one independent channel with the excited
//! states |e_{F', m+1}> (F' = 2..5) and the spin coherence with |s_m>. In the
//! frequency domain a channel is a 5x5 linear system whose matrix has arrow
//! structure: excited rows are diagonal apart from their coupling to the spin
//! coherence.
//!
//! Sign convention: the susceptibility is reported with Im chi >= 0 for a
//! passive medium, so the field transfer is `exp(i k chi)`.

use crate::atomic::{excited_index, zeeman_detuning, GroundManifold, LevelScheme, F_G};
use crate::error::{Error, Result};
use nalgebra::{Matrix5, Vector5};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Probe and control field parameters (all rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig {
    /// Probe detuning from |g> -> |F'=4>.
    pub probe_detuning: f64,
    /// Control detuning from |s> -> |F'=4>.
    pub control_detuning: f64,
    /// Control Rabi frequency on |s, m=0> -> |F'=4, m=1>.
    pub control_rabi: f64,
    /// Probe Rabi scale. Only enters linearly.
    pub probe_rabi: f64,
}

impl FieldConfig {
    pub fn resonant(control_rabi: f64) -> Self {
        FieldConfig {
            probe_detuning: 0.0,
            control_detuning: 0.0,
            control_rabi,
            probe_rabi: 1.0,
        }
    }

    pub fn with_control(mut self, control_rabi: f64) -> Self {
        self.control_rabi = control_rabi;
        self
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (name, x) in [
            ("probe_detuning", self.probe_detuning),
            ("control_detuning", self.control_detuning),
            ("control_rabi", self.control_rabi),
            ("probe_rabi", self.probe_rabi),
        ] {
            if !x.is_finite() {
                v.push(format!("fields.{name} must be finite"));
            }
        }
        if self.control_rabi < 0.0 {
            v.push("fields.control_rabi must be >= 0".into());
        }
        v
    }
}

/// Ground-state population over m = -3..=3 of F = 3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Populations(pub [f64; 7]);

impl Populations {
    pub fn equal() -> Self {
        Populations([1.0 / 7.0; 7])
    }

    /// All atoms in one sublevel (e.g. m = 3 after optical pumping).
    pub fn single(m: i32) -> Self {
        assert!(m.abs() <= F_G, "sublevel {m} outside F = 3");
        let mut p = [0.0; 7];
        p[(m + 3) as usize] = 1.0;
        Populations(p)
    }

    #[inline]
    pub fn get(&self, m: i32) -> f64 {
        self.0[(m + 3) as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.0.iter().enumerate().map(|(k, &p)| (k as i32 - 3, p))
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.0.iter().any(|p| !p.is_finite() || *p < 0.0) {
            v.push("medium.populations must be non-negative".into());
        }
        let total: f64 = self.0.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            v.push(format!("medium.populations must sum to 1 (got {total})"));
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumConfig {
    /// Resonant control-off optical depth (intensity).
    pub optical_depth: f64,
    /// Cloud length L (m); density falls as exp(-4 z^2 / L^2).
    pub length: f64,
    /// Temperature (K).
    pub temperature: f64,
    /// Magnetic field gradient B0 (G/cm), B(z) = B0 z.
    pub gradient: f64,
    /// Intrinsic ground-state decoherence gamma0 (rad/s).
    pub gamma0: f64,
    pub populations: Populations,
}

impl MediumConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.optical_depth.is_finite() && self.optical_depth >= 0.0) {
            v.push("medium.od must be >= 0".into());
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            v.push("medium.length must be > 0".into());
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            v.push("medium.temperature must be > 0".into());
        }
        if !self.gradient.is_finite() {
            v.push("medium.gradient must be finite".into());
        }
        if !(self.gamma0.is_finite() && self.gamma0 >= 0.0) {
            v.push("medium.gamma0 must be >= 0".into());
        }
        v.extend(self.populations.violations());
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v.join("; ")))
        }
    }

    /// n(z) / n0.
    #[inline]
    pub fn density(&self, z: f64) -> f64 {
        (-4.0 * z * z / (self.length * self.length)).exp()
    }

    /// Field (G) at position z (m).
    #[inline]
    pub fn field_gauss(&self, z: f64) -> f64 {
        self.gradient * z * 100.0
    }
}

/// Solution of one Zeeman channel at one (omega, z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceSolution {
    pub m: i32,
    /// sigma_{e_{F', m+1} g_m} for F' = 2, 3, 4, 5.
    pub excited: [C64; 4],
    /// sigma_{s_m g_m}.
    pub spin: C64,
    /// ||A x - b|| / ||b|| of the direct solve.
    pub residual: f64,
}

impl CoherenceSolution {
    pub fn excited_coherence(&self, f_exc: i32) -> C64 {
        self.excited[excited_index(f_exc)]
    }
}

/// Per-channel constants, independent of (omega, z).
#[derive(Debug, Clone, Copy)]
struct Channel {
    m: i32,
    weight: f64,
    present: [bool; 4],
    probe_dipole: [f64; 4],
    half_control: [f64; 4],
    offset: [f64; 4],
    /// One-photon Zeeman detuning per gauss.
    zeeman: [f64; 4],
    /// Two-photon Zeeman detuning per gauss.
    zeeman_raman: f64,
}

impl Channel {
    fn new(m: i32, weight: f64, fields: &FieldConfig, scheme: &LevelScheme) -> Self {
        let reference = scheme.reference_control_dipole();
        let mut ch = Channel {
            m,
            weight,
            present: [false; 4],
            probe_dipole: [0.0; 4],
            half_control: [0.0; 4],
            offset: [0.0; 4],
            zeeman: [0.0; 4],
            // The excited-state shift cancels in the two-photon detuning.
            zeeman_raman: zeeman_detuning(m, scheme.lande_g, 0.0, 1.0)
                - zeeman_detuning(m, scheme.lande_s, 0.0, 1.0),
        };
        for level in scheme.excited_levels() {
            let k = excited_index(level.f);
            ch.present[k] = true;
            ch.probe_dipole[k] = scheme.dipole(GroundManifold::G, m, level.f);
            ch.half_control[k] =
                0.5 * fields.control_rabi * scheme.dipole(GroundManifold::S, m, level.f) / reference;
            ch.offset[k] = level.offset;
            ch.zeeman[k] = scheme.zeeman_detuning(m, GroundManifold::G, level.f, 1.0);
        }
        ch
    }

    /// Diagonal of the excited rows.
    #[inline]
    fn excited_diag(&self, k: usize, omega: f64, fields: &FieldConfig, field: f64, gamma: f64) -> C64 {
        C64::new(
            omega + fields.probe_detuning + self.zeeman[k] * field - self.offset[k],
            0.5 * gamma,
        )
    }

    #[inline]
    fn spin_diag(&self, omega: f64, fields: &FieldConfig, field: f64, gamma0: f64) -> C64 {
        C64::new(
            omega + fields.probe_detuning - fields.control_detuning + self.zeeman_raman * field,
            gamma0,
        )
    }

    /// Probe response of this channel normalised by (Omega_p / 2), i.e.
    /// sum over probe-coupled F' of d_{F'} sigma_{F'} / (Omega_p / 2), by
    /// eliminating the excited coherences into the spin row.
    #[inline]
    fn response(&self, omega: f64, fields: &FieldConfig, field: f64, gamma: f64, gamma0: f64) -> C64 {
        let mut inv_d = [C64::new(0.0, 0.0); 4];
        let mut schur = self.spin_diag(omega, fields, field, gamma0);
        let mut source = C64::new(0.0, 0.0);
        let mut coupled = false;
        for k in 0..4 {
            if !self.present[k] {
                continue;
            }
            inv_d[k] = self.excited_diag(k, omega, fields, field, gamma).inv();
            let c = self.half_control[k];
            if c != 0.0 {
                coupled = true;
                schur -= c * c * inv_d[k];
                source += c * self.probe_dipole[k] * inv_d[k];
            }
        }
        let spin = if coupled { source / schur } else { C64::new(0.0, 0.0) };
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..3 {
            // F' = 5 is not probe-coupled from F = 3.
            if !self.present[k] || self.probe_dipole[k] == 0.0 {
                continue;
            }
            let sigma = -(self.probe_dipole[k] + self.half_control[k] * spin) * inv_d[k];
            acc += self.probe_dipole[k] * sigma;
        }
        acc
    }
}

fn check_rates(scheme: &LevelScheme, medium: &MediumConfig) -> Result<()> {
    if scheme.gamma == 0.0 && medium.gamma0 == 0.0 {
        return Err(Error::SingularSystem);
    }
    if !(scheme.gamma > 0.0) {
        return Err(Error::InvalidConfig("natural linewidth must be > 0".into()));
    }
    Ok(())
}

/// Solves the 5x5 coherence system of sublevel `m` at (omega, z) by direct LU
/// factorisation.
pub fn solve_coherences(
    omega: f64,
    z: f64,
    m: i32,
    fields: &FieldConfig,
    medium: &MediumConfig,
    scheme: &LevelScheme,
) -> Result<CoherenceSolution> {
    if m.abs() > F_G {
        return Err(Error::InvalidConfig(format!("sublevel m = {m} outside F = 3")));
    }
    check_rates(scheme, medium)?;
    let ch = Channel::new(m, medium.populations.get(m), fields, scheme);
    let field = medium.field_gauss(z);
    let p = ch.weight;

    let mut a = Matrix5::<C64>::zeros();
    let mut b = Vector5::<C64>::zeros();
    for k in 0..4 {
        if ch.present[k] {
            a[(k, k)] = ch.excited_diag(k, omega, fields, field, scheme.gamma);
            a[(k, 4)] = C64::from(ch.half_control[k]);
            a[(4, k)] = C64::from(ch.half_control[k]);
            if k < 3 {
                b[k] = C64::from(-0.5 * fields.probe_rabi * ch.probe_dipole[k] * p);
            }
        } else {
            // Level removed from the scheme: decoupled, sigma = 0.
            a[(k, k)] = C64::from(1.0);
        }
    }
    a[(4, 4)] = ch.spin_diag(omega, fields, field, medium.gamma0);
    if a[(4, 4)] == C64::from(0.0) && (0..4).all(|k| a[(4, k)] == C64::from(0.0)) {
        // No control and exact two-photon resonance without decoherence: the
        // spin coherence is undriven.
        a[(4, 4)] = C64::from(1.0);
    }

    let x = a.lu().solve(&b).ok_or(Error::SingularSystem)?;
    let bnorm = b.norm();
    let residual = if bnorm > 0.0 { (a * x - b).norm() / bnorm } else { x.norm() };
    Ok(CoherenceSolution {
        m,
        excited: [x[0], x[1], x[2], x[3]],
        spin: x[4],
        residual,
    })
}

/// Probe susceptibility of the whole medium at (omega, z), summed over the
/// populated Zeeman channels.
///
/// Units are relative: for a single two-level line of unit dipole and unit
/// population the value is `-n(z)/n0 / (omega + Delta + i Gamma/2)`. The
/// absolute scale is fixed later against the configured optical depth.
pub fn susceptibility(
    omega: f64,
    z: f64,
    fields: &FieldConfig,
    medium: &MediumConfig,
    scheme: &LevelScheme,
) -> Result<C64> {
    Ok(ProbeResponse::new(fields, medium, scheme)?.chi(omega, z))
}

/// Precomputed channel data for repeated evaluation of chi(omega, z).
#[derive(Debug, Clone)]
pub struct ProbeResponse {
    fields: FieldConfig,
    medium: MediumConfig,
    gamma: f64,
    channels: Vec<Channel>,
}

impl ProbeResponse {
    pub fn new(fields: &FieldConfig, medium: &MediumConfig, scheme: &LevelScheme) -> Result<Self> {
        check_rates(scheme, medium)?;
        let channels = medium
            .populations
            .iter()
            .filter(|(_, p)| *p > 0.0)
            .map(|(m, p)| Channel::new(m, p, fields, scheme))
            .collect();
        Ok(ProbeResponse {
            fields: *fields,
            medium: *medium,
            gamma: scheme.gamma,
            channels,
        })
    }

    #[inline]
    pub fn chi(&self, omega: f64, z: f64) -> C64 {
        let n = self.medium.density(z);
        if n == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let field = self.medium.field_gauss(z);
        let mut total = C64::new(0.0, 0.0);
        for ch in &self.channels {
            total += ch.weight * ch.response(omega, &self.fields, field, self.gamma, self.medium.gamma0);
        }
        n * total
    }

    /// chi at one position for a whole frequency grid.
    pub fn chi_into(&self, omegas: &[f64], z: f64, out: &mut [C64]) {
        for (o, &w) in out.iter_mut().zip(omegas) {
            *o = self.chi(w, z);
        }
    }

    /// Per-sublevel susceptibility (without population weight) at (omega, z).
    pub fn channel_chi(&self, m: i32, omega: f64, z: f64) -> Option<C64> {
        let field = self.medium.field_gauss(z);
        self.channels.iter().find(|c| c.m == m).map(|ch| {
            self.medium.density(z) * ch.response(omega, &self.fields, field, self.gamma, self.medium.gamma0)
        })
    }
}

/// Same quantity as [`susceptibility`] computed from the LU route; used to
/// cross-check the eliminated form.
pub fn susceptibility_direct(
    omega: f64,
    z: f64,
    fields: &FieldConfig,
    medium: &MediumConfig,
    scheme: &LevelScheme,
) -> Result<C64> {
    let mut total = C64::new(0.0, 0.0);
    for (m, p) in medium.populations.iter() {
        if p == 0.0 {
            continue;
        }
        let sol = solve_coherences(omega, z, m, fields, medium, scheme)?;
        for f in [2, 3, 4] {
            total += scheme.dipole(GroundManifold::G, m, f) * sol.excited_coherence(f);
        }
    }
    if fields.probe_rabi == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    Ok(medium.density(z) * total / (0.5 * fields.probe_rabi))
}

/// Off-resonant light shift and control-induced ground decoherence summed
/// over m and the F' = 3, 5 levels. Returns (Delta_p_eff, gamma0_eff).
pub fn effective_params(fields: &FieldConfig, medium: &MediumConfig, scheme: &LevelScheme) -> (f64, f64) {
    let reference = scheme.reference_control_dipole();
    let mut shift = 0.0;
    let mut decay = 0.0;
    for m in -F_G..=F_G {
        for f in [3, 5] {
            let Some(level) = scheme.excited_level(f) else { continue };
            let rabi = fields.control_rabi * scheme.dipole(GroundManifold::S, m, f) / reference;
            let quarter = rabi * rabi / 4.0;
            shift += quarter / level.offset;
            decay += quarter / (level.offset * level.offset) * scheme.gamma / 2.0;
        }
    }
    (fields.probe_detuning + shift, medium.gamma0 + decay)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomic::build_cesium_d2;
    use approx::assert_relative_eq;

    fn medium(pops: Populations) -> MediumConfig {
        MediumConfig {
            optical_depth: 200.0,
            length: 0.025,
            temperature: 20e-6,
            gradient: 8e-3,
            gamma0: 1e-3 * crate::constants::cesium::GAMMA,
            populations: pops,
        }
    }

    #[test]
    fn zero_probe_gives_zero_coherences() {
        let s = build_cesium_d2();
        let mut f = FieldConfig::resonant(2.0 * s.gamma);
        f.probe_rabi = 0.0;
        let sol = solve_coherences(0.3 * s.gamma, 0.004, 1, &f, &medium(Populations::equal()), &s).unwrap();
        assert!(sol.excited.iter().all(|c| c.norm() == 0.0));
        assert_eq!(sol.spin.norm(), 0.0);
    }

    #[test]
    fn coherences_are_linear_in_probe() {
        let s = build_cesium_d2();
        let med = medium(Populations::equal());
        let f1 = FieldConfig::resonant(1.5 * s.gamma);
        let mut f2 = f1;
        f2.probe_rabi = 2.0;
        let a = solve_coherences(0.1 * s.gamma, 0.003, -2, &f1, &med, &s).unwrap();
        let b = solve_coherences(0.1 * s.gamma, 0.003, -2, &f2, &med, &s).unwrap();
        for k in 0..4 {
            assert_relative_eq!(b.excited[k].re, 2.0 * a.excited[k].re, max_relative = 1e-12, epsilon = 1e-300);
            assert_relative_eq!(b.excited[k].im, 2.0 * a.excited[k].im, max_relative = 1e-12, epsilon = 1e-300);
        }
        assert_relative_eq!(b.spin.norm(), 2.0 * a.spin.norm(), max_relative = 1e-12);
    }

    #[test]
    fn two_level_resonant_hand_solution() {
        let s = build_cesium_d2().with_excited_levels(&[4]);
        let mut med = medium(Populations::single(1));
        med.gradient = 0.0;
        let f = FieldConfig::resonant(0.0);
        let sol = solve_coherences(0.0, 0.0, 1, &f, &med, &s).unwrap();
        let d = s.dipole(GroundManifold::G, 1, 4);
        let expect = -(0.5 * f.probe_rabi * d * 1.0) / C64::new(0.0, s.gamma / 2.0);
        assert_relative_eq!(sol.excited_coherence(4).re, expect.re, epsilon = 1e-15);
        assert_relative_eq!(sol.excited_coherence(4).im, expect.im, max_relative = 1e-13);
        assert_eq!(sol.spin.norm(), 0.0);
    }

    #[test]
    fn solver_residual_small() {
        let s = build_cesium_d2();
        let med = medium(Populations::equal());
        let f = FieldConfig::resonant(2.5 * s.gamma);
        for m in -3..=3 {
            for w in [-40.0, -1.0, 0.0, 1e-3, 0.7, 48.0] {
                let sol = solve_coherences(w * s.gamma, 0.01, m, &f, &med, &s).unwrap();
                assert!(sol.residual < 1e-10, "m={m} w={w} residual {}", sol.residual);
            }
        }
    }

    #[test]
    fn eliminated_and_direct_routes_agree() {
        let s = build_cesium_d2();
        let med = medium(Populations::equal());
        let f = FieldConfig {
            probe_detuning: 0.2 * s.gamma,
            control_detuning: -0.1 * s.gamma,
            control_rabi: 3.0 * s.gamma,
            probe_rabi: 0.7,
        };
        for w in [-45.0, -3.0, -0.01, 0.0, 0.02, 1.0, 40.0] {
            for z in [-0.02, 0.0, 0.011] {
                let a = susceptibility(w * s.gamma, z, &f, &med, &s).unwrap();
                let b = susceptibility_direct(w * s.gamma, z, &f, &med, &s).unwrap();
                assert_relative_eq!(a.re, b.re, max_relative = 1e-10, epsilon = 1e-14);
                assert_relative_eq!(a.im, b.im, max_relative = 1e-10, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn empty_medium_far_outside_cloud() {
        let s = build_cesium_d2();
        let med = medium(Populations::equal());
        let chi = susceptibility(0.0, 10.0, &FieldConfig::resonant(0.0), &med, &s).unwrap();
        assert_eq!(chi, C64::new(0.0, 0.0));
    }

    #[test]
    fn ideal_lambda_is_dark_full_scheme_is_not() {
        let full = build_cesium_d2();
        let lambda = full.with_excited_levels(&[4]);
        let mut med = medium(Populations::equal());
        med.gradient = 0.0;
        med.gamma0 = 0.0;
        let f = FieldConfig::resonant(2.0 * full.gamma);
        let dark = susceptibility(0.0, 0.0, &f, &med, &lambda).unwrap();
        assert!(dark.im.abs() < 1e-15, "{dark}");
        let leaky = susceptibility(0.0, 0.0, &f, &med, &full).unwrap();
        assert!(leaky.im > 0.0);
    }

    #[test]
    fn singular_rates_rejected() {
        let mut s = build_cesium_d2();
        s.gamma = 0.0;
        let mut med = medium(Populations::equal());
        med.gamma0 = 0.0;
        let err = solve_coherences(0.0, 0.0, 0, &FieldConfig::resonant(1.0), &med, &s).unwrap_err();
        assert_eq!(err, Error::SingularSystem);
    }

    #[test]
    fn effective_params_limits() {
        let s = build_cesium_d2();
        let med = medium(Populations::equal());
        let (d, g) = effective_params(&FieldConfig::resonant(0.0), &med, &s);
        assert_eq!(d, 0.0);
        assert_eq!(g, med.gamma0);
        let (_, g1) = effective_params(&FieldConfig::resonant(1.0 * s.gamma), &med, &s);
        let (_, g2) = effective_params(&FieldConfig::resonant(2.0 * s.gamma), &med, &s);
        assert_relative_eq!(g2 - med.gamma0, 4.0 * (g1 - med.gamma0), max_relative = 1e-12);
    }
}
