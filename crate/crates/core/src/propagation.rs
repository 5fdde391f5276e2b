//! Linear pulse propagation through the cloud in the spectral domain.
//!
//! The cloud acts as a filter `H(omega) = exp(i kappa X(omega))` with
//! `X = (1/L) int chi(omega, z) dz`. The constant `kappa` is fixed so that the
//! resonant control-off intensity transmission equals `exp(-d0)`.

use crate::atomic::LevelScheme;
use crate::bloch::{FieldConfig, MediumConfig, ProbeResponse};
use crate::decoherence::{CollectiveState, StorageDecay};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadratureOptions};
use crate::spectrum::{fft_frequencies, frequency_energy, time_energy, to_frequency, to_time, ComplexSpectrum};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cell::Cell;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Numerics {
    pub quadrature: QuadratureOptions,
    /// The z-integral runs over +-extent * L / 2.
    pub density_extent: f64,
    /// Width of the guard band at each grid edge, as a fraction of the grid.
    pub edge_fraction: f64,
    /// Largest output-energy fraction tolerated inside the guard band.
    pub edge_tolerance: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            quadrature: QuadratureOptions::default(),
            density_extent: 2.5,
            edge_fraction: 0.02,
            edge_tolerance: 1e-6,
        }
    }
}

/// Gaussian probe pulse `exp(-2 ln2 (t - t0)^2 / tau^2)` on a uniform grid
/// t_n = n dt, n < n_t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    /// Intensity FWHM tau (s).
    pub fwhm: f64,
    /// Peak time (s).
    pub t0: f64,
    pub dt: f64,
    pub n_t: usize,
}

impl PulseSpec {
    pub fn new(fwhm: f64, t0: f64, span: f64, n_t: usize) -> Result<Self> {
        let mut v = Vec::new();
        if !(fwhm.is_finite() && fwhm > 0.0) {
            v.push("pulse.fwhm must be > 0".to_string());
        }
        if !n_t.is_power_of_two() || n_t < 16 {
            v.push(format!("grid size {n_t} must be a power of two >= 16"));
        }
        if !(span >= 16.0 * fwhm) {
            v.push(format!("grid span {span:.3e} s must be >= 16 pulse widths"));
        }
        if !v.is_empty() {
            return Err(Error::InvalidConfig(v.join("; ")));
        }
        let pulse = PulseSpec {
            fwhm,
            t0,
            dt: span / n_t as f64,
            n_t,
        };
        let captured = time_energy(&pulse.input_field(), pulse.dt) / pulse.analytic_energy();
        if (captured - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidConfig(format!(
                "pulse energy on grid differs from the analytic value by {:.2e}; the pulse is under-resolved, use more time points",
                (captured - 1.0).abs()
            )));
        }
        Ok(pulse)
    }

    /// Grid laid out for a pulse expected to be delayed by up to `max_delay`:
    /// span = max(24 tau, 6 max_delay), input peak at a quarter of the span.
    pub fn for_delay(fwhm: f64, max_delay: f64, n_t: usize) -> Result<Self> {
        let span = (24.0 * fwhm).max(6.0 * max_delay);
        Self::new(fwhm, 0.25 * span, span, n_t)
    }

    pub fn span(&self) -> f64 {
        self.dt * self.n_t as f64
    }

    pub fn check_delay(&self, delay: f64) -> Result<()> {
        if self.span() < 4.0 * delay {
            return Err(Error::InvalidConfig(format!(
                "grid span {:.3e} s shorter than 4x the delay {:.3e} s",
                self.span(),
                delay
            )));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_t).map(|k| k as f64 * self.dt).collect()
    }

    pub fn omegas(&self) -> Vec<f64> {
        fft_frequencies(self.n_t, self.dt)
    }

    pub fn envelope(&self, t: f64) -> f64 {
        let x = (t - self.t0) / self.fwhm;
        (-2.0 * std::f64::consts::LN_2 * x * x).exp()
    }

    pub fn input_field(&self) -> Vec<C64> {
        self.times().into_iter().map(|t| C64::from(self.envelope(t))).collect()
    }

    /// int |eps_in|^2 dt for unit peak amplitude.
    pub fn analytic_energy(&self) -> f64 {
        self.fwhm * (std::f64::consts::PI / (4.0 * std::f64::consts::LN_2)).sqrt()
    }

    /// Same pulse moved in time by `shift`.
    pub fn shifted(&self, shift: f64) -> Self {
        PulseSpec { t0: self.t0 + shift, ..*self }
    }
}

const TRANSFER_CHUNK: usize = 128;

/// The calibrated spectral response of the cloud.
#[derive(Debug, Clone)]
pub struct MediumResponse {
    response: ProbeResponse,
    kappa: f64,
    half_extent: f64,
    length: f64,
    numerics: Numerics,
}

impl MediumResponse {
    pub fn new(fields: &FieldConfig, medium: &MediumConfig, scheme: &LevelScheme, numerics: &Numerics) -> Result<Self> {
        medium.validate()?;
        let v = fields.violations();
        if !v.is_empty() {
            return Err(Error::InvalidConfig(v.join("; ")));
        }
        let half_extent = 0.5 * numerics.density_extent * medium.length;
        let mut out = MediumResponse {
            response: ProbeResponse::new(fields, medium, scheme)?,
            kappa: 0.0,
            half_extent,
            length: medium.length,
            numerics: *numerics,
        };
        if medium.optical_depth > 0.0 {
            let off = MediumResponse {
                response: ProbeResponse::new(&FieldConfig::resonant(0.0), medium, scheme)?,
                ..out.clone()
            };
            let x_off = off.integrated_chi(&[0.0])?[0];
            if !(x_off.im > 0.0) {
                return Err(Error::InvalidConfig("medium has no resonant absorption to calibrate against".into()));
            }
            out.kappa = medium.optical_depth / (2.0 * x_off.im);
        }
        Ok(out)
    }

    /// Scale factor between the integrated susceptibility and the field phase.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// (1/L) int chi(omega, z) dz for each omega.
    pub fn integrated_chi(&self, omegas: &[f64]) -> Result<Vec<C64>> {
        let len = omegas.len();
        let r = integrate(
            |z, out: &mut [C64]| self.response.chi_into(omegas, z, out),
            -self.half_extent,
            self.half_extent,
            len,
            self.numerics.quadrature,
        )?;
        Ok(r.values.into_iter().map(|v| v / self.length).collect())
    }

    /// Field transfer function exp(i kappa X(omega)).
    pub fn transfer(&self, omegas: &[f64]) -> Result<Vec<C64>> {
        if self.kappa == 0.0 {
            return Ok(vec![C64::new(1.0, 0.0); omegas.len()]);
        }
        // Fixed-size frequency chunks, each with its own panel refinement.
        // The chunking must not depend on the thread count.
        let parts: Result<Vec<Vec<C64>>> = omegas
            .par_chunks(TRANSFER_CHUNK)
            .map(|w| self.integrated_chi(w))
            .collect();
        Ok(parts?
            .into_iter()
            .flatten()
            .map(|x| (C64::new(0.0, self.kappa) * x).exp())
            .collect())
    }
}

/// Where the probe carrier sits relative to the configured detuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Carrier {
    /// Use `probe_detuning` as given.
    Fixed,
    /// Shift the probe onto the transmission maximum of the EIT window,
    /// which the control light shift moves away from the bare two-photon
    /// resonance.
    #[default]
    TransparencyPeak,
}

const PEAK_GRID: usize = 65;
const PEAK_ROUNDS: usize = 6;

impl MediumResponse {
    /// Frequency offset of the transmission maximum closest to the
    /// two-photon resonance. The first search window scales with the control
    /// light shift, of order Omega_c^2 / (4 * 30 Gamma) here, and is then
    /// narrowed around the best point.
    pub fn transparency_peak(&self, control_rabi: f64, gamma: f64) -> Result<f64> {
        if self.kappa == 0.0 || control_rabi == 0.0 {
            return Ok(0.0);
        }
        let mut center = 0.0;
        let mut half = 0.1 * control_rabi * control_rabi / gamma + 0.01 * gamma;
        for _ in 0..PEAK_ROUNDS {
            let grid = crate::spectrum::linear_grid(center, 2.0 * half, PEAK_GRID);
            let absorption: Vec<f64> = self.integrated_chi(&grid)?.iter().map(|x| x.im).collect();
            center = grid[nearest_local_min(&grid, &absorption, center)];
            half = 2.0 * (2.0 * half / (PEAK_GRID - 1) as f64);
        }
        Ok(center)
    }
}

/// Index of the interior local minimum of `y` closest to `x0`, or of the
/// global minimum when there is none.
fn nearest_local_min(x: &[f64], y: &[f64], x0: f64) -> usize {
    let local = (1..y.len() - 1)
        .filter(|&i| y[i] <= y[i - 1] && y[i] <= y[i + 1])
        .min_by(|&i, &j| (x[i] - x0).abs().total_cmp(&(x[j] - x0).abs()));
    local.unwrap_or_else(|| {
        (0..y.len())
            .min_by(|&i, &j| y[i].total_cmp(&y[j]))
            .unwrap()
    })
}

/// `fields` with the probe detuning moved according to `carrier`.
pub fn place_carrier(
    carrier: Carrier,
    fields: &FieldConfig,
    medium: &MediumConfig,
    scheme: &LevelScheme,
    numerics: &Numerics,
) -> Result<FieldConfig> {
    match carrier {
        Carrier::Fixed => Ok(*fields),
        Carrier::TransparencyPeak => {
            let resp = MediumResponse::new(fields, medium, scheme, numerics)?;
            let shift = resp.transparency_peak(fields.control_rabi, scheme.gamma)?;
            Ok(FieldConfig {
                probe_detuning: fields.probe_detuning + shift,
                ..*fields
            })
        }
    }
}

/// Field transfer H(omega) on `omegas`; `|H|^2` is the intensity
/// transmission T(omega).
pub fn transmission_spectrum(
    omegas: &[f64],
    fields: &FieldConfig,
    medium: &MediumConfig,
    scheme: &LevelScheme,
    numerics: &Numerics,
) -> Result<ComplexSpectrum> {
    let resp = MediumResponse::new(fields, medium, scheme, numerics)?;
    Ok(ComplexSpectrum {
        omega: omegas.to_vec(),
        values: resp.transfer(omegas)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Propagated {
    pub times: Vec<f64>,
    pub input: Vec<C64>,
    pub output: Vec<C64>,
    pub dt: f64,
}

impl Propagated {
    pub fn input_energy(&self) -> f64 {
        time_energy(&self.input, self.dt)
    }

    pub fn output_energy(&self) -> f64 {
        time_energy(&self.output, self.dt)
    }

    /// Energy-weighted mean time of the output minus that of the input.
    pub fn centroid_delay(&self) -> f64 {
        centroid(&self.times, &self.output) - centroid(&self.times, &self.input)
    }
}

fn centroid(times: &[f64], field: &[C64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (t, e) in times.iter().zip(field) {
        let w = e.norm_sqr();
        num += t * w;
        den += w;
    }
    num / den
}

/// Propagates the input pulse through the whole cloud.
pub fn propagate_pulse(
    pulse: &PulseSpec,
    fields: &FieldConfig,
    medium: &MediumConfig,
    scheme: &LevelScheme,
    numerics: &Numerics,
) -> Result<Propagated> {
    let resp = MediumResponse::new(fields, medium, scheme, numerics)?;
    propagate_with(&resp, pulse, numerics)
}

pub fn propagate_with(resp: &MediumResponse, pulse: &PulseSpec, numerics: &Numerics) -> Result<Propagated> {
    let input = pulse.input_field();
    let times = pulse.times();
    if resp.kappa() == 0.0 {
        return Ok(Propagated {
            output: input.clone(),
            input,
            times,
            dt: pulse.dt,
        });
    }
    let omegas = pulse.omegas();
    let h = resp.transfer(&omegas)?;
    let mut spec = to_frequency(&input, pulse.dt);
    for (s, h) in spec.iter_mut().zip(&h) {
        *s *= h;
    }
    let output = to_time(&spec, pulse.dt);

    let total: f64 = output.iter().map(|v| v.norm_sqr()).sum();
    if total > 0.0 {
        let band = ((numerics.edge_fraction * pulse.n_t as f64).ceil() as usize).max(1);
        let edge: f64 = output[..band]
            .iter()
            .chain(&output[pulse.n_t - band..])
            .map(|v| v.norm_sqr())
            .sum();
        let fraction = edge / total;
        if fraction > numerics.edge_tolerance {
            return Err(Error::GridAliasing { fraction });
        }
    }
    Ok(Propagated {
        times,
        input,
        output,
        dt: pulse.dt,
    })
}

/// Parseval check helper: relative mismatch between time- and
/// frequency-domain energies of the input pulse.
pub fn parseval_mismatch(pulse: &PulseSpec) -> f64 {
    let input = pulse.input_field();
    let et = time_energy(&input, pulse.dt);
    let ef = frequency_energy(&to_frequency(&input, pulse.dt), pulse.dt);
    ((et - ef) / et).abs()
}

/// Transmitted energy fraction below which the output is too weak to define
/// a delay.
pub const MIN_DELAY_TRANSMISSION: f64 = 1e-2;

fn delay_of(p: &Propagated) -> Result<f64> {
    let t = p.output_energy() / p.input_energy();
    if !(t >= MIN_DELAY_TRANSMISSION) {
        return Err(Error::DegenerateOutput(t));
    }
    Ok(p.centroid_delay())
}

/// Slow-light group delay as the shift of the energy centroid.
pub fn group_delay(
    fields: &FieldConfig,
    medium: &MediumConfig,
    scheme: &LevelScheme,
    pulse: &PulseSpec,
    numerics: &Numerics,
) -> Result<f64> {
    delay_of(&propagate_pulse(pulse, fields, medium, scheme, numerics)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TunedControl {
    pub control_rabi: f64,
    /// Fields at the solution, including the placed probe carrier.
    pub fields: FieldConfig,
    pub delay: f64,
    pub evaluations: usize,
}

/// Relative delay error accepted when the bracket cannot shrink further.
const TUNE_ACCEPT: f64 = 1e-2;

/// Bounds of the control Rabi search, in units of Gamma.
pub const CONTROL_SEARCH_RANGE: (f64, f64) = (1e-3, 1e2);

/// Finds the control Rabi frequency giving the target group delay. The delay
/// decreases monotonically with the control power, so a bracket is grown
/// geometrically from the Lambda-system estimate sqrt(d0 Gamma / T_d) and
/// refined with the Illinois false-position method in log(Omega_c).
/// The probe carrier is re-placed at every trial control power.
pub fn tune_control(
    target_delay: f64,
    fields: &FieldConfig,
    medium: &MediumConfig,
    scheme: &LevelScheme,
    pulse: &PulseSpec,
    numerics: &Numerics,
    carrier: Carrier,
) -> Result<TunedControl> {
    if !(target_delay > 0.0) {
        return Err(Error::InvalidConfig("target delay must be > 0".into()));
    }
    pulse.check_delay(target_delay)?;
    let lo_bound = CONTROL_SEARCH_RANGE.0 * scheme.gamma;
    let hi_bound = CONTROL_SEARCH_RANGE.1 * scheme.gamma;
    let evaluations = Cell::new(0usize);
    let min_delay = Cell::new(f64::INFINITY);
    let max_delay = Cell::new(f64::NEG_INFINITY);
    let fail = || bracket_error(target_delay, lo_bound, hi_bound, min_delay.get(), max_delay.get());

    // f(log Omega) = delay - target; absorbed pulses count as "too slow".
    let eval = |log_rabi: f64| -> Result<f64> {
        evaluations.set(evaluations.get() + 1);
        let f = place_carrier(carrier, &fields.with_control(log_rabi.exp()), medium, scheme, numerics)?;
        match group_delay(&f, medium, scheme, pulse, numerics) {
            Ok(d) => {
                min_delay.set(min_delay.get().min(d));
                max_delay.set(max_delay.get().max(d));
                Ok(d - target_delay)
            }
            Err(Error::DegenerateOutput(_)) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    };

    let guess = (medium.optical_depth.max(1e-6) * scheme.gamma / target_delay)
        .sqrt()
        .clamp(lo_bound, hi_bound);
    let (lo_log, hi_log) = (lo_bound.ln(), hi_bound.ln());
    let step = 1.6f64.ln();
    let mut a = guess.ln();
    let mut fa = eval(a)?;
    let mut b;
    let mut fb;
    if fa > 0.0 {
        // Too slow: raise the control power.
        loop {
            b = (a + step).min(hi_log);
            fb = eval(b)?;
            if fb <= 0.0 {
                break;
            }
            if b >= hi_log {
                return Err(fail());
            }
            a = b;
            fa = fb;
        }
    } else {
        loop {
            b = (a - step).max(lo_log);
            fb = eval(b)?;
            if fb >= 0.0 {
                break;
            }
            if b <= lo_log {
                return Err(fail());
            }
            a = b;
            fa = fb;
        }
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    // Now fa > 0 (slow) at a, fb <= 0 at b, a < b.
    let tol = 1e-4 * target_delay;
    let mut side = 0i32;
    for _ in 0..100 {
        let c = if fa.is_finite() {
            (a * fb - b * fa) / (fb - fa)
        } else {
            0.5 * (a + b)
        };
        let fc = eval(c)?;
        if (b - a).abs() < 1e-12 && !(fc.abs() <= TUNE_ACCEPT * target_delay) {
            // Collapsed onto the jump between absorbed and transmitted
            // pulses: the target is not reachable.
            return Err(fail());
        }
        if fc.abs() <= tol || (b - a).abs() < 1e-12 {
            return Ok(TunedControl {
                control_rabi: c.exp(),
                fields: place_carrier(carrier, &fields.with_control(c.exp()), medium, scheme, numerics)?,
                delay: fc + target_delay,
                evaluations: evaluations.get(),
            });
        }
        if fc > 0.0 {
            a = c;
            fa = fc;
            if side == 1 && fb.is_finite() {
                fb *= 0.5;
            }
            side = 1;
        } else {
            b = c;
            fb = fc;
            if side == -1 && fa.is_finite() {
                fa *= 0.5;
            }
            side = -1;
        }
    }
    Err(fail())
}

fn bracket_error(target: f64, lo: f64, hi: f64, min_delay: f64, max_delay: f64) -> Error {
    Error::Bracket {
        target,
        lo,
        hi,
        min_delay: if min_delay.is_finite() { min_delay } else { 0.0 },
        max_delay: if max_delay.is_finite() { max_delay } else { 0.0 },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StorageOptions {
    /// Control switch-off time T_c after the input peak, in pulse widths.
    pub cutoff_after_peak: f64,
    pub carrier: Carrier,
    pub numerics: Numerics,
    pub decay: StorageDecay,
}

impl Default for StorageOptions {
    fn default() -> Self {
        StorageOptions {
            cutoff_after_peak: 1.0,
            carrier: Carrier::default(),
            numerics: Numerics::default(),
            decay: StorageDecay::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StorageResult {
    pub times: Vec<f64>,
    pub input: Vec<C64>,
    pub output: Vec<C64>,
    /// Control turn-off time T_c (s).
    pub cutoff_time: f64,
    /// Output energy leaving before T_c, relative to the input.
    pub leakage: f64,
    /// Output energy after T_c, relative to the input.
    pub efficiency: f64,
    pub storage_time: f64,
    /// Storage-time factor eta_s (including optional extra decay).
    pub storage_factor: f64,
    pub overall: f64,
}

impl StorageResult {
    /// Input energy neither leaked nor retrieved.
    pub fn absorbed(&self) -> f64 {
        1.0 - self.leakage - self.efficiency
    }
}

/// Storage-and-retrieval efficiency with continuous control: the output
/// energy after T_c counts as retrieved, earlier output as leakage, and the
/// result is multiplied by the dephasing factor for `storage_time`.
pub fn storage_retrieval_efficiency(
    pulse: &PulseSpec,
    fields: &FieldConfig,
    medium: &MediumConfig,
    scheme: &LevelScheme,
    storage_time: f64,
    options: &StorageOptions,
) -> Result<StorageResult> {
    if !(storage_time >= 0.0) {
        return Err(Error::InvalidConfig("storage time must be >= 0".into()));
    }
    let p = propagate_pulse(pulse, fields, medium, scheme, &options.numerics)?;
    let cutoff = pulse.t0 + options.cutoff_after_peak * pulse.fwhm;
    let e_in = p.input_energy();
    let (mut before, mut after) = (0.0, 0.0);
    for (t, e) in p.times.iter().zip(&p.output) {
        if *t < cutoff {
            before += e.norm_sqr();
        } else {
            after += e.norm_sqr();
        }
    }
    let leakage = before * p.dt / e_in;
    let efficiency = after * p.dt / e_in;
    let storage_factor = CollectiveState::from_medium(medium, scheme).efficiency(storage_time)
        * options.decay.extra_factor(storage_time);
    Ok(StorageResult {
        times: p.times,
        input: p.input,
        output: p.output,
        cutoff_time: cutoff,
        leakage,
        efficiency,
        storage_time,
        storage_factor,
        overall: efficiency * storage_factor,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdPoint {
    pub optical_depth: f64,
    pub control_rabi: f64,
    pub efficiency: f64,
    pub leakage: f64,
    pub error: Option<String>,
}

/// Shared settings of an efficiency-versus-OD sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepSetup<'a> {
    pub fields: &'a FieldConfig,
    pub medium: &'a MediumConfig,
    pub scheme: &'a LevelScheme,
    pub pulse: &'a PulseSpec,
    pub target_delay: f64,
    pub options: &'a StorageOptions,
}

/// Retunes the control to the target delay at every optical depth and
/// records the storage efficiency. Failed points are kept with their error.
pub fn efficiency_vs_od(ods: &[f64], setup: &SweepSetup) -> Vec<OdPoint> {
    let mut sorted = ods.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    sorted
        .par_iter()
        .map(|&od| {
            let medium = MediumConfig {
                optical_depth: od,
                ..*setup.medium
            };
            let run = || -> Result<(f64, StorageResult)> {
                let tuned = tune_control(
                    setup.target_delay,
                    setup.fields,
                    &medium,
                    setup.scheme,
                    setup.pulse,
                    &setup.options.numerics,
                    setup.options.carrier,
                )?;
                let r = storage_retrieval_efficiency(setup.pulse, &tuned.fields, &medium, setup.scheme, 0.0, setup.options)?;
                Ok((tuned.control_rabi, r))
            };
            match run() {
                Ok((rabi, r)) => OdPoint {
                    optical_depth: od,
                    control_rabi: rabi,
                    efficiency: r.efficiency,
                    leakage: r.leakage,
                    error: None,
                },
                Err(e) => OdPoint {
                    optical_depth: od,
                    control_rabi: f64::NAN,
                    efficiency: f64::NAN,
                    leakage: f64::NAN,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}
