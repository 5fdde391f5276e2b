//! Uniform time/frequency grids and the continuous-Fourier conventions used
//! for pulse propagation: `f(omega) = int f(t) exp(+i omega t) dt`.

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// A complex function sampled on an angular-frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrum {
    pub omega: Vec<f64>,
    pub values: Vec<C64>,
}

impl ComplexSpectrum {
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// |value|^2 at every sample; the intensity transmission for a field
    /// transfer function.
    pub fn power(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }
}

/// `n` evenly spaced points over [center - span/2, center + span/2].
pub fn linear_grid(center: f64, span: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![center],
        _ => (0..n)
            .map(|k| center - 0.5 * span + span * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Angular frequencies of an `n`-point DFT with spacing `dt`, in FFT order.
pub fn fft_frequencies(n: usize, dt: f64) -> Vec<f64> {
    let dw = 2.0 * PI / (n as f64 * dt);
    (0..n)
        .map(|k| {
            let k = if k < n.div_ceil(2) { k as i64 } else { k as i64 - n as i64 };
            k as f64 * dw
        })
        .collect()
}

/// Samples of `int f(t) e^{i omega t} dt` for a signal on t_n = n dt.
pub fn to_frequency(signal: &[C64], dt: f64) -> Vec<C64> {
    let mut buf = signal.to_vec();
    FftPlanner::new().plan_fft_inverse(buf.len()).process(&mut buf);
    for v in &mut buf {
        *v *= dt;
    }
    buf
}

/// Inverse of [`to_frequency`]: `int d omega / 2 pi f(omega) e^{-i omega t}`.
pub fn to_time(spectrum: &[C64], dt: f64) -> Vec<C64> {
    let n = spectrum.len();
    let mut buf = spectrum.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / (n as f64 * dt);
    for v in &mut buf {
        *v *= scale;
    }
    buf
}

/// int |f(t)|^2 dt on the grid.
pub fn time_energy(signal: &[C64], dt: f64) -> f64 {
    signal.iter().map(|v| v.norm_sqr()).sum::<f64>() * dt
}

/// int |f(omega)|^2 d omega / 2 pi on the matching frequency grid.
pub fn frequency_energy(spectrum: &[C64], dt: f64) -> f64 {
    spectrum.iter().map(|v| v.norm_sqr()).sum::<f64>() / (spectrum.len() as f64 * dt)
}
