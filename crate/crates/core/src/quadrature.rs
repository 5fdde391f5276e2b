//! Adaptive Gauss-Kronrod (7/15) quadrature for complex vector-valued
//! integrands. All components share the same panel refinement, which is what
//! the z-integral of chi(omega, z) over a whole frequency grid needs.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
/// 7-point Gauss weights at XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureOptions {
    /// Target error relative to the largest component of the integral.
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            rel_tol: 1e-10,
            max_panels: 512,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuadratureResult {
    pub values: Vec<C64>,
    /// Estimated error relative to max |value|.
    pub rel_error: f64,
    pub panels: usize,
}

struct Panel {
    a: f64,
    b: f64,
    kronrod: Vec<C64>,
    error: f64,
}

fn gk15<F>(f: &F, a: f64, b: f64, len: usize) -> (Vec<C64>, Vec<C64>)
where
    F: Fn(f64, &mut [C64]) + Sync,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    // 15 nodes: index 0..7 -> center - half*x, 7..14 -> center + half*x, 14 -> center.
    let nodes: Vec<(f64, f64, Option<f64>)> = (0..15)
        .map(|n| {
            let (k, s) = if n < 7 { (n, -1.0) } else if n < 14 { (n - 7, 1.0) } else { (7, 0.0) };
            let gauss = if k % 2 == 1 { Some(WG[k / 2]) } else { None };
            (center + s * half * XGK[k], WGK[k], gauss)
        })
        .collect();
    let evals: Vec<Vec<C64>> = nodes
        .par_iter()
        .map(|&(x, _, _)| {
            let mut buf = vec![C64::new(0.0, 0.0); len];
            f(x, &mut buf);
            buf
        })
        .collect();
    let mut kr = vec![C64::new(0.0, 0.0); len];
    let mut ga = vec![C64::new(0.0, 0.0); len];
    for ((_, wk, wg), vals) in nodes.iter().zip(&evals) {
        for i in 0..len {
            kr[i] += *wk * vals[i];
            if let Some(w) = wg {
                ga[i] += *w * vals[i];
            }
        }
    }
    for i in 0..len {
        kr[i] *= half;
        ga[i] *= half;
    }
    (kr, ga)
}

fn max_abs_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Integrates `f` over [a, b]. `f(x, out)` fills `out` (length `len`) with
/// the integrand at x.
pub fn integrate<F>(f: F, a: f64, b: f64, len: usize, opts: QuadratureOptions) -> Result<QuadratureResult>
where
    F: Fn(f64, &mut [C64]) + Sync,
{
    let make_panel = |a: f64, b: f64| {
        let (k, g) = gk15(&f, a, b, len);
        let error = max_abs_diff(&k, &g);
        Panel { a, b, kronrod: k, error }
    };
    let mut panels = vec![make_panel(a, b)];
    loop {
        let mut total = vec![C64::new(0.0, 0.0); len];
        let mut err = 0.0;
        for p in &panels {
            for (t, v) in total.iter_mut().zip(&p.kronrod) {
                *t += v;
            }
            err += p.error;
        }
        let scale = total.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let rel = if scale > 0.0 { err / scale } else { err };
        if rel <= opts.rel_tol || (scale == 0.0 && err == 0.0) {
            return Ok(QuadratureResult {
                values: total,
                rel_error: rel,
                panels: panels.len(),
            });
        }
        if panels.len() >= opts.max_panels {
            return Err(Error::Quadrature {
                achieved: rel,
                tolerance: opts.rel_tol,
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap();
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        panels.push(make_panel(p.a, mid));
        panels.push(make_panel(mid, p.b));
        // Keep summation order independent of refinement history.
        panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_integral() {
        // int_{-2.5}^{2.5} exp(-4 x^2) dx = sqrt(pi)/2 * erf(5)
        let r = integrate(
            |x, out| out[0] = C64::from((-4.0 * x * x).exp()),
            -2.5,
            2.5,
            1,
            QuadratureOptions::default(),
        )
        .unwrap();
        let exact = std::f64::consts::PI.sqrt() / 2.0 * (1.0 - 1.537_459_794_428_034_8e-12);
        assert_relative_eq!(r.values[0].re, exact, max_relative = 1e-12);
    }

    #[test]
    fn vector_components_and_polynomials() {
        let r = integrate(
            |x, out| {
                out[0] = C64::new(x * x, 0.0);
                out[1] = C64::new(0.0, x.powi(5) + 1.0);
            },
            0.0,
            2.0,
            2,
            QuadratureOptions::default(),
        )
        .unwrap();
        assert_relative_eq!(r.values[0].re, 8.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(r.values[1].im, 64.0 / 6.0 + 2.0, max_relative = 1e-14);
        assert_eq!(r.panels, 1);
    }

    #[test]
    fn reports_non_convergence() {
        let err = integrate(
            |x, out| out[0] = C64::from(x.abs().sqrt().recip().min(1e12)),
            -1.0,
            1.0,
            1,
            QuadratureOptions { rel_tol: 1e-14, max_panels: 8 },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }
}
