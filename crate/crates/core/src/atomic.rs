//! Cesium D2 level scheme: hyperfine manifolds, Zeeman sublevels, Landé
//! factors and relative sigma+ dipole amplitudes.

use crate::angular::{cg2_unchecked, wigner_6j2};
use crate::constants::{cesium, BOHR_MAGNETON_PER_GAUSS, HBAR};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Lower hyperfine ground manifold (F = 3), the one the probe reads.
pub const F_G: i32 = 3;
/// Upper hyperfine ground manifold (F = 4), addressed by the control.
pub const F_S: i32 = 4;
/// Excited hyperfine levels of 6P_{3/2}.
pub const EXCITED_F: [i32; 4] = [2, 3, 4, 5];
/// Control Rabi frequencies are quoted on |s, m=0> -> |F'=4, m=1>.
pub const REFERENCE_CONTROL_M: i32 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroundManifold {
    /// |g> = 6S_{1/2}, F = 3
    G,
    /// |s> = 6S_{1/2}, F = 4
    S,
}

impl GroundManifold {
    pub fn f(self) -> i32 {
        match self {
            GroundManifold::G => F_G,
            GroundManifold::S => F_S,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcitedLevel {
    pub f: i32,
    /// Hyperfine energy relative to F' = 4 (rad/s).
    pub offset: f64,
    pub lande: f64,
}

/// Index of F' = 2..=5 into fixed-size tables.
#[inline]
pub(crate) fn excited_index(f: i32) -> usize {
    (f - 2) as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelScheme {
    /// Natural linewidth (rad/s).
    pub gamma: f64,
    pub wavelength: f64,
    pub mass: f64,
    pub lande_g: f64,
    pub lande_s: f64,
    excited: Vec<ExcitedLevel>,
    /// d[manifold][m + 4][F' - 2], zero for removed levels and forbidden lines.
    dipoles: [[[f64; 4]; 9]; 2],
}

/// Hyperfine Landé factor from the electronic term only.
pub fn lande_factor(g_j: f64, two_j: i32, two_i: i32, f: i32) -> f64 {
    let j = two_j as f64 / 2.0;
    let i = two_i as f64 / 2.0;
    let f = f as f64;
    g_j * (f * (f + 1.0) - i * (i + 1.0) + j * (j + 1.0)) / (2.0 * f * (f + 1.0))
}

/// Relative sigma+ amplitude <F', m+1| d_{+1} |F, m> in units of the reduced
/// J = 1/2 -> J' = 3/2 matrix element.
pub fn sigma_plus_dipole(f: i32, m: i32, f_exc: i32) -> f64 {
    const TWO_J: i32 = 1;
    const TWO_JP: i32 = 3;
    if m.abs() > f || (m + 1).abs() > f_exc || (f - f_exc).abs() > 1 {
        return 0.0;
    }
    let cg = cg2_unchecked(2 * f, 2 * m, 2, 2, 2 * f_exc, 2 * (m + 1));
    let six_j = wigner_6j2(TWO_J, TWO_JP, 2, 2 * f_exc, 2 * f, cesium::TWO_I)
        .expect("valid cesium quantum numbers");
    // (-1)^{F + J + I}; J + I = 4 for cesium.
    let phase = if f % 2 == 0 { 1.0 } else { -1.0 };
    phase * (((2 * f + 1) * (TWO_J + 1)) as f64).sqrt() * six_j * cg
}

/// Relative hyperfine transition strength S_{FF'} (sums to one over F').
pub fn relative_strength(f: i32, f_exc: i32) -> f64 {
    let six_j = wigner_6j2(1, 3, 2, 2 * f_exc, 2 * f, cesium::TWO_I).unwrap_or(0.0);
    ((2 * f_exc + 1) * 2) as f64 * six_j * six_j
}

/// Zeeman shift of the sigma+ line |F, m> -> |F', m+1> relative to its
/// zero-field frequency, expressed as an added detuning (rad/s).
pub fn zeeman_detuning(m: i32, g_ground: f64, g_excited: f64, field_gauss: f64) -> f64 {
    BOHR_MAGNETON_PER_GAUSS * (m as f64 * g_ground - (m + 1) as f64 * g_excited) * field_gauss / HBAR
}

/// The full cesium D2 scheme with every excited level retained.
pub fn build_cesium_d2() -> LevelScheme {
    let excited = cesium::EXCITED_OFFSETS_HZ
        .iter()
        .map(|&(f, hz)| ExcitedLevel {
            f,
            offset: 2.0 * PI * hz,
            lande: lande_factor(cesium::G_J_EXCITED, 3, cesium::TWO_I, f),
        })
        .collect();
    let mut scheme = LevelScheme {
        gamma: cesium::GAMMA,
        wavelength: cesium::D2_WAVELENGTH,
        mass: cesium::MASS,
        lande_g: lande_factor(cesium::G_J_GROUND, 1, cesium::TWO_I, F_G),
        lande_s: lande_factor(cesium::G_J_GROUND, 1, cesium::TWO_I, F_S),
        excited,
        dipoles: [[[0.0; 4]; 9]; 2],
    };
    scheme.fill_dipoles();
    scheme
}

impl LevelScheme {
    fn fill_dipoles(&mut self) {
        self.dipoles = [[[0.0; 4]; 9]; 2];
        for (k, manifold) in [GroundManifold::G, GroundManifold::S].into_iter().enumerate() {
            let f = manifold.f();
            for m in -f..=f {
                for level in &self.excited {
                    self.dipoles[k][(m + 4) as usize][excited_index(level.f)] =
                        sigma_plus_dipole(f, m, level.f);
                }
            }
        }
    }

    pub fn excited_levels(&self) -> &[ExcitedLevel] {
        &self.excited
    }

    pub fn excited_level(&self, f: i32) -> Option<&ExcitedLevel> {
        self.excited.iter().find(|l| l.f == f)
    }

    /// Copy of the scheme keeping only the listed excited levels. Used to
    /// reduce the model to a Lambda system or to isolate level contributions.
    pub fn with_excited_levels(&self, keep: &[i32]) -> LevelScheme {
        let mut out = self.clone();
        out.excited.retain(|l| keep.contains(&l.f));
        out.fill_dipoles();
        out
    }

    /// Relative sigma+ dipole amplitude for |manifold, m> -> |F', m+1>.
    #[inline]
    pub fn dipole(&self, manifold: GroundManifold, m: i32, f_exc: i32) -> f64 {
        if !(2..=5).contains(&f_exc) || m.abs() > 4 {
            return 0.0;
        }
        let k = match manifold {
            GroundManifold::G => 0,
            GroundManifold::S => 1,
        };
        self.dipoles[k][(m + 4) as usize][excited_index(f_exc)]
    }

    pub fn ground_lande(&self, manifold: GroundManifold) -> f64 {
        match manifold {
            GroundManifold::G => self.lande_g,
            GroundManifold::S => self.lande_s,
        }
    }

    /// Zeeman detuning of |manifold, m> -> |F', m+1> in a field of `field_gauss`.
    /// Zero when F' is not part of the scheme.
    pub fn zeeman_detuning(&self, m: i32, manifold: GroundManifold, f_exc: i32, field_gauss: f64) -> f64 {
        match self.excited_level(f_exc) {
            Some(level) => zeeman_detuning(m, self.ground_lande(manifold), level.lande, field_gauss),
            None => 0.0,
        }
    }

    /// Reference control dipole used to convert the global control Rabi
    /// frequency into per-transition values.
    pub fn reference_control_dipole(&self) -> f64 {
        sigma_plus_dipole(F_S, REFERENCE_CONTROL_M, 4)
    }

    /// Reduced wavelength lambda / 2 pi.
    pub fn reduced_wavelength(&self) -> f64 {
        self.wavelength / (2.0 * PI)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angular::wigner_3j2;
    use approx::assert_abs_diff_eq;

    #[test]
    fn forbidden_lines_vanish() {
        let s = build_cesium_d2();
        // m' = 4 does not exist in F' = 2
        assert_eq!(s.dipole(GroundManifold::G, 3, 2), 0.0);
        assert_eq!(s.dipole(GroundManifold::G, 2, 2), 0.0);
        // |Delta F| = 2
        assert_eq!(s.dipole(GroundManifold::G, 0, 5), 0.0);
        assert_eq!(s.dipole(GroundManifold::S, 0, 2), 0.0);
        assert!(s.dipole(GroundManifold::G, 1, 2).abs() > 0.0);
    }

    #[test]
    fn ground_lande_factors_opposite_quarter() {
        let s = build_cesium_d2();
        assert!(s.lande_g < 0.0 && s.lande_s > 0.0);
        assert_abs_diff_eq!(s.lande_g, -s.lande_s, epsilon = 1e-15);
        // g_J / 8 with g_J(6S_{1/2}) = 2.00254
        assert_abs_diff_eq!(s.lande_s, 2.002_540_32 / 8.0, epsilon = 1e-12);
        assert!((s.lande_s - 0.25).abs() < 0.001);
    }

    #[test]
    fn excited_lande_factors() {
        let s = build_cesium_d2();
        let g = |f| s.excited_level(f).unwrap().lande;
        assert_abs_diff_eq!(g(2), -1.3340 / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g(3), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g(4), 1.3340 / 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g(5), 1.3340 * 0.3, epsilon = 1e-12);
    }

    #[test]
    fn hyperfine_strengths_match_tabulated_values() {
        // Standard cesium D2 relative strengths.
        assert_abs_diff_eq!(relative_strength(3, 2), 5.0 / 14.0, epsilon = 1e-12);
        assert_abs_diff_eq!(relative_strength(3, 3), 3.0 / 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(relative_strength(3, 4), 15.0 / 56.0, epsilon = 1e-12);
        assert_abs_diff_eq!(relative_strength(4, 3), 7.0 / 72.0, epsilon = 1e-12);
        assert_abs_diff_eq!(relative_strength(4, 4), 7.0 / 24.0, epsilon = 1e-12);
        assert_abs_diff_eq!(relative_strength(4, 5), 11.0 / 18.0, epsilon = 1e-12);
    }

    #[test]
    fn dipole_matches_three_j_form() {
        // Independent route through the 3-j symbol:
        // (-1)^{2F'+J+I+m} sqrt((2F+1)(2F'+1)(2J+1)) (F' 1 F; m+1 -1 -m) {J J' 1; F' F I}
        for f in [3i32, 4] {
            for fp in 2i32..=5 {
                for m in -f..=f {
                    if (m + 1).abs() > fp {
                        continue;
                    }
                    let three_j = wigner_3j2(2 * fp, 2, 2 * f, 2 * (m + 1), -2, -2 * m).unwrap();
                    let six_j = wigner_6j2(1, 3, 2, 2 * fp, 2 * f, 7).unwrap();
                    // 2F' + J + I + m = 2F' + 4 + m
                    let phase = if (2 * fp + 4 + m).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                    let expect = phase * (((2 * f + 1) * (2 * fp + 1) * 2) as f64).sqrt() * three_j * six_j;
                    let got = sigma_plus_dipole(f, m, fp);
                    assert_abs_diff_eq!(got.abs(), expect.abs(), epsilon = 1e-13);
                }
            }
        }
    }

    #[test]
    fn splitting_and_reference() {
        let s = build_cesium_d2();
        assert_eq!(s.excited_level(4).unwrap().offset, 0.0);
        assert!(s.reference_control_dipole().abs() > 0.1);
        let lambda = s.with_excited_levels(&[4]);
        assert_eq!(lambda.excited_levels().len(), 1);
        assert_eq!(lambda.dipole(GroundManifold::G, 0, 3), 0.0);
        assert_eq!(lambda.dipole(GroundManifold::G, 0, 4), s.dipole(GroundManifold::G, 0, 4));
    }

    #[test]
    fn zeeman_zero_field_and_linear() {
        let s = build_cesium_d2();
        for m in -3..=3 {
            assert_eq!(s.zeeman_detuning(m, GroundManifold::G, 4, 0.0), 0.0);
            let a = s.zeeman_detuning(m, GroundManifold::G, 4, 0.01);
            let b = s.zeeman_detuning(m, GroundManifold::G, 4, 0.02);
            assert_abs_diff_eq!(b, 2.0 * a, epsilon = 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn zeeman_clock_sublevel_value() {
        let s = build_cesium_d2();
        let g4 = lande_factor(1.3340, 3, 7, 4);
        let b = 0.01;
        let expect = -BOHR_MAGNETON_PER_GAUSS * g4 * b / HBAR;
        assert_abs_diff_eq!(s.zeeman_detuning(0, GroundManifold::G, 4, b), expect, epsilon = 1e-9);
    }

    #[test]
    fn zeeman_antisymmetry() {
        // (m, g_F) -> (-m, -g_F) with the excited term mirrored: m' = m+1 -> -(m+1)
        let (gg, ge, b) = (-0.25, 0.27, 0.013);
        for m in -3..=3 {
            let fwd = zeeman_detuning(m, gg, ge, b);
            let mirrored = BOHR_MAGNETON_PER_GAUSS * ((-m) as f64 * (-gg) - (-(m + 1)) as f64 * (-ge)) * b / HBAR;
            assert_abs_diff_eq!(fwd, mirrored, epsilon = 1e-9);
        }
    }
}
