//! Physical constants (SI, CODATA 2018) and cesium D2-line data.
//!
//! Cesium values follow the standard D-line reference tables; the hyperfine
//! intervals are the measured zero-field splittings of 6P_{3/2}.

use std::f64::consts::PI;

pub const HBAR: f64 = 1.054_571_817e-34;
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Bohr magneton in J/T.
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
/// Bohr magneton in J/G.
pub const BOHR_MAGNETON_PER_GAUSS: f64 = BOHR_MAGNETON * 1e-4;

pub mod cesium {
    use super::PI;

    /// Nuclear spin I = 7/2, stored doubled.
    pub const TWO_I: i32 = 7;
    pub const MASS: f64 = 2.206_946_50e-25;
    pub const D2_WAVELENGTH: f64 = 852.347_275_82e-9;
    /// Natural linewidth of 6P_{3/2} (rad/s).
    pub const GAMMA: f64 = 2.0 * PI * 5.234e6;
    pub const G_J_GROUND: f64 = 2.002_540_32;
    pub const G_J_EXCITED: f64 = 1.3340;

    /// Excited hyperfine energies relative to F' = 4 (Hz), indexed by F' = 2..=5.
    pub const EXCITED_OFFSETS_HZ: [(i32, f64); 4] = [
        (2, -(201.2871e6 + 151.2247e6)),
        (3, -201.2871e6),
        (4, 0.0),
        (5, 251.0916e6),
    ];
}
