use crate::error::{Error, Result};
use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

/// Tolerance on trace, hermiticity and eigenvalue positivity.
pub const STATE_TOLERANCE: f64 = 1e-10;

/// The six tomography projections; also the canonical input states.
/// |D> = (|H> + |V>)/sqrt2, |A> = (|H> - |V>)/sqrt2,
/// |R> = (|H> - i|V>)/sqrt2, |L> = (|H> + i|V>)/sqrt2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Projection {
    H,
    V,
    D,
    A,
    R,
    L,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    HV,
    DA,
    RL,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::HV, Basis::DA, Basis::RL];

    /// (positive, negative) projection pair measured in this basis.
    pub fn pair(self) -> (Projection, Projection) {
        match self {
            Basis::HV => (Projection::H, Projection::V),
            Basis::DA => (Projection::D, Projection::A),
            Basis::RL => (Projection::R, Projection::L),
        }
    }
}

impl Projection {
    pub const ALL: [Projection; 6] = [
        Projection::H,
        Projection::V,
        Projection::D,
        Projection::A,
        Projection::R,
        Projection::L,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn basis(self) -> Basis {
        match self {
            Projection::H | Projection::V => Basis::HV,
            Projection::D | Projection::A => Basis::DA,
            Projection::R | Projection::L => Basis::RL,
        }
    }

    /// Normalized ket in the {H, V} basis.
    pub fn ket(self) -> Vector2<C64> {
        let s = FRAC_1_SQRT_2;
        let (a, b) = match self {
            Projection::H => (C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
            Projection::V => (C64::new(0.0, 0.0), C64::new(1.0, 0.0)),
            Projection::D => (C64::new(s, 0.0), C64::new(s, 0.0)),
            Projection::A => (C64::new(s, 0.0), C64::new(-s, 0.0)),
            Projection::R => (C64::new(s, 0.0), C64::new(0.0, -s)),
            Projection::L => (C64::new(s, 0.0), C64::new(0.0, s)),
        };
        Vector2::new(a, b)
    }

    pub fn label(self) -> &'static str {
        match self {
            Projection::H => "H",
            Projection::V => "V",
            Projection::D => "D",
            Projection::A => "A",
            Projection::R => "R",
            Projection::L => "L",
        }
    }
}

impl fmt::Display for Projection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Projection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Projection::ALL
            .into_iter()
            .find(|p| p.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidState(format!("unknown polarization '{s}' (expected H, V, D, A, R or L)")))
    }
}

/// Polarization density matrix in the {H, V} basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationState {
    rho: Matrix2<C64>,
}

impl PolarizationState {
    /// Checks the density-matrix invariants.
    pub fn new(rho: Matrix2<C64>) -> Result<Self> {
        let herm = (rho - rho.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if herm > STATE_TOLERANCE {
            return Err(Error::InvalidState(format!("not Hermitian (max deviation {herm:.2e})")));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > STATE_TOLERANCE || tr.im.abs() > STATE_TOLERANCE {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min = eigenvalues(&rho)[0];
        if min < -STATE_TOLERANCE {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(PolarizationState { rho })
    }

    pub fn pure(ket: Vector2<C64>) -> Result<Self> {
        let n = ket.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidState("zero or non-finite ket".into()));
        }
        let k = ket / C64::from(n);
        Ok(PolarizationState { rho: k * k.adjoint() })
    }

    pub fn of(p: Projection) -> Self {
        let k = p.ket();
        PolarizationState { rho: k * k.adjoint() }
    }

    pub fn maximally_mixed() -> Self {
        PolarizationState {
            rho: Matrix2::identity() * C64::from(0.5),
        }
    }

    /// State with Bloch (Stokes) vector `s`, |s| <= 1.
    /// rho = (I + s1 sz + s2 sx - s3 sy) / 2 for the ket conventions of
    /// [`Projection`].
    pub fn from_stokes(s: [f64; 3]) -> Result<Self> {
        let r = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
        if !r.is_finite() || r > 1.0 + STATE_TOLERANCE {
            return Err(Error::InvalidState(format!("Stokes vector length {r} exceeds 1")));
        }
        Ok(PolarizationState {
            rho: stokes_matrix(s),
        })
    }

    pub fn matrix(&self) -> &Matrix2<C64> {
        &self.rho
    }

    /// (S1, S2, S3) = (<H>-<V>, <D>-<A>, <R>-<L>).
    pub fn stokes(&self) -> [f64; 3] {
        let hv = self.rho[(0, 1)];
        [
            self.rho[(0, 0)].re - self.rho[(1, 1)].re,
            2.0 * hv.re,
            2.0 * hv.im,
        ]
    }

    /// <p|rho|p>.
    pub fn probability(&self, p: Projection) -> f64 {
        expectation(&self.rho, &p.ket())
    }

    pub fn purity(&self) -> f64 {
        (self.rho * self.rho).trace().re
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        eigenvalues(&self.rho)
    }

    /// Row-major real/imaginary parts: re00, im00, re01, im01, re10, im10, re11, im11.
    pub fn to_row(&self) -> [f64; 8] {
        let mut out = [0.0; 8];
        for (k, (i, j)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
            out[2 * k] = self.rho[(i, j)].re;
            out[2 * k + 1] = self.rho[(i, j)].im;
        }
        out
    }

    pub fn from_row(row: &[f64; 8]) -> Result<Self> {
        let c = |k: usize| C64::new(row[2 * k], row[2 * k + 1]);
        Self::new(Matrix2::new(c(0), c(1), c(2), c(3)))
    }
}

pub(crate) fn stokes_matrix(s: [f64; 3]) -> Matrix2<C64> {
    let hv = C64::new(s[1], s[2]) * 0.5;
    Matrix2::new(
        C64::from(0.5 * (1.0 + s[0])),
        hv,
        hv.conj(),
        C64::from(0.5 * (1.0 - s[0])),
    )
}

pub(crate) fn expectation(rho: &Matrix2<C64>, ket: &Vector2<C64>) -> f64 {
    (ket.adjoint() * rho * ket)[(0, 0)].re
}

pub(crate) fn eigenvalues(rho: &Matrix2<C64>) -> [f64; 2] {
    let e = rho.symmetric_eigenvalues();
    let (a, b) = (e[0], e[1]);
    if a <= b {
        [a, b]
    } else {
        [b, a]
    }
}

/// Conditional fidelity <psi|rho|psi> against a pure target.
pub fn fidelity(rho: &PolarizationState, psi: &Vector2<C64>) -> Result<f64> {
    let n = psi.norm();
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidState(format!("target state norm {n} is not 1")));
    }
    Ok(expectation(rho.matrix(), psi).clamp(0.0, 1.0))
}
