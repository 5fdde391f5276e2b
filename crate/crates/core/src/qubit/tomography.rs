use super::counts::TomographyRecord;
use super::state::{stokes_matrix, Basis, PolarizationState, Projection};
use crate::error::{Error, Result};
use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64 as C64;

/// Stokes parameters S_i = (N+ - N-) / (N+ + N-) from projection weights
/// (counts or probabilities) indexed by [`Projection::index`], together with
/// the pair totals N+ + N-.
pub fn stokes_from_weights(w: &[f64; 6]) -> Result<([f64; 3], [f64; 3])> {
    let mut s = [0.0; 3];
    let mut n = [0.0; 3];
    for (k, b) in Basis::ALL.into_iter().enumerate() {
        let (p, m) = b.pair();
        let (np, nm) = (w[p.index()], w[m.index()]);
        if !(np >= 0.0 && nm >= 0.0) {
            return Err(Error::Tomography(format!("negative or invalid weight in basis {b:?}")));
        }
        let tot = np + nm;
        if !(tot > 0.0) {
            return Err(Error::Tomography(format!("no counts in basis {b:?}")));
        }
        s[k] = (np - nm) / tot;
        n[k] = tot;
    }
    Ok((s, n))
}

/// Closest physical state (Frobenius norm) to a Hermitian unit-trace
/// matrix: negative eigenvalues are set to zero and the deficit spread
/// evenly over the remaining ones.
pub fn physical_projection(m: &Matrix2<C64>) -> Result<PolarizationState> {
    let eig = m.symmetric_eigen();
    let mut lam: Vec<(f64, Vector2<C64>)> = (0..2)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors.column(i).into_owned()))
        .collect();
    lam.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut vals: Vec<f64> = lam.iter().map(|l| l.0).collect();
    let d = vals.len();
    let mut carry = 0.0;
    for i in (0..d).rev() {
        if vals[i] + carry / (i + 1) as f64 >= 0.0 {
            for v in vals.iter_mut().take(i + 1) {
                *v += carry / (i + 1) as f64;
            }
            break;
        }
        carry += vals[i];
        vals[i] = 0.0;
    }
    let mut rho = Matrix2::zeros();
    for (v, (_, k)) in vals.iter().zip(&lam) {
        rho += k * k.adjoint() * C64::from(*v);
    }
    // Exact hermiticity and trace after the floating-point rebuild.
    let rho = (rho + rho.adjoint()) * C64::from(0.5);
    let tr = rho.trace().re;
    PolarizationState::new(rho / C64::from(tr))
}

/// Linear inversion from the six projection weights followed by projection
/// onto the physical states when needed.
pub fn reconstruct_from_weights(w: &[f64; 6]) -> Result<PolarizationState> {
    let (s, _) = stokes_from_weights(w)?;
    let lin = stokes_matrix(s);
    let r2 = s.iter().map(|x| x * x).sum::<f64>();
    if r2 <= 1.0 {
        return PolarizationState::new(lin);
    }
    physical_projection(&lin)
}

pub fn reconstruct(record: &TomographyRecord) -> Result<PolarizationState> {
    reconstruct_from_weights(&record.totals().map(|c| c as f64))
}

/// Binomial standard error of the conditional fidelity to `target`,
/// propagated from Var(S_i) = (1 - S_i^2) / N_i through
/// F = (1 + s_target . S) / 2.
pub fn fidelity_error(record: &TomographyRecord, target: Projection) -> Result<f64> {
    let (s, n) = stokes_from_weights(&record.totals().map(|c| c as f64))?;
    let t = PolarizationState::of(target).stokes();
    let var: f64 = (0..3).map(|i| t[i] * t[i] * (1.0 - s[i] * s[i]).max(0.0) / n[i]).sum();
    Ok(0.5 * var.sqrt())
}
