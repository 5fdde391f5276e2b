use super::state::PolarizationState;
use crate::error::{Error, Result};
use nalgebra::Matrix2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Phenomenological dual-rail memory: each polarization rail is stored with
/// its own efficiency, and the recombination interferometer has finite
/// visibility and a residual phase on the V rail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualRailChannel {
    pub eta_h: f64,
    pub eta_v: f64,
    pub visibility: f64,
    /// Relative phase (rad) picked up by the V rail.
    pub phase: f64,
}

impl DualRailChannel {
    pub fn balanced(eta: f64, visibility: f64, phase: f64) -> Self {
        DualRailChannel {
            eta_h: eta,
            eta_v: eta,
            visibility,
            phase,
        }
    }

    pub fn ideal() -> Self {
        Self::balanced(1.0, 1.0, 0.0)
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (name, x) in [
            ("eta_h", self.eta_h),
            ("eta_v", self.eta_v),
            ("visibility", self.visibility),
        ] {
            if !(x.is_finite() && (0.0..=1.0).contains(&x)) {
                v.push(format!("channel.{name} must be in [0, 1]"));
            }
        }
        if !self.phase.is_finite() {
            v.push("channel.phase must be finite".into());
        }
        v
    }
}

/// Sends `input` through the channel. Returns the renormalized output state
/// and the transmitted fraction (trace before renormalization).
pub fn apply_channel(input: &PolarizationState, ch: &DualRailChannel) -> Result<(PolarizationState, f64)> {
    let v = ch.violations();
    if !v.is_empty() {
        return Err(Error::InvalidConfig(v.join("; ")));
    }
    let r = input.matrix();
    let hh = ch.eta_h * r[(0, 0)].re;
    let vv = ch.eta_v * r[(1, 1)].re;
    let hv = r[(0, 1)] * (ch.eta_h * ch.eta_v).sqrt() * ch.visibility * C64::from_polar(1.0, -ch.phase);
    let tr = hh + vv;
    if !(tr > 0.0) {
        return Err(Error::InvalidState("channel transmits nothing for this input".into()));
    }
    let out = Matrix2::new(C64::from(hh / tr), hv / tr, hv.conj() / tr, C64::from(vv / tr));
    Ok((PolarizationState::new(out)?, tr))
}
