use super::channel::{apply_channel, DualRailChannel};
use super::state::{PolarizationState, Projection};
use crate::error::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Detection events for the six polarization projections.
#[derive(Debug, Clone, PartialEq)]
pub struct TomographyRecord {
    /// Counts per detection window, indexed by [`Projection::index`]. All
    /// projections have the same number of windows.
    pub windows: [Vec<u32>; 6],
    pub nbar: f64,
    pub background: f64,
}

impl TomographyRecord {
    pub fn windows_per_projection(&self) -> usize {
        self.windows[0].len()
    }

    pub fn total(&self, p: Projection) -> u64 {
        self.windows[p.index()].iter().map(|&c| c as u64).sum()
    }

    pub fn totals(&self) -> [u64; 6] {
        Projection::ALL.map(|p| self.total(p))
    }

    /// CSV with columns basis, window_index, counts; `basis` holds the
    /// projection label.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("basis,window_index,counts\n");
        for p in Projection::ALL {
            for (i, c) in self.windows[p.index()].iter().enumerate() {
                let _ = writeln!(s, "{p},{i},{c}");
            }
        }
        s
    }

    /// Inverse of [`to_csv`](Self::to_csv). Rows may come in any order, but
    /// every projection must cover the same contiguous window indices.
    pub fn from_csv(text: &str, nbar: f64, background: f64) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Tomography("empty count file".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols != ["basis", "window_index", "counts"] {
            return Err(Error::Tomography(format!("unexpected header '{header}'")));
        }
        let mut per: [BTreeMap<usize, u32>; 6] = Default::default();
        for (n, line) in lines.enumerate() {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 3 {
                return Err(Error::Tomography(format!("row {}: expected 3 fields", n + 2)));
            }
            let p: Projection = f[0]
                .parse()
                .map_err(|_| Error::Tomography(format!("row {}: unknown projection '{}'", n + 2, f[0])))?;
            let i: usize = f[1]
                .parse()
                .map_err(|_| Error::Tomography(format!("row {}: bad window index '{}'", n + 2, f[1])))?;
            let c: u32 = f[2]
                .parse()
                .map_err(|_| Error::Tomography(format!("row {}: bad count '{}'", n + 2, f[2])))?;
            if per[p.index()].insert(i, c).is_some() {
                return Err(Error::Tomography(format!("row {}: duplicate window {i} for {p}", n + 2)));
            }
        }
        let n = per[0].len();
        let mut windows: [Vec<u32>; 6] = Default::default();
        for p in Projection::ALL {
            let m = &per[p.index()];
            if m.len() != n || m.keys().next_back().is_some_and(|&k| k + 1 != n) {
                return Err(Error::Tomography(format!("projection {p} does not cover windows 0..{n}")));
            }
            windows[p.index()] = m.values().copied().collect();
        }
        Ok(TomographyRecord {
            windows,
            nbar,
            background,
        })
    }
}

/// Settings for simulated photodetection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountSettings {
    pub nbar: f64,
    pub windows: usize,
    /// Mean background events per window, independent of the projection.
    pub background: f64,
    pub detection_efficiency: f64,
}

impl CountSettings {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.nbar.is_finite() && self.nbar >= 0.0) {
            v.push("qubit.nbar must be >= 0".into());
        }
        if self.windows == 0 {
            v.push("qubit.windows must be > 0".into());
        }
        if !(self.background.is_finite() && self.background >= 0.0) {
            v.push("qubit.background must be >= 0".into());
        }
        if !(self.detection_efficiency.is_finite() && (0.0..=1.0).contains(&self.detection_efficiency)) {
            v.push("qubit.detection_efficiency must be in [0, 1]".into());
        }
        v
    }
}

/// SplitMix64 step, used to derive independent stream seeds.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mean counts per window for each projection.
pub fn mean_counts(state: &PolarizationState, ch: &DualRailChannel, settings: &CountSettings) -> Result<[f64; 6]> {
    let (out, eta) = apply_channel(state, ch)?;
    let signal = settings.nbar * eta * settings.detection_efficiency;
    Ok(Projection::ALL.map(|p| signal * out.probability(p).max(0.0) + settings.background))
}

/// Poisson counts for every window and projection. Each projection draws
/// from its own ChaCha8 stream keyed by `seed`, so the record does not depend
/// on evaluation order.
pub fn simulate_counts(
    state: &PolarizationState,
    ch: &DualRailChannel,
    settings: &CountSettings,
    seed: u64,
) -> Result<TomographyRecord> {
    let v = settings.violations();
    if !v.is_empty() {
        return Err(Error::InvalidConfig(v.join("; ")));
    }
    let means = mean_counts(state, ch, settings)?;
    let mut windows: [Vec<u32>; 6] = Default::default();
    for p in Projection::ALL {
        let mean = means[p.index()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(p.index() as u64);
        windows[p.index()] = if mean > 0.0 {
            let d = Poisson::new(mean).map_err(|e| Error::InvalidConfig(format!("Poisson mean {mean}: {e}")))?;
            (0..settings.windows).map(|_| d.sample(&mut rng) as u32).collect()
        } else {
            vec![0; settings.windows]
        };
    }
    Ok(TomographyRecord {
        windows,
        nbar: settings.nbar,
        background: settings.background,
    })
}
