use super::benchmark::{classical_benchmark, BenchmarkResult, EfficiencyConstraint};
use super::channel::{apply_channel, DualRailChannel};
use super::counts::{derive_seed, simulate_counts, CountSettings, TomographyRecord};
use super::state::{fidelity, PolarizationState, Projection};
use super::tomography::{fidelity_error, reconstruct};
use crate::error::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitExperiment {
    pub channel: DualRailChannel,
    pub counts: CountSettings,
    pub seed: u64,
    pub constraint: EfficiencyConstraint,
}

#[derive(Debug, Clone)]
pub struct StateOutcome {
    pub input: Projection,
    pub record: TomographyRecord,
    pub reconstructed: PolarizationState,
    pub fidelity: f64,
    pub fidelity_err: f64,
    /// Channel transmission for this input.
    pub efficiency: f64,
}

#[derive(Debug, Clone)]
pub struct QubitReport {
    pub states: Vec<StateOutcome>,
    pub average_fidelity: f64,
    /// Standard error of the mean fidelity.
    pub average_fidelity_err: f64,
    pub average_efficiency: f64,
    /// Classical bound at the same mean photon number and average memory
    /// efficiency; `None` when nbar = 0.
    pub benchmark: Option<BenchmarkResult>,
}

/// Channel -> counts -> reconstruction -> fidelity for the six canonical
/// inputs. Each input uses its own seed derived from the master seed.
pub fn run_qubit_experiment(exp: &QubitExperiment) -> Result<QubitReport> {
    let mut v = exp.channel.violations();
    v.extend(exp.counts.violations());
    if !v.is_empty() {
        return Err(Error::InvalidConfig(v.join("; ")));
    }
    let states: Result<Vec<StateOutcome>> = Projection::ALL
        .par_iter()
        .map(|&input| {
            let state = PolarizationState::of(input);
            let (_, efficiency) = apply_channel(&state, &exp.channel)?;
            let record = simulate_counts(&state, &exp.channel, &exp.counts, derive_seed(exp.seed, input.index() as u64))?;
            let reconstructed = reconstruct(&record)?;
            Ok(StateOutcome {
                input,
                fidelity: fidelity(&reconstructed, &input.ket())?,
                fidelity_err: fidelity_error(&record, input)?,
                efficiency,
                record,
                reconstructed,
            })
        })
        .collect();
    let states = states?;
    let n = states.len() as f64;
    let average_fidelity = states.iter().map(|s| s.fidelity).sum::<f64>() / n;
    let average_fidelity_err = states.iter().map(|s| s.fidelity_err * s.fidelity_err).sum::<f64>().sqrt() / n;
    let average_efficiency = states.iter().map(|s| s.efficiency).sum::<f64>() / n;
    let benchmark = if exp.counts.nbar > 0.0 && average_efficiency > 0.0 {
        Some(classical_benchmark(exp.counts.nbar, average_efficiency.min(1.0), exp.constraint)?)
    } else {
        None
    };
    Ok(QubitReport {
        states,
        average_fidelity,
        average_fidelity_err,
        average_efficiency,
        benchmark,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    /// Swept value (mean photon number, or storage time in s).
    pub x: f64,
    pub average_fidelity: f64,
    pub average_fidelity_err: f64,
    pub efficiency: f64,
    pub benchmark: f64,
}

fn sweep_point(x: f64, report: &QubitReport) -> SweepPoint {
    SweepPoint {
        x,
        average_fidelity: report.average_fidelity,
        average_fidelity_err: report.average_fidelity_err,
        efficiency: report.average_efficiency,
        benchmark: report.benchmark.map_or(f64::NAN, |b| b.bound),
    }
}

/// Average fidelity and benchmark as a function of the mean photon number.
pub fn nbar_sweep(exp: &QubitExperiment, nbars: &[f64]) -> Result<Vec<SweepPoint>> {
    nbars
        .iter()
        .enumerate()
        .map(|(i, &nbar)| {
            let e = QubitExperiment {
                counts: CountSettings { nbar, ..exp.counts },
                seed: derive_seed(exp.seed, 1000 + i as u64),
                ..*exp
            };
            Ok(sweep_point(nbar, &run_qubit_experiment(&e)?))
        })
        .collect()
}

/// Same as [`nbar_sweep`] over storage time: both rails are scaled by
/// `storage_factor(t)`.
pub fn storage_time_sweep<F>(exp: &QubitExperiment, times: &[f64], storage_factor: F) -> Result<Vec<SweepPoint>>
where
    F: Fn(f64) -> f64,
{
    times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let f = storage_factor(t);
            let ch = DualRailChannel {
                eta_h: exp.channel.eta_h * f,
                eta_v: exp.channel.eta_v * f,
                ..exp.channel
            };
            let e = QubitExperiment {
                channel: ch,
                seed: derive_seed(exp.seed, 2000 + i as u64),
                ..*exp
            };
            Ok(sweep_point(t, &run_qubit_experiment(&e)?))
        })
        .collect()
}
