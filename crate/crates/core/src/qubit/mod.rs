//! Polarization-qubit layer: dual-rail channel, simulated photodetection,
//! tomography and the classical fidelity benchmark for weak coherent inputs.

pub mod benchmark;
pub mod channel;
pub mod counts;
pub mod experiment;
pub mod state;
pub mod tomography;

pub use benchmark::{classical_benchmark, BenchmarkResult, EfficiencyConstraint};
pub use channel::{apply_channel, DualRailChannel};
pub use counts::{simulate_counts, CountSettings, TomographyRecord};
pub use experiment::{run_qubit_experiment, QubitExperiment, QubitReport};
pub use state::{fidelity, Basis, PolarizationState, Projection};
pub use tomography::{reconstruct, reconstruct_from_weights};
