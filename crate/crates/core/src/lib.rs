//! Simulation of a multi-level EIT quantum memory in cold cesium: linear
//! susceptibility of the full D2 hyperfine/Zeeman structure, slow-light
//! propagation, storage-and-retrieval efficiency, dephasing-limited lifetime,
//! and a polarization-qubit layer with tomography and classical benchmark.

pub mod angular;
pub mod atomic;
pub mod bloch;
pub mod cli;
pub mod constants;
pub mod decoherence;
pub mod error;
pub mod propagation;
pub mod quadrature;
pub mod qubit;
pub mod spectrum;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
