//! Python bindings: medium and field setup, propagation and storage,
//! dephasing, the qubit layer and the CLI studies.

use eitmem::atomic::{build_cesium_d2, LevelScheme};
use eitmem::bloch::{FieldConfig, MediumConfig, Populations};
use eitmem::cli::{config::parse_config, output_files, run_study as run_cli_study, Study, StudyError};
use eitmem::constants::cesium;
use eitmem::decoherence::{self, CollectiveState, DephasingParams, StorageDecay};
use eitmem::propagation::{self, Numerics, PulseSpec, StorageOptions, SweepSetup};
use eitmem::qubit::counts::CountSettings;
use eitmem::qubit::{self, EfficiencyConstraint, Projection, QubitExperiment};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::collections::BTreeMap;

fn to_py(e: eitmem::Error) -> PyErr {
    match e {
        eitmem::Error::InvalidConfig(_) | eitmem::Error::InvalidState(_) | eitmem::Error::AngularMomentum(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn scheme() -> LevelScheme {
    build_cesium_d2()
}

#[derive(FromPyObject)]
enum PopulationArg {
    Name(String),
    Sublevel(i32),
    Weights(Vec<f64>),
}

fn populations(arg: Option<PopulationArg>) -> PyResult<Populations> {
    let p = match arg {
        None => Populations::equal(),
        Some(PopulationArg::Name(s)) if s == "equal" => Populations::equal(),
        Some(PopulationArg::Name(s)) => return Err(PyValueError::new_err(format!("unknown populations '{s}'"))),
        Some(PopulationArg::Sublevel(m)) if m.abs() <= 3 => Populations::single(m),
        Some(PopulationArg::Sublevel(m)) => return Err(PyValueError::new_err(format!("no sublevel m = {m}"))),
        Some(PopulationArg::Weights(w)) => {
            let arr: [f64; 7] = w
                .try_into()
                .map_err(|_| PyValueError::new_err("populations need 7 weights for m = -3..3"))?;
            Populations(arr)
        }
    };
    let v = p.violations();
    if v.is_empty() {
        Ok(p)
    } else {
        Err(PyValueError::new_err(v.join("; ")))
    }
}

/// Cold atomic cloud. Units follow the configuration files: cm, uK, mG/cm,
/// gamma0 in units of Gamma.
#[pyclass(name = "Medium", module = "eitmem_py", skip_from_py_object)]
#[derive(Clone)]
struct PyMedium {
    inner: MediumConfig,
}

#[pymethods]
impl PyMedium {
    #[new]
    #[pyo3(signature = (od, length_cm=2.5, temperature_uk=20.0, gradient_mg_per_cm=8.0, gamma0_over_gamma=1e-3, populations=None))]
    fn new(
        od: f64,
        length_cm: f64,
        temperature_uk: f64,
        gradient_mg_per_cm: f64,
        gamma0_over_gamma: f64,
        populations: Option<PopulationArg>,
    ) -> PyResult<Self> {
        let inner = MediumConfig {
            optical_depth: od,
            length: length_cm * 1e-2,
            temperature: temperature_uk * 1e-6,
            gradient: gradient_mg_per_cm * 1e-3,
            gamma0: gamma0_over_gamma * cesium::GAMMA,
            populations: self::populations(populations)?,
        };
        inner.validate().map_err(to_py)?;
        Ok(PyMedium { inner })
    }

    #[getter]
    fn od(&self) -> f64 {
        self.inner.optical_depth
    }

    #[getter]
    fn populations(&self) -> Vec<f64> {
        self.inner.populations.0.to_vec()
    }

    fn __repr__(&self) -> String {
        format!(
            "Medium(od={}, length_cm={}, gradient_mg_per_cm={})",
            self.inner.optical_depth,
            self.inner.length * 1e2,
            self.inner.gradient * 1e3
        )
    }
}

fn fields(control: f64, probe_detuning: f64, control_detuning: f64) -> FieldConfig {
    let g = cesium::GAMMA;
    FieldConfig {
        probe_detuning: probe_detuning * g,
        control_detuning: control_detuning * g,
        control_rabi: control * g,
        probe_rabi: 1.0,
    }
}

/// Power transmission |H|^2 at the given probe detunings (units of Gamma).
#[pyfunction]
#[pyo3(signature = (medium, detunings, control_rabi, control_detuning=0.0))]
fn transmission(
    medium: PyRef<'_, PyMedium>,
    detunings: Vec<f64>,
    control_rabi: f64,
    control_detuning: f64,
) -> PyResult<Vec<f64>> {
    let s = scheme();
    let f = fields(control_rabi, 0.0, control_detuning);
    let n = Numerics::default();
    let resp = propagation::MediumResponse::new(&f, &medium.inner, &s, &n).map_err(to_py)?;
    let ws: Vec<f64> = detunings.iter().map(|d| d * s.gamma).collect();
    Ok(resp.transfer(&ws).map_err(to_py)?.iter().map(|h| h.norm_sqr()).collect())
}

fn pulse(fwhm_us: f64, delay_over_fwhm: f64, n_t: usize) -> PyResult<PulseSpec> {
    PulseSpec::for_delay(fwhm_us * 1e-6, delay_over_fwhm * fwhm_us * 1e-6, n_t).map_err(to_py)
}

fn tuned(medium: &MediumConfig, p: &PulseSpec, delay: f64, o: &StorageOptions) -> PyResult<propagation::TunedControl> {
    propagation::tune_control(delay, &FieldConfig::resonant(0.0), medium, &scheme(), p, &o.numerics, o.carrier)
        .map_err(to_py)
}

/// Control Rabi frequency (units of Gamma) giving a group delay of
/// `delay_over_fwhm` pulse widths, with the probe on the transparency peak.
#[pyfunction]
#[pyo3(signature = (medium, fwhm_us=0.5, delay_over_fwhm=2.0, n_t=1024))]
fn tune_control(
    medium: PyRef<'_, PyMedium>,
    fwhm_us: f64,
    delay_over_fwhm: f64,
    n_t: usize,
) -> PyResult<BTreeMap<&'static str, f64>> {
    let p = pulse(fwhm_us, delay_over_fwhm, n_t)?;
    let t = tuned(&medium.inner, &p, delay_over_fwhm * fwhm_us * 1e-6, &StorageOptions::default())?;
    let g = cesium::GAMMA;
    Ok(BTreeMap::from([
        ("control_rabi", t.control_rabi / g),
        ("probe_detuning", t.fields.probe_detuning / g),
        ("delay_us", t.delay * 1e6),
    ]))
}

/// Storage and retrieval at the tuned operating point.
#[pyfunction]
#[pyo3(signature = (medium, fwhm_us=0.5, delay_over_fwhm=2.0, storage_time_us=0.0, n_t=1024))]
fn storage(
    medium: PyRef<'_, PyMedium>,
    fwhm_us: f64,
    delay_over_fwhm: f64,
    storage_time_us: f64,
    n_t: usize,
) -> PyResult<BTreeMap<&'static str, f64>> {
    let p = pulse(fwhm_us, delay_over_fwhm, n_t)?;
    let o = StorageOptions::default();
    let t = tuned(&medium.inner, &p, delay_over_fwhm * fwhm_us * 1e-6, &o)?;
    let r = propagation::storage_retrieval_efficiency(&p, &t.fields, &medium.inner, &scheme(), storage_time_us * 1e-6, &o)
        .map_err(to_py)?;
    Ok(BTreeMap::from([
        ("control_rabi", t.control_rabi / cesium::GAMMA),
        ("efficiency", r.efficiency),
        ("leakage", r.leakage),
        ("absorbed", r.absorbed()),
        ("storage_factor", r.storage_factor),
        ("overall", r.overall),
    ]))
}

/// Efficiency versus optical depth with the control retuned at each point.
/// Failed points come back with NaN efficiency and an `error` entry.
#[pyfunction]
#[pyo3(signature = (medium, ods, fwhm_us=0.5, delay_over_fwhm=2.0, n_t=1024))]
fn efficiency_vs_od<'py>(
    py: Python<'py>,
    medium: PyRef<'_, PyMedium>,
    ods: Vec<f64>,
    fwhm_us: f64,
    delay_over_fwhm: f64,
    n_t: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let p = pulse(fwhm_us, delay_over_fwhm, n_t)?;
    let s = scheme();
    let o = StorageOptions::default();
    let setup = SweepSetup {
        fields: &FieldConfig::resonant(0.0),
        medium: &medium.inner,
        scheme: &s,
        pulse: &p,
        target_delay: delay_over_fwhm * fwhm_us * 1e-6,
        options: &o,
    };
    let points = py.detach(|| propagation::efficiency_vs_od(&ods, &setup));
    points
        .iter()
        .map(|pt| {
            let d = PyDict::new(py);
            d.set_item("od", pt.optical_depth)?;
            d.set_item("control_rabi", pt.control_rabi / cesium::GAMMA)?;
            d.set_item("efficiency", pt.efficiency)?;
            d.set_item("leakage", pt.leakage)?;
            d.set_item("error", pt.error.clone())?;
            Ok(d)
        })
        .collect()
}

/// Transit, motional and magnetic (amplitude 1/e) dephasing times in us.
#[pyfunction]
#[pyo3(signature = (temperature_uk=20.0, beam_diameter_um=250.0, crossing_angle_deg=1.0, gradient_mg_per_cm=8.0, length_cm=2.5, populations=None))]
fn dephasing_times(
    temperature_uk: f64,
    beam_diameter_um: f64,
    crossing_angle_deg: f64,
    gradient_mg_per_cm: f64,
    length_cm: f64,
    populations: Option<PopulationArg>,
) -> PyResult<BTreeMap<&'static str, Option<f64>>> {
    let params = DephasingParams {
        beam_diameter: beam_diameter_um * 1e-6,
        crossing_angle: crossing_angle_deg.to_radians(),
        temperature: temperature_uk * 1e-6,
        mass: cesium::MASS,
        wavelength: 852e-9,
        gradient: gradient_mg_per_cm * 1e-3,
        length: length_cm * 1e-2,
    };
    let pops = self::populations(populations)?;
    let magnetic = CollectiveState::new(&pops, params.gradient, params.length, &scheme()).amplitude_decay_time();
    Ok(BTreeMap::from([
        ("transit_us", Some(decoherence::transit_time(&params).map_err(to_py)? * 1e6)),
        ("motional_us", decoherence::motional_dephasing_time(&params).map(|t| t * 1e6)),
        ("magnetic_us", magnetic.map(|t| t * 1e6)),
    ]))
}

/// (time_us, efficiency, band_low, band_high) rows for a propagation
/// efficiency `efficiency` at t = 0.
#[pyfunction]
#[pyo3(signature = (medium, times_us, efficiency, gradient_uncertainty_mg_per_cm=1.0))]
fn lifetime(
    medium: PyRef<'_, PyMedium>,
    times_us: Vec<f64>,
    efficiency: f64,
    gradient_uncertainty_mg_per_cm: f64,
) -> Vec<(f64, f64, f64, f64)> {
    let times: Vec<f64> = times_us.iter().map(|t| t * 1e-6).collect();
    decoherence::lifetime_curve(
        &times,
        efficiency,
        &medium.inner,
        &scheme(),
        gradient_uncertainty_mg_per_cm * 1e-3,
        &StorageDecay::default(),
    )
    .iter()
    .map(|p| (p.time * 1e6, p.efficiency, p.band_low, p.band_high))
    .collect()
}

fn constraint(name: &str) -> PyResult<EfficiencyConstraint> {
    match name {
        "non-vacuum" => Ok(EfficiencyConstraint::NonVacuum),
        "absolute" => Ok(EfficiencyConstraint::Absolute),
        _ => Err(PyValueError::new_err(format!("unknown constraint '{name}'"))),
    }
}

/// Best classical measure-and-prepare fidelity for a weak coherent input.
#[pyfunction]
#[pyo3(signature = (nbar, efficiency, constraint="non-vacuum"))]
fn classical_benchmark(nbar: f64, efficiency: f64, constraint: &str) -> PyResult<f64> {
    let c = self::constraint(constraint)?;
    Ok(qubit::classical_benchmark(nbar, efficiency, c).map_err(to_py)?.bound)
}

fn projection(label: &str) -> PyResult<Projection> {
    label.parse().map_err(to_py)
}

#[pyclass(name = "PolarizationState", module = "eitmem_py", skip_from_py_object)]
#[derive(Clone)]
struct PyState {
    inner: qubit::PolarizationState,
}

#[pymethods]
impl PyState {
    /// State with Stokes vector (S1, S2, S3), |S| <= 1.
    #[new]
    fn new(s1: f64, s2: f64, s3: f64) -> PyResult<Self> {
        Ok(PyState {
            inner: qubit::PolarizationState::from_stokes([s1, s2, s3]).map_err(to_py)?,
        })
    }

    /// One of the six canonical states H, V, D, A, R, L.
    #[staticmethod]
    fn of(label: &str) -> PyResult<Self> {
        Ok(PyState {
            inner: qubit::PolarizationState::of(projection(label)?),
        })
    }

    fn stokes(&self) -> [f64; 3] {
        self.inner.stokes()
    }

    /// Density matrix as nested lists of complex numbers.
    fn matrix(&self) -> Vec<Vec<(f64, f64)>> {
        let m = self.inner.matrix();
        (0..2).map(|i| (0..2).map(|j| (m[(i, j)].re, m[(i, j)].im)).collect()).collect()
    }

    fn probability(&self, label: &str) -> PyResult<f64> {
        Ok(self.inner.probability(projection(label)?))
    }

    fn purity(&self) -> f64 {
        self.inner.purity()
    }

    /// Fidelity with one of the six canonical states.
    fn fidelity(&self, label: &str) -> PyResult<f64> {
        qubit::fidelity(&self.inner, &projection(label)?.ket()).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        let s = self.inner.stokes();
        format!("PolarizationState(s1={}, s2={}, s3={})", s[0], s[1], s[2])
    }
}

#[pyclass(name = "DualRailChannel", module = "eitmem_py", skip_from_py_object)]
#[derive(Clone)]
struct PyChannel {
    inner: qubit::DualRailChannel,
}

#[pymethods]
impl PyChannel {
    #[new]
    #[pyo3(signature = (eta_h, eta_v, visibility=1.0, phase=0.0))]
    fn new(eta_h: f64, eta_v: f64, visibility: f64, phase: f64) -> PyResult<Self> {
        let inner = qubit::DualRailChannel {
            eta_h,
            eta_v,
            visibility,
            phase,
        };
        let v = inner.violations();
        if !v.is_empty() {
            return Err(PyValueError::new_err(v.join("; ")));
        }
        Ok(PyChannel { inner })
    }

    /// Output state and transmitted fraction.
    fn apply(&self, state: PyRef<'_, PyState>) -> PyResult<(PyState, f64)> {
        let (out, tr) = qubit::apply_channel(&state.inner, &self.inner).map_err(to_py)?;
        Ok((PyState { inner: out }, tr))
    }
}

/// Simulated tomography of the six canonical inputs through a balanced
/// dual-rail memory.
#[pyfunction]
#[pyo3(signature = (efficiency=0.685, visibility=0.99, phase=0.0, nbar=0.5, windows=100_000, background=5e-4, detection_efficiency=0.5, seed=7))]
#[allow(clippy::too_many_arguments)]
fn qubit_experiment<'py>(
    py: Python<'py>,
    efficiency: f64,
    visibility: f64,
    phase: f64,
    nbar: f64,
    windows: usize,
    background: f64,
    detection_efficiency: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let exp = QubitExperiment {
        channel: qubit::DualRailChannel::balanced(efficiency, visibility, phase),
        counts: CountSettings {
            nbar,
            windows,
            background,
            detection_efficiency,
        },
        seed,
        constraint: EfficiencyConstraint::NonVacuum,
    };
    let rep = py.detach(|| qubit::run_qubit_experiment(&exp)).map_err(to_py)?;
    let d = PyDict::new(py);
    let per: BTreeMap<&str, f64> = rep.states.iter().map(|s| (s.input.label(), s.fidelity)).collect();
    d.set_item("fidelities", per)?;
    d.set_item("average_fidelity", rep.average_fidelity)?;
    d.set_item("average_fidelity_err", rep.average_fidelity_err)?;
    d.set_item("benchmark", rep.benchmark.map(|b| b.bound))?;
    Ok(d)
}

/// Runs a CLI study on configuration text and returns every output file
/// as {name: contents}. Nothing is written to disk.
#[pyfunction]
#[pyo3(signature = (study, config, seed=None, plot=true))]
fn run_study(py: Python<'_>, study: &str, config: &str, seed: Option<u64>, plot: bool) -> PyResult<BTreeMap<String, String>> {
    let st = Study::parse(study).ok_or_else(|| PyValueError::new_err(format!("unknown study '{study}'")))?;
    let cfg = parse_config(config).map_err(|e| PyValueError::new_err(e.join("; ")))?;
    let out = py.detach(|| run_cli_study(st, &cfg, seed)).map_err(|e| match e {
        StudyError::Config(v) => PyValueError::new_err(v.join("; ")),
        StudyError::Numerical(m) => PyRuntimeError::new_err(m),
    })?;
    Ok(output_files(st, &out, plot).into_iter().collect())
}

#[pymodule]
fn eitmem_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("GAMMA", cesium::GAMMA)?;
    m.add_class::<PyMedium>()?;
    m.add_class::<PyState>()?;
    m.add_class::<PyChannel>()?;
    m.add_function(wrap_pyfunction!(transmission, m)?)?;
    m.add_function(wrap_pyfunction!(tune_control, m)?)?;
    m.add_function(wrap_pyfunction!(storage, m)?)?;
    m.add_function(wrap_pyfunction!(efficiency_vs_od, m)?)?;
    m.add_function(wrap_pyfunction!(dephasing_times, m)?)?;
    m.add_function(wrap_pyfunction!(lifetime, m)?)?;
    m.add_function(wrap_pyfunction!(classical_benchmark, m)?)?;
    m.add_function(wrap_pyfunction!(qubit_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(run_study, m)?)?;
    Ok(())
}
