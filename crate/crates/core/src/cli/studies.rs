//! Study runners. Each one reads its keys, reports every configuration
//! problem at once, and only then computes. Nothing touches the disk here.

use super::config::{self, ControlSetting, FlatConfig, Reader, Study};
use super::plot::{line_plot, Series};
use crate::atomic::{build_cesium_d2, LevelScheme};
use crate::bloch::{FieldConfig, MediumConfig};
use crate::decoherence::{lifetime_curve, CollectiveState, StorageDecay};
use crate::error::Error;
use crate::propagation::{
    efficiency_vs_od, place_carrier, storage_retrieval_efficiency, tune_control, Carrier, MediumResponse,
    PulseSpec, StorageOptions, StorageResult, SweepSetup,
};
use crate::qubit::benchmark::classical_benchmark;
use crate::qubit::counts::derive_seed;
use crate::qubit::experiment::{nbar_sweep, storage_time_sweep, SweepPoint};
use crate::qubit::{run_qubit_experiment, DualRailChannel, QubitExperiment};
use crate::spectrum::linear_grid;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub enum StudyError {
    Config(Vec<String>),
    Numerical(String),
}

impl From<Error> for StudyError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(m) => StudyError::Config(vec![m]),
            other => StudyError::Numerical(other.to_string()),
        }
    }
}

/// Everything a study produces, still in memory.
#[derive(Debug, Clone)]
pub struct StudyOutput {
    pub results_csv: String,
    /// Additional (file name, contents) pairs.
    pub extra_files: Vec<(String, String)>,
    pub plot_svg: String,
    pub summary: Value,
    pub resolved: BTreeMap<String, Value>,
    pub seed: u64,
}

/// Shortest round-trip formatting; stable across runs.
fn num(x: f64) -> String {
    format!("{x}")
}

pub fn run_study(study: Study, cfg: &FlatConfig, seed_override: Option<u64>) -> Result<StudyOutput, StudyError> {
    let scheme = build_cesium_d2();
    let mut r = Reader::new(cfg);
    let seed = match seed_override {
        Some(s) => s,
        None => r.u64_or("seed", 0),
    };
    let mut out = match study {
        Study::Spectrum => spectrum(&mut r, &scheme)?,
        Study::Storage => storage(&mut r, &scheme)?,
        Study::SweepOd => sweep_od(&mut r, &scheme)?,
        Study::Lifetime => lifetime(&mut r, &scheme)?,
        Study::Qubit => qubit(&mut r, &scheme, seed)?,
        Study::Benchmark => benchmark(&mut r)?,
    };
    out.seed = seed;
    Ok(out)
}

/// A study's compute step, deferred until validation has passed.
type Compute<'a> = Box<dyn FnOnce() -> Result<StudyOutput, StudyError> + 'a>;

fn validated<'a>(r: &mut Reader, compute: Compute<'a>) -> Result<StudyOutput, StudyError> {
    if !r.errors.is_empty() {
        return Err(StudyError::Config(std::mem::take(&mut r.errors)));
    }
    let resolved = r.resolved().clone();
    let mut out = compute()?;
    out.resolved = resolved;
    Ok(out)
}

fn empty_output(results_csv: String, plot_svg: String, summary: Value) -> StudyOutput {
    StudyOutput {
        results_csv,
        extra_files: Vec::new(),
        plot_svg,
        summary,
        resolved: BTreeMap::new(),
        seed: 0,
    }
}

/// Settings shared by the studies that propagate a pulse through the memory.
struct Memory {
    medium: MediumConfig,
    fields: FieldConfig,
    carrier: Carrier,
    control: ControlSetting,
    fwhm: f64,
    n_t: usize,
    options: StorageOptions,
}

fn read_memory(r: &mut Reader, scheme: &LevelScheme, with_od: bool) -> Option<Memory> {
    let medium = config::medium(r, scheme, with_od);
    let fs = config::fields(r, scheme, true);
    let fwhm = config::pulse(r);
    let control = config::control(r, scheme, fwhm);
    let n_t = config::n_time(r);
    let numerics = config::numerics(r);
    let cutoff = r.f64_or("storage.cutoff_over_fwhm", 1.0);
    if !(cutoff.is_finite() && cutoff >= 0.0) {
        r.errors.push("storage.cutoff_over_fwhm must be >= 0".into());
    }
    let decay = config::decay(r, medium.as_ref());
    let fs = fs?;
    Some(Memory {
        medium: medium?,
        fields: fs.fields,
        carrier: fs.carrier,
        control: control?,
        fwhm: fwhm?,
        n_t,
        options: StorageOptions {
            cutoff_after_peak: cutoff,
            carrier: fs.carrier,
            numerics,
            decay,
        },
    })
}

/// Largest delay the grid has to hold when the control is fixed.
const MAX_FIXED_DELAY_FWHM: f64 = 20.0;

struct Operating {
    fields: FieldConfig,
    pulse: PulseSpec,
    tuned: bool,
}

fn operating_point(m: &Memory, scheme: &LevelScheme) -> Result<Operating, StudyError> {
    match m.control {
        ControlSetting::Delay(target) => {
            let pulse = PulseSpec::for_delay(m.fwhm, target, m.n_t)?;
            let t = tune_control(target, &m.fields, &m.medium, scheme, &pulse, &m.options.numerics, m.carrier)?;
            Ok(Operating {
                fields: t.fields,
                pulse,
                tuned: true,
            })
        }
        ControlSetting::Fixed(rabi) => {
            let estimate = if rabi > 0.0 {
                m.medium.optical_depth * scheme.gamma / (rabi * rabi)
            } else {
                f64::INFINITY
            };
            let pulse = PulseSpec::for_delay(m.fwhm, estimate.min(MAX_FIXED_DELAY_FWHM * m.fwhm), m.n_t)?;
            let f = place_carrier(m.carrier, &m.fields.with_control(rabi), &m.medium, scheme, &m.options.numerics)?;
            Ok(Operating {
                fields: f,
                pulse,
                tuned: false,
            })
        }
    }
}

fn spectrum(r: &mut Reader, scheme: &LevelScheme) -> Result<StudyOutput, StudyError> {
    let medium = config::medium(r, scheme, true);
    let fs = config::fields(r, scheme, false);
    let tuned = r.has("pulse.delay_over_fwhm");
    let fwhm = if tuned { config::pulse(r) } else { None };
    let control = config::control(r, scheme, fwhm);
    let n_t = if tuned { config::n_time(r) } else { 0 };
    let numerics = config::numerics(r);
    let lo = r.f64_or("spectrum.detuning_min_over_Gamma", -80.0);
    let hi = r.f64_or("spectrum.detuning_max_over_Gamma", 60.0);
    let points = r.u64_or("spectrum.points", 2801) as usize;
    if !(hi > lo) {
        r.errors.push("spectrum.detuning_max_over_Gamma must exceed spectrum.detuning_min_over_Gamma".into());
    }
    if points < 2 {
        r.errors.push("spectrum.points must be >= 2".into());
    }
    let compute: Compute = Box::new(move || {
        let medium = medium.unwrap();
        let fs = fs.unwrap();
        let m = Memory {
            medium,
            fields: fs.fields,
            carrier: fs.carrier,
            control: control.unwrap(),
            fwhm: fwhm.unwrap_or(1e-6),
            n_t: n_t.max(16),
            options: StorageOptions {
                numerics,
                carrier: fs.carrier,
                ..StorageOptions::default()
            },
        };
        let rabi = match m.control {
            ControlSetting::Fixed(x) => x,
            ControlSetting::Delay(_) => operating_point(&m, scheme)?.fields.control_rabi,
        };
        let f = FieldConfig {
            probe_detuning: 0.0,
            ..m.fields.with_control(rabi)
        };
        let resp = MediumResponse::new(&f, &m.medium, scheme, &numerics)?;
        let g = scheme.gamma;
        let det = linear_grid(0.5 * (lo + hi), hi - lo, points);
        let omegas: Vec<f64> = det.iter().map(|d| d * g).collect();
        let t: Vec<f64> = resp.transfer(&omegas)?.iter().map(|h| h.norm_sqr()).collect();
        let peak_at = resp.transparency_peak(rabi, g)?;
        let peak = resp.transfer(&[peak_at])?[0].norm_sqr();
        let off = MediumResponse::new(&f.with_control(0.0), &m.medium, scheme, &numerics)?;
        let resonant_off = off.transfer(&[0.0])?[0].norm_sqr();

        let mut csv = String::from("detuning_over_Gamma,transmission\n");
        for (d, t) in det.iter().zip(&t) {
            let _ = writeln!(csv, "{},{}", num(*d), num(*t));
        }
        let plot = line_plot(
            "Probe transmission",
            "probe detuning / Gamma",
            "transmission",
            &[Series::line("T", det.iter().copied().zip(t.iter().copied()).collect())],
        );
        let summary = json!({
            "control_rabi_over_Gamma": rabi / g,
            "eit_peak_detuning_over_Gamma": peak_at / g,
            "eit_peak_transmission": peak,
            "control_off_resonant_transmission": resonant_off,
        });
        Ok(empty_output(csv, plot, summary))
    });
    validated(r, compute)
}

fn storage_summary(res: &StorageResult, fields: &FieldConfig, tuned: bool, g: f64) -> Value {
    json!({
        "control_rabi_over_Gamma": fields.control_rabi / g,
        "control_tuned": tuned,
        "probe_detuning_over_Gamma": fields.probe_detuning / g,
        "cutoff_time_us": res.cutoff_time * 1e6,
        "efficiency": res.efficiency,
        "leakage": res.leakage,
        "absorbed": res.absorbed(),
        "storage_time_us": res.storage_time * 1e6,
        "storage_factor": res.storage_factor,
        "overall_efficiency": res.overall,
    })
}

fn storage(r: &mut Reader, scheme: &LevelScheme) -> Result<StudyOutput, StudyError> {
    let mem = read_memory(r, scheme, true);
    let t_s = r.f64_req("storage.time_us").map(|x| x * 1e-6);
    if t_s.is_some_and(|t| t < 0.0) {
        r.errors.push("storage.time_us must be >= 0".into());
    }
    let compute: Compute = Box::new(move || {
        let m = mem.unwrap();
        let op = operating_point(&m, scheme)?;
        let res = storage_retrieval_efficiency(&op.pulse, &op.fields, &m.medium, scheme, t_s.unwrap(), &m.options)?;
        let peak = res.input.iter().map(|e| e.norm_sqr()).fold(0.0, f64::max);
        let mut csv = String::from("time_us,input_intensity,output_intensity\n");
        let mut sin = Vec::new();
        let mut sout = Vec::new();
        for ((t, a), b) in res.times.iter().zip(&res.input).zip(&res.output) {
            let (ia, ib) = (a.norm_sqr() / peak, b.norm_sqr() / peak);
            let _ = writeln!(csv, "{},{},{}", num(t * 1e6), num(ia), num(ib));
            sin.push((t * 1e6, ia));
            sout.push((t * 1e6, ib));
        }
        let plot = line_plot(
            "Slow-light propagation",
            "time (us)",
            "intensity / input peak",
            &[Series::line("input", sin), Series::line("output", sout)],
        );
        Ok(empty_output(csv, plot, storage_summary(&res, &op.fields, op.tuned, scheme.gamma)))
    });
    validated(r, compute)
}

fn sweep_od(r: &mut Reader, scheme: &LevelScheme) -> Result<StudyOutput, StudyError> {
    let mem = read_memory(r, scheme, false);
    let ods = r.list_req("sweep.od_list");
    if let Some(ods) = &ods {
        config::check_list(r, "sweep.od_list", ods, |x| x > 0.0, "> 0");
    }
    if let Some(m) = &mem {
        if matches!(m.control, ControlSetting::Fixed(_)) {
            r.errors.push("sweep-od retunes the control at every OD: set pulse.delay_over_fwhm instead of fields.control_rabi_over_Gamma".into());
        }
    }
    let compute: Compute = Box::new(move || {
        let m = mem.unwrap();
        let ControlSetting::Delay(target) = m.control else { unreachable!() };
        let pulse = PulseSpec::for_delay(m.fwhm, target, m.n_t)?;
        let setup = SweepSetup {
            fields: &m.fields,
            medium: &m.medium,
            scheme,
            pulse: &pulse,
            target_delay: target,
            options: &m.options,
        };
        let pts = efficiency_vs_od(&ods.unwrap(), &setup);
        if pts.iter().all(|p| p.error.is_some()) {
            return Err(StudyError::Numerical(format!(
                "every sweep point failed; first error: {}",
                pts[0].error.as_deref().unwrap_or("")
            )));
        }
        let g = scheme.gamma;
        let mut csv = String::from("od,omega_c_over_Gamma,efficiency,leakage\n");
        for p in &pts {
            let _ = writeln!(
                csv,
                "{},{},{},{}",
                num(p.optical_depth),
                num(p.control_rabi / g),
                num(p.efficiency),
                num(p.leakage)
            );
        }
        let best = pts
            .iter()
            .filter(|p| p.error.is_none())
            .max_by(|a, b| a.efficiency.total_cmp(&b.efficiency))
            .unwrap();
        let failures: Vec<Value> = pts
            .iter()
            .filter_map(|p| p.error.as_ref().map(|e| json!({"od": p.optical_depth, "error": e})))
            .collect();
        let plot = line_plot(
            "Storage efficiency versus optical depth",
            "optical depth",
            "efficiency",
            &[Series::line("efficiency", pts.iter().map(|p| (p.optical_depth, p.efficiency)).collect())],
        );
        let summary = json!({
            "peak_od": best.optical_depth,
            "peak_efficiency": best.efficiency,
            "failed_points": failures,
        });
        Ok(empty_output(csv, plot, summary))
    });
    validated(r, compute)
}

fn lifetime(r: &mut Reader, scheme: &LevelScheme) -> Result<StudyOutput, StudyError> {
    let mem = read_memory(r, scheme, true);
    let times = r.list_req("lifetime.times_us");
    if let Some(ts) = &times {
        config::check_list(r, "lifetime.times_us", ts, |x| x >= 0.0, ">= 0");
    }
    let du = r
        .f64_check("lifetime.gradient_uncertainty_mG_per_cm", |x| x >= 0.0, ">= 0")
        .map(|x| x * 1e-3);
    let compute: Compute = Box::new(move || {
        let m = mem.unwrap();
        let op = operating_point(&m, scheme)?;
        let res = storage_retrieval_efficiency(&op.pulse, &op.fields, &m.medium, scheme, 0.0, &m.options)?;
        let mut ts: Vec<f64> = times.unwrap().iter().map(|t| t * 1e-6).collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        let curve = lifetime_curve(&ts, res.efficiency, &m.medium, scheme, du.unwrap(), &m.options.decay);
        let mut csv = String::from("time_us,efficiency,band_low,band_high\n");
        for p in &curve {
            let _ = writeln!(
                csv,
                "{},{},{},{}",
                num(p.time * 1e6),
                num(p.efficiency),
                num(p.band_low),
                num(p.band_high)
            );
        }
        let xs = |f: fn(&crate::decoherence::LifetimePoint) -> f64| -> Vec<(f64, f64)> {
            curve.iter().map(|p| (p.time * 1e6, f(p))).collect()
        };
        let plot = line_plot(
            "Efficiency versus storage time",
            "storage time (us)",
            "overall efficiency",
            &[
                Series::line("model", xs(|p| p.efficiency)),
                Series::line("band low", xs(|p| p.band_low)),
                Series::line("band high", xs(|p| p.band_high)),
            ],
        );
        let decay_time = CollectiveState::from_medium(&m.medium, scheme).amplitude_decay_time();
        let mut summary = storage_summary(&res, &op.fields, op.tuned, scheme.gamma);
        summary["amplitude_decay_time_us"] = json!(decay_time.map(|t| t * 1e6));
        Ok(empty_output(csv, plot, summary))
    });
    validated(r, compute)
}

fn sweep_csv(points: &[SweepPoint], x_name: &str, scale: f64) -> String {
    let mut csv = format!("{x_name},fidelity,fidelity_err,efficiency,benchmark\n");
    for p in points {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            num(p.x * scale),
            num(p.average_fidelity),
            num(p.average_fidelity_err),
            num(p.efficiency),
            num(p.benchmark)
        );
    }
    csv
}

fn qubit(r: &mut Reader, scheme: &LevelScheme, seed: u64) -> Result<StudyOutput, StudyError> {
    let counts = config::count_settings(r);
    let (channel, rails) = config::channel(r);
    let constraint = config::constraint(r, "qubit.benchmark_constraint");
    let nbars = r.list_opt("qubit.nbar_list");
    if let Some(xs) = &nbars {
        config::check_list(r, "qubit.nbar_list", xs, |x| x >= 0.0, ">= 0");
    }
    let times = r.list_opt("qubit.storage_times_us");
    if let Some(xs) = &times {
        config::check_list(r, "qubit.storage_times_us", xs, |x| x >= 0.0, ">= 0");
    }
    let export_counts = r.bool_or("qubit.export_counts", false);
    let explicit = rails.is_some() || r.has("qubit.efficiency") || r.has("qubit.efficiency_h") || r.has("qubit.efficiency_v");
    // The memory model supplies the rail efficiencies unless they are given,
    // and the dephasing law whenever a storage-time sweep is requested.
    let mem = if !explicit {
        let m = read_memory(r, scheme, true);
        let t = r.f64_check("storage.time_us", |x| x >= 0.0, ">= 0").map(|x| x * 1e-6);
        m.zip(t)
    } else if times.is_some() {
        let m = config::medium(r, scheme, false);
        let decay = config::decay(r, m.as_ref());
        m.map(|m| {
            (
                Memory {
                    medium: m,
                    fields: FieldConfig::resonant(0.0),
                    carrier: Carrier::Fixed,
                    control: ControlSetting::Fixed(0.0),
                    fwhm: 0.0,
                    n_t: 0,
                    options: StorageOptions {
                        decay,
                        ..StorageOptions::default()
                    },
                },
                0.0,
            )
        })
    } else {
        None
    };
    let compute: Compute = Box::new(move || {
        let counts = counts.unwrap();
        let base = channel.unwrap();
        let mut memory_summary = Value::Null;
        let (eta_h, eta_v) = match rails {
            Some(r) => r,
            None => {
                let (m, t_s) = mem.as_ref().unwrap();
                let op = operating_point(m, scheme)?;
                let res = storage_retrieval_efficiency(&op.pulse, &op.fields, &m.medium, scheme, *t_s, &m.options)?;
                memory_summary = storage_summary(&res, &op.fields, op.tuned, scheme.gamma);
                (res.overall, res.overall)
            }
        };
        let ch = DualRailChannel { eta_h, eta_v, ..base };
        let exp = QubitExperiment {
            channel: ch,
            counts,
            seed,
            constraint,
        };
        let report = run_qubit_experiment(&exp)?;
        let mut csv = String::from("state,fidelity,fidelity_err,efficiency\n");
        let mut dm = String::from("state,re_hh,im_hh,re_hv,im_hv,re_vh,im_vh,re_vv,im_vv\n");
        let mut extra = Vec::new();
        for s in &report.states {
            let _ = writeln!(
                csv,
                "{},{},{},{}",
                s.input,
                num(s.fidelity),
                num(s.fidelity_err),
                num(s.efficiency)
            );
            let row: Vec<String> = s.reconstructed.to_row().iter().map(|x| num(*x)).collect();
            let _ = writeln!(dm, "{},{}", s.input, row.join(","));
            if export_counts {
                extra.push((format!("counts_{}.csv", s.input), s.record.to_csv()));
            }
        }
        extra.push(("density_matrices.csv".to_string(), dm));
        let mut plot_series = vec![Series::markers(
            "fidelity",
            report
                .states
                .iter()
                .enumerate()
                .map(|(i, s)| (i as f64, s.fidelity))
                .collect(),
        )];
        let mut plot_title = ("Conditional fidelity per input (H V D A R L)", "input index");
        if let Some(nb) = &nbars {
            let pts = nbar_sweep(&exp, nb)?;
            extra.push(("nbar_sweep.csv".to_string(), sweep_csv(&pts, "nbar", 1.0)));
            plot_series = vec![
                Series::line("fidelity", pts.iter().map(|p| (p.x, p.average_fidelity)).collect()),
                Series::line("classical bound", pts.iter().map(|p| (p.x, p.benchmark)).collect()),
            ];
            plot_title = ("Average fidelity versus mean photon number", "mean photon number");
        }
        if let Some(ts) = &times {
            let (m, _) = mem.as_ref().unwrap();
            let cs = CollectiveState::from_medium(&m.medium, scheme);
            let decay: StorageDecay = m.options.decay;
            let secs: Vec<f64> = ts.iter().map(|t| t * 1e-6).collect();
            let pts = storage_time_sweep(
                &QubitExperiment {
                    seed: derive_seed(seed, 7),
                    ..exp
                },
                &secs,
                |t| cs.efficiency(t) * decay.extra_factor(t),
            )?;
            extra.push(("storage_sweep.csv".to_string(), sweep_csv(&pts, "time_us", 1e6)));
        }
        let plot = line_plot(plot_title.0, plot_title.1, "fidelity", &plot_series);
        let bench = report.benchmark;
        let summary = json!({
            "average_fidelity": report.average_fidelity,
            "average_fidelity_err": report.average_fidelity_err,
            "average_efficiency": report.average_efficiency,
            "rail_efficiency_h": eta_h,
            "rail_efficiency_v": eta_v,
            "classical_bound": bench.map(|b| b.bound),
            "classical_bound_infeasible": bench.map(|b| b.infeasible),
            "margin_over_bound": bench.map(|b| report.average_fidelity - b.bound),
            "memory": memory_summary,
        });
        let mut out = empty_output(csv, plot, summary);
        out.extra_files = extra;
        Ok(out)
    });
    validated(r, compute)
}

fn benchmark(r: &mut Reader) -> Result<StudyOutput, StudyError> {
    let nbars = r.list_req("benchmark.nbar_list");
    if let Some(xs) = &nbars {
        config::check_list(r, "benchmark.nbar_list", xs, |x| x > 0.0, "> 0");
    }
    let eff = r.f64_check("benchmark.efficiency", |x| x > 0.0 && x <= 1.0, "in (0, 1]");
    let constraint = config::constraint(r, "benchmark.constraint");
    let compute: Compute = Box::new(move || {
        let eta = eff.unwrap();
        let mut csv = String::from("nbar,bound\n");
        let mut pts = Vec::new();
        let mut infeasible = Vec::new();
        for &n in &nbars.unwrap() {
            let b = classical_benchmark(n, eta, constraint)?;
            let _ = writeln!(csv, "{},{}", num(n), num(b.bound));
            pts.push((n, b.bound));
            if b.infeasible {
                infeasible.push(n);
            }
        }
        let plot = line_plot(
            "Classical fidelity benchmark",
            "mean photon number",
            "fidelity bound",
            &[Series::line("bound", pts)],
        );
        let summary = json!({ "efficiency": eta, "infeasible_nbar": infeasible });
        Ok(empty_output(csv, plot, summary))
    });
    validated(r, compute)
}
