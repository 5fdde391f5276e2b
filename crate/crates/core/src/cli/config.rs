//! Run configuration: a TOML file whose (possibly nested) tables are
//! flattened to dotted keys, plus `--set key=value` overrides. Physical
//! parameters have no defaults; numerical settings do.

use crate::atomic::LevelScheme;
use crate::bloch::{FieldConfig, MediumConfig, Populations};
use crate::constants::cesium;
use crate::decoherence::{DephasingParams, StorageDecay};
use crate::propagation::{Carrier, Numerics};
use crate::qubit::{CountSettings, DualRailChannel, EfficiencyConstraint};
use crate::quadrature::QuadratureOptions;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use toml::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Study {
    Spectrum,
    Storage,
    SweepOd,
    Lifetime,
    Qubit,
    Benchmark,
}

impl Study {
    pub const ALL: [Study; 6] = [
        Study::Spectrum,
        Study::Storage,
        Study::SweepOd,
        Study::Lifetime,
        Study::Qubit,
        Study::Benchmark,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Study::Spectrum => "spectrum",
            Study::Storage => "storage",
            Study::SweepOd => "sweep-od",
            Study::Lifetime => "lifetime",
            Study::Qubit => "qubit",
            Study::Benchmark => "benchmark",
        }
    }

    pub fn parse(s: &str) -> Option<Study> {
        Study::ALL.into_iter().find(|x| x.name() == s)
    }
}

impl fmt::Display for Study {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Every key the program understands.
pub const KNOWN_KEYS: &[&str] = &[
    "seed",
    "medium.od",
    "medium.length_cm",
    "medium.temperature_uK",
    "medium.gradient_mG_per_cm",
    "medium.gamma0_over_Gamma",
    "medium.populations",
    "fields.probe_detuning_over_Gamma",
    "fields.control_detuning_over_Gamma",
    "fields.control_rabi_over_Gamma",
    "fields.carrier",
    "pulse.fwhm_us",
    "pulse.delay_over_fwhm",
    "storage.time_us",
    "storage.cutoff_over_fwhm",
    "spectrum.detuning_min_over_Gamma",
    "spectrum.detuning_max_over_Gamma",
    "spectrum.points",
    "sweep.od_list",
    "lifetime.times_us",
    "lifetime.gradient_uncertainty_mG_per_cm",
    "dephasing.include_transit",
    "dephasing.include_motional",
    "dephasing.beam_diameter_um",
    "dephasing.crossing_angle_deg",
    "qubit.nbar",
    "qubit.windows",
    "qubit.background_per_window",
    "qubit.detection_efficiency",
    "qubit.visibility",
    "qubit.phase_rad",
    "qubit.efficiency",
    "qubit.efficiency_h",
    "qubit.efficiency_v",
    "qubit.nbar_list",
    "qubit.storage_times_us",
    "qubit.export_counts",
    "qubit.benchmark_constraint",
    "benchmark.nbar_list",
    "benchmark.efficiency",
    "benchmark.constraint",
    "numerics.n_time",
    "numerics.quad_rel_tol",
    "numerics.max_panels",
    "numerics.density_extent",
];

/// Flat dotted-key view of a TOML document.
pub type FlatConfig = BTreeMap<String, Value>;

fn flatten_into(prefix: &str, table: &toml::Table, out: &mut FlatConfig) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten_into(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

pub fn parse_config(text: &str) -> Result<FlatConfig, Vec<String>> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| vec![format!("config parse error: {e}")])?;
    let mut out = FlatConfig::new();
    flatten_into("", &table, &mut out);
    Ok(out)
}

/// Applies `key=value` overrides. The value is read as a TOML value and
/// falls back to a bare string.
pub fn apply_overrides(cfg: &mut FlatConfig, overrides: &[String]) -> Result<(), Vec<String>> {
    let mut errors = Vec::new();
    for o in overrides {
        let Some((k, v)) = o.split_once('=') else {
            errors.push(format!("override '{o}' is not of the form key=value"));
            continue;
        };
        let k = k.trim();
        let v = v.trim();
        let value = match format!("x = {v}").parse::<toml::Table>() {
            Ok(mut t) => t.remove("x").unwrap(),
            Err(_) => Value::String(v.to_string()),
        };
        cfg.insert(k.to_string(), value);
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

/// Typed access to the flat config that collects every problem instead of
/// stopping at the first.
pub struct Reader<'a> {
    cfg: &'a FlatConfig,
    pub errors: Vec<String>,
    resolved: BTreeMap<String, serde_json::Value>,
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

impl<'a> Reader<'a> {
    pub fn new(cfg: &'a FlatConfig) -> Self {
        let mut errors = Vec::new();
        for k in cfg.keys() {
            if !KNOWN_KEYS.contains(&k.as_str()) {
                errors.push(format!("{k}: unknown key"));
            }
        }
        Reader {
            cfg,
            errors,
            resolved: BTreeMap::new(),
        }
    }

    /// The values actually used, defaults included.
    pub fn resolved(&self) -> &BTreeMap<String, serde_json::Value> {
        &self.resolved
    }

    pub fn has(&self, key: &str) -> bool {
        self.cfg.contains_key(key)
    }

    fn record(&mut self, key: &str, v: serde_json::Value) {
        self.resolved.insert(key.to_string(), v);
    }

    pub fn f64_opt(&mut self, key: &str) -> Option<f64> {
        let v = self.cfg.get(key)?;
        match as_f64(v) {
            Some(x) if x.is_finite() => {
                self.record(key, serde_json::json!(x));
                Some(x)
            }
            _ => {
                self.errors.push(format!("{key}: expected a finite number, got {v}"));
                None
            }
        }
    }

    pub fn f64_req(&mut self, key: &str) -> Option<f64> {
        if !self.has(key) {
            self.errors.push(format!("{key}: required key missing"));
            return None;
        }
        self.f64_opt(key)
    }

    pub fn f64_or(&mut self, key: &str, default: f64) -> f64 {
        if self.has(key) {
            self.f64_opt(key).unwrap_or(default)
        } else {
            self.record(key, serde_json::json!(default));
            default
        }
    }

    /// Required number with a validity check; `what` completes the message
    /// "<key> must be <what>".
    pub fn f64_check(&mut self, key: &str, ok: impl Fn(f64) -> bool, what: &str) -> Option<f64> {
        let x = self.f64_req(key)?;
        if !ok(x) {
            self.errors.push(format!("{key} must be {what} (got {x})"));
            return None;
        }
        Some(x)
    }

    pub fn u64_or(&mut self, key: &str, default: u64) -> u64 {
        match self.cfg.get(key) {
            None => {
                self.record(key, serde_json::json!(default));
                default
            }
            Some(Value::Integer(i)) if *i >= 0 => {
                self.record(key, serde_json::json!(*i));
                *i as u64
            }
            Some(v) => {
                self.errors.push(format!("{key}: expected a non-negative integer, got {v}"));
                default
            }
        }
    }

    pub fn u64_req(&mut self, key: &str) -> Option<u64> {
        if !self.has(key) {
            self.errors.push(format!("{key}: required key missing"));
            return None;
        }
        Some(self.u64_or(key, 0))
    }

    pub fn bool_or(&mut self, key: &str, default: bool) -> bool {
        match self.cfg.get(key) {
            None => {
                self.record(key, serde_json::json!(default));
                default
            }
            Some(Value::Boolean(b)) => {
                self.record(key, serde_json::json!(*b));
                *b
            }
            Some(v) => {
                self.errors.push(format!("{key}: expected true or false, got {v}"));
                default
            }
        }
    }

    pub fn string_or(&mut self, key: &str, default: &str) -> String {
        match self.cfg.get(key) {
            None => {
                self.record(key, serde_json::json!(default));
                default.to_string()
            }
            Some(Value::String(s)) => {
                self.record(key, serde_json::json!(s));
                s.clone()
            }
            Some(v) => {
                self.errors.push(format!("{key}: expected a string, got {v}"));
                default.to_string()
            }
        }
    }

    pub fn list_req(&mut self, key: &str) -> Option<Vec<f64>> {
        let Some(v) = self.cfg.get(key) else {
            self.errors.push(format!("{key}: required key missing"));
            return None;
        };
        self.list_value(key, v)
    }

    pub fn list_opt(&mut self, key: &str) -> Option<Vec<f64>> {
        let v = self.cfg.get(key)?;
        self.list_value(key, v)
    }

    fn list_value(&mut self, key: &str, v: &Value) -> Option<Vec<f64>> {
        let Value::Array(items) = v else {
            self.errors.push(format!("{key}: expected an array of numbers"));
            return None;
        };
        let xs: Option<Vec<f64>> = items.iter().map(as_f64).collect();
        match xs {
            Some(xs) if !xs.is_empty() && xs.iter().all(|x| x.is_finite()) => {
                self.record(key, serde_json::json!(xs));
                Some(xs)
            }
            _ => {
                self.errors.push(format!("{key}: expected a non-empty array of finite numbers"));
                None
            }
        }
    }

    fn populations(&mut self, key: &str) -> Option<Populations> {
        let Some(v) = self.cfg.get(key) else {
            self.errors.push(format!("{key}: required key missing"));
            return None;
        };
        let pops = match v {
            Value::String(s) if s == "equal" => Some(Populations::equal()),
            Value::String(s) => match s.strip_prefix('m').and_then(|m| m.parse::<i32>().ok()) {
                Some(m) if (-3..=3).contains(&m) => Some(Populations::single(m)),
                _ => None,
            },
            Value::Array(items) if items.len() == 7 => {
                let xs: Option<Vec<f64>> = items.iter().map(as_f64).collect();
                xs.map(|xs| Populations(xs.try_into().unwrap()))
            }
            _ => None,
        };
        match pops {
            Some(p) => {
                self.record(key, serde_json::json!(p.0));
                Some(p)
            }
            None => {
                self.errors.push(format!(
                    "{key}: expected \"equal\", \"m<k>\" with k in -3..=3, or 7 weights for m = -3..=3"
                ));
                None
            }
        }
    }
}

fn positive(x: f64) -> bool {
    x > 0.0
}

fn non_negative(x: f64) -> bool {
    x >= 0.0
}

fn unit_interval(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

fn open_unit(x: f64) -> bool {
    x > 0.0 && x <= 1.0
}

pub fn numerics(r: &mut Reader) -> Numerics {
    let d = Numerics::default();
    let rel_tol = r.f64_or("numerics.quad_rel_tol", d.quadrature.rel_tol);
    let max_panels = r.u64_or("numerics.max_panels", d.quadrature.max_panels as u64) as usize;
    let density_extent = r.f64_or("numerics.density_extent", d.density_extent);
    if !(rel_tol > 0.0) {
        r.errors.push("numerics.quad_rel_tol must be > 0".into());
    }
    if max_panels == 0 {
        r.errors.push("numerics.max_panels must be > 0".into());
    }
    if !(density_extent >= 1.0) {
        r.errors.push("numerics.density_extent must be >= 1".into());
    }
    Numerics {
        quadrature: QuadratureOptions { rel_tol, max_panels },
        density_extent,
        ..d
    }
}

/// `medium.od` is skipped when the study supplies its own OD values.
pub fn medium(r: &mut Reader, scheme: &LevelScheme, with_od: bool) -> Option<MediumConfig> {
    let od = if with_od {
        r.f64_check("medium.od", positive, "> 0")
    } else {
        Some(1.0)
    };
    let length = r.f64_check("medium.length_cm", positive, "> 0").map(|x| x * 1e-2);
    let temperature = r.f64_check("medium.temperature_uK", positive, "> 0").map(|x| x * 1e-6);
    let gradient = r.f64_check("medium.gradient_mG_per_cm", non_negative, ">= 0").map(|x| x * 1e-3);
    let gamma0 = r.f64_check("medium.gamma0_over_Gamma", non_negative, ">= 0").map(|x| x * scheme.gamma);
    let populations = r.populations("medium.populations");
    if let Some(p) = &populations {
        for v in p.violations() {
            r.errors.push(format!("medium.populations: {v}"));
        }
    }
    Some(MediumConfig {
        optical_depth: od?,
        length: length?,
        temperature: temperature?,
        gradient: gradient?,
        gamma0: gamma0?,
        populations: populations?,
    })
}

/// How the control Rabi frequency is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlSetting {
    Fixed(f64),
    /// Tune to this slow-light delay (s).
    Delay(f64),
}

pub struct FieldSetup {
    pub fields: FieldConfig,
    pub carrier: Carrier,
}

pub fn fields(r: &mut Reader, scheme: &LevelScheme, need_detunings: bool) -> Option<FieldSetup> {
    let (probe, control) = if need_detunings {
        (
            r.f64_req("fields.probe_detuning_over_Gamma"),
            r.f64_req("fields.control_detuning_over_Gamma"),
        )
    } else {
        (Some(0.0), Some(0.0))
    };
    let carrier = match r.string_or("fields.carrier", "transparency-peak").as_str() {
        "transparency-peak" => Carrier::TransparencyPeak,
        "fixed" => Carrier::Fixed,
        other => {
            r.errors.push(format!("fields.carrier: expected \"transparency-peak\" or \"fixed\", got \"{other}\""));
            Carrier::Fixed
        }
    };
    Some(FieldSetup {
        fields: FieldConfig {
            probe_detuning: probe? * scheme.gamma,
            control_detuning: control? * scheme.gamma,
            control_rabi: 0.0,
            probe_rabi: 1.0,
        },
        carrier,
    })
}

/// Exactly one of a fixed control Rabi frequency or a target delay.
pub fn control(r: &mut Reader, scheme: &LevelScheme, fwhm: Option<f64>) -> Option<ControlSetting> {
    let has_rabi = r.has("fields.control_rabi_over_Gamma");
    let has_delay = r.has("pulse.delay_over_fwhm");
    match (has_rabi, has_delay) {
        (true, true) => {
            r.errors.push("give either fields.control_rabi_over_Gamma or pulse.delay_over_fwhm, not both".into());
            None
        }
        (false, false) => {
            r.errors.push("one of fields.control_rabi_over_Gamma or pulse.delay_over_fwhm is required".into());
            None
        }
        (true, false) => r
            .f64_check("fields.control_rabi_over_Gamma", non_negative, ">= 0")
            .map(|x| ControlSetting::Fixed(x * scheme.gamma)),
        (false, true) => {
            let d = r.f64_check("pulse.delay_over_fwhm", positive, "> 0")?;
            Some(ControlSetting::Delay(d * fwhm?))
        }
    }
}

pub fn pulse(r: &mut Reader) -> Option<f64> {
    r.f64_check("pulse.fwhm_us", positive, "> 0").map(|x| x * 1e-6)
}

pub fn n_time(r: &mut Reader) -> usize {
    let n = r.u64_or("numerics.n_time", 1024) as usize;
    if !n.is_power_of_two() || n < 16 {
        r.errors.push(format!("numerics.n_time must be a power of two >= 16 (got {n})"));
    }
    n
}

pub fn decay(r: &mut Reader, medium: Option<&MediumConfig>) -> StorageDecay {
    let include_transit = r.bool_or("dephasing.include_transit", false);
    let include_motional = r.bool_or("dephasing.include_motional", false);
    if !(include_transit || include_motional) {
        return StorageDecay::default();
    }
    let d = r.f64_check("dephasing.beam_diameter_um", positive, "> 0").map(|x| x * 1e-6);
    let angle = r
        .f64_check("dephasing.crossing_angle_deg", non_negative, ">= 0")
        .map(f64::to_radians);
    let params = match (d, angle, medium) {
        (Some(d), Some(a), Some(m)) => Some(DephasingParams {
            beam_diameter: d,
            crossing_angle: a,
            temperature: m.temperature,
            mass: cesium::MASS,
            wavelength: cesium::D2_WAVELENGTH,
            gradient: m.gradient,
            length: m.length,
        }),
        _ => None,
    };
    StorageDecay {
        include_transit,
        include_motional,
        dephasing: params,
    }
}

pub fn constraint(r: &mut Reader, key: &str) -> EfficiencyConstraint {
    match r.string_or(key, "non-vacuum").as_str() {
        "non-vacuum" => EfficiencyConstraint::NonVacuum,
        "absolute" => EfficiencyConstraint::Absolute,
        other => {
            r.errors.push(format!("{key}: expected \"non-vacuum\" or \"absolute\", got \"{other}\""));
            EfficiencyConstraint::NonVacuum
        }
    }
}

pub fn count_settings(r: &mut Reader) -> Option<CountSettings> {
    let nbar = r.f64_check("qubit.nbar", non_negative, ">= 0");
    let windows = r.u64_req("qubit.windows");
    if windows == Some(0) {
        r.errors.push("qubit.windows must be > 0".into());
    }
    let background = r.f64_check("qubit.background_per_window", non_negative, ">= 0");
    let det = r.f64_check("qubit.detection_efficiency", unit_interval, "in [0, 1]");
    Some(CountSettings {
        nbar: nbar?,
        windows: windows? as usize,
        background: background?,
        detection_efficiency: det?,
    })
}

/// Channel settings; rail efficiencies are `None` when they come from the
/// memory model.
pub fn channel(r: &mut Reader) -> (Option<DualRailChannel>, Option<(f64, f64)>) {
    let visibility = r.f64_check("qubit.visibility", unit_interval, "in [0, 1]");
    let phase = r.f64_req("qubit.phase_rad");
    let single = r.has("qubit.efficiency");
    let split = r.has("qubit.efficiency_h") || r.has("qubit.efficiency_v");
    let rails = if single && split {
        r.errors.push("give qubit.efficiency or qubit.efficiency_h/_v, not both".into());
        None
    } else if single {
        r.f64_check("qubit.efficiency", open_unit, "in (0, 1]").map(|e| (e, e))
    } else if split {
        let h = r.f64_check("qubit.efficiency_h", open_unit, "in (0, 1]");
        let v = r.f64_check("qubit.efficiency_v", open_unit, "in (0, 1]");
        h.zip(v)
    } else {
        None
    };
    let ch = visibility.zip(phase).map(|(visibility, phase)| DualRailChannel {
        eta_h: 1.0,
        eta_v: 1.0,
        visibility,
        phase,
    });
    (ch, rails)
}

pub fn check_list(r: &mut Reader, key: &str, xs: &[f64], ok: impl Fn(f64) -> bool, what: &str) {
    let bad: Vec<String> = xs.iter().filter(|&&x| !ok(x)).map(|x| x.to_string()).collect();
    if !bad.is_empty() {
        r.errors.push(format!("{key}: entries must be {what} (got {})", bad.join(", ")));
    }
}
