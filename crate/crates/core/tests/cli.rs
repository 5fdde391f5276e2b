use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_eitmem");

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn run_study(study: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![study, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn stderr_errors(o: &Output) -> Vec<String> {
    let v: serde_json::Value = serde_json::from_slice(&o.stderr).expect("JSON error report");
    v["errors"].as_array().unwrap().iter().map(|e| e.as_str().unwrap().to_string()).collect()
}

fn header(dir: &Path, file: &str) -> String {
    fs::read_to_string(dir.join(file)).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn every_study_writes_its_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("spectrum", "memory.toml", "detuning_over_Gamma,transmission"),
        ("storage", "memory.toml", "time_us,input_intensity,output_intensity"),
        ("lifetime", "memory.toml", "time_us,efficiency,band_low,band_high"),
        ("qubit", "qubit.toml", "state,fidelity,fidelity_err,efficiency"),
        ("benchmark", "benchmark.toml", "nbar,bound"),
    ];
    for (study, cfg, head) in cases {
        let out = tmp.path().join(study);
        let o = run_study(study, &config(cfg), &out, &[]);
        assert_eq!(o.status.code(), Some(0), "{study}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(header(&out, "results.csv"), head, "{study}");
        assert!(out.join("plot.svg").exists());
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("run-manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["study"], study);
        assert!(manifest["files"].as_array().unwrap().iter().any(|f| f == "results.csv"));
    }
    let q = tmp.path().join("qubit");
    assert_eq!(
        header(&q, "density_matrices.csv"),
        "state,re_hh,im_hh,re_hv,im_hv,re_vh,im_vh,re_vv,im_vv"
    );
}

#[test]
fn sweep_with_override() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_study("sweep-od", &config("memory.toml"), tmp.path(), &["--set", "sweep.od_list=[50, 150]", "--no-plot"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(tmp.path().join("results.csv")).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(2).unwrap().starts_with("150,"));
    assert!(!tmp.path().join("plot.svg").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for study in ["qubit", "spectrum"] {
        let cfg = config(if study == "qubit" { "qubit.toml" } else { "memory.toml" });
        assert_eq!(run_study(study, &cfg, &a, &["--seed", "3"]).status.code(), Some(0));
        assert_eq!(run_study(study, &cfg, &b, &["--seed", "3"]).status.code(), Some(0));
        let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        for n in names {
            assert_eq!(fs::read(a.join(&n)).unwrap(), fs::read(b.join(&n)).unwrap(), "{study}: {n:?}");
        }
    }
}

#[test]
fn seed_changes_qubit_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_study("qubit", &config("qubit.toml"), &a, &["--seed", "1"]);
    run_study("qubit", &config("qubit.toml"), &b, &["--seed", "2"]);
    assert_ne!(fs::read(a.join("results.csv")).unwrap(), fs::read(b.join("results.csv")).unwrap());
}

#[test]
fn missing_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let text: String = fs::read_to_string(config("benchmark.toml"))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with("efficiency"))
        .map(|l| format!("{l}\n"))
        .collect();
    let cfg = tmp.path().join("b.toml");
    fs::write(&cfg, text).unwrap();
    let out = tmp.path().join("out");
    let o = run_study("benchmark", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_errors(&o).iter().any(|e| e.contains("benchmark.efficiency")));
    assert!(!out.exists());
}

#[test]
fn all_violations_reported_together() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run_study(
        "qubit",
        &config("qubit.toml"),
        &out,
        &["--set", "qubit.nbar=-1", "--set", "qubit.visibility=2", "--set", "qubit.windows=0"],
    );
    assert_eq!(o.status.code(), Some(2));
    let errs = stderr_errors(&o);
    for key in ["qubit.nbar", "qubit.visibility", "qubit.windows"] {
        assert!(errs.iter().any(|e| e.contains(key)), "{key} missing from {errs:?}");
    }
    assert!(!out.exists());
}

#[test]
fn bad_arguments() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run(&["nope", "--config", "x.toml"]).status.code(), Some(2));
    assert_eq!(run(&["qubit"]).status.code(), Some(2));
    let o = run_study("qubit", &tmp.path().join("absent.toml"), tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    let o = run_study("qubit", &config("qubit.toml"), tmp.path(), &["--set", "qubit.nbar"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 0);
}

#[test]
fn numerical_failure_leaves_no_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run_study(
        "storage",
        &config("memory.toml"),
        &out,
        &["--set", "medium.od=0.5", "--set", "pulse.delay_over_fwhm=8"],
    );
    assert_eq!(o.status.code(), Some(3));
    let v: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["status"], "numerical-failure");
    assert!(!out.exists());
}
