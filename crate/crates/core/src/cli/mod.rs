//! `eitmem <study> --config <path> [--set key=value ...] [--seed N] [--out DIR]`
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.
//! Every output is computed in memory first and only then written, each file
//! through a temporary name and a rename, so a failed run leaves the output
//! directory untouched.

pub mod config;
pub mod plot;
pub mod studies;

use clap::Parser;
use serde_json::json;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

pub use config::Study;
pub use studies::{run_study, StudyError, StudyOutput};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

fn parse_study(s: &str) -> Result<Study, String> {
    Study::parse(s).ok_or_else(|| {
        let names: Vec<&str> = Study::ALL.iter().map(|s| s.name()).collect();
        format!("unknown study '{s}' (expected one of: {})", names.join(", "))
    })
}

#[derive(Debug, Parser)]
#[command(name = "eitmem", version, about = "Multi-level EIT quantum memory studies")]
pub struct Cli {
    /// spectrum, storage, sweep-od, lifetime, qubit or benchmark
    #[arg(value_parser = parse_study)]
    pub study: Study,
    /// TOML configuration file
    #[arg(long)]
    pub config: PathBuf,
    /// Override a configuration key, e.g. --set medium.od=150
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// RNG seed (overrides the `seed` key)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Skip plot.svg
    #[arg(long)]
    pub no_plot: bool,
}

fn report(kind: &str, errors: &[String]) {
    let msg = json!({ "status": kind, "errors": errors });
    eprintln!("{msg}");
}

/// Parses arguments, runs the study and writes its outputs. Returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    run(&cli)
}

pub fn run(cli: &Cli) -> i32 {
    let text = match fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            report("config-error", &[format!("cannot read {}: {e}", cli.config.display())]);
            return EXIT_CONFIG;
        }
    };
    let mut cfg = match config::parse_config(&text) {
        Ok(c) => c,
        Err(errs) => {
            report("config-error", &errs);
            return EXIT_CONFIG;
        }
    };
    if let Err(errs) = config::apply_overrides(&mut cfg, &cli.set) {
        report("config-error", &errs);
        return EXIT_CONFIG;
    }
    let out = match run_study(cli.study, &cfg, cli.seed) {
        Ok(o) => o,
        Err(StudyError::Config(errs)) => {
            report("config-error", &errs);
            return EXIT_CONFIG;
        }
        Err(StudyError::Numerical(msg)) => {
            report("numerical-failure", &[msg]);
            return EXIT_NUMERICAL;
        }
    };
    match write_outputs(&cli.out, cli.study, &out, !cli.no_plot) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            report("io-error", &[e.to_string()]);
            EXIT_NUMERICAL
        }
    }
}

/// File name and contents of everything a run writes, manifest last.
pub fn output_files(study: Study, out: &StudyOutput, with_plot: bool) -> Vec<(String, String)> {
    let mut files = vec![("results.csv".to_string(), out.results_csv.clone())];
    files.extend(out.extra_files.iter().cloned());
    if with_plot {
        files.push(("plot.svg".to_string(), out.plot_svg.clone()));
    }
    let names: Vec<&str> = files.iter().map(|(n, _)| n.as_str()).collect();
    let manifest = json!({
        "program": "eitmem",
        "version": env!("CARGO_PKG_VERSION"),
        "study": study.name(),
        "seed": out.seed,
        "config": out.resolved,
        "summary": out.summary,
        "files": names,
    });
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    files.push(("run-manifest.json".to_string(), text));
    files
}

fn write_outputs(dir: &Path, study: Study, out: &StudyOutput, with_plot: bool) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let files = output_files(study, out, with_plot);
    let mut staged = Vec::new();
    for (name, body) in &files {
        let tmp = dir.join(format!(".{name}.tmp"));
        if let Err(e) = fs::write(&tmp, body) {
            for t in &staged {
                let _ = fs::remove_file(t);
            }
            let _ = fs::remove_file(&tmp);
            return Err(e);
        }
        staged.push(tmp);
    }
    for ((name, _), tmp) in files.iter().zip(&staged) {
        fs::rename(tmp, dir.join(name))?;
    }
    Ok(())
}
