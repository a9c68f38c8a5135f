//! Scenario-driven front end for `gripsim-core`.
//!
//! `run` executes the experiment named in a scenario file and writes CSV
//! traces plus `summary.json`; `sweep` evaluates one parameter over a grid and
//! writes `sweep.csv`. The summary is the scenario itself with a `results`
//! block added, so it can be fed back in unchanged.

pub mod error;
pub mod experiments;
pub mod output;
pub mod scenario;

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};

pub use error::CliError;
pub use experiments::RunOptions;
use experiments::{run_experiment, sweep_header, sweep_point};
use output::{fmt9, OutDir, Table};
pub use scenario::{Scenario, Source};

pub const SUMMARY_FILE: &str = "summary.json";
pub const SWEEP_FILE: &str = "sweep.csv";

pub fn load(path: &Path) -> Result<Source, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Source::parse(&text)
}

fn base_dir(path: &Path) -> &Path {
    path.parent().unwrap_or_else(|| Path::new("."))
}

fn summary(src: &Source, results: Value) -> Result<Value, CliError> {
    let mut scenario = src.scenario.clone();
    scenario.results = Some(results);
    serde_json::to_value(&scenario).map_err(|e| CliError::Io(e.to_string()))
}

pub fn run(scenario: &Path, out: &Path, opts: &RunOptions) -> Result<(), CliError> {
    let src = load(scenario)?;
    log::info!(
        "running {} from {}",
        src.scenario.experiment.as_str(),
        scenario.display()
    );
    let mut dir = OutDir::create(out)?;
    let outcome = run_experiment(&src, base_dir(scenario), opts, &mut dir)?;
    let mut results = outcome.results;
    if let Value::Object(map) = &mut results {
        map.insert("outputs".into(), json!(dir.files()));
    }
    dir.json(SUMMARY_FILE, &summary(&src, results)?)?;
    match outcome.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn with_pool<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R, CliError> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::config(1, format!("--threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

pub fn sweep(scenario: &Path, out: &Path, opts: &RunOptions) -> Result<(), CliError> {
    let src = load(scenario)?;
    let section = src
        .scenario
        .sweep
        .clone()
        .ok_or_else(|| src.error_at("experiment", "sweep needs a sweep section"))?;
    if section.values.is_empty() || section.values.iter().any(|v| !v.is_finite()) {
        return Err(src.error_at("values", "sweep values must be a non-empty list of finite numbers"));
    }
    let header = sweep_header(src.scenario.experiment, section.parameter).ok_or_else(|| {
        src.error_at(
            "parameter",
            format!(
                "{} cannot be swept over {}",
                src.scenario.experiment.as_str(),
                section.parameter.as_str()
            ),
        )
    })?;
    // Fail fast on configuration problems before fanning out.
    src.hand(opts.seed)?;
    log::info!(
        "sweeping {} over {} points",
        section.parameter.as_str(),
        section.values.len()
    );

    let points: Vec<Result<Vec<String>, CliError>> = with_pool(opts.threads, || {
        section
            .values
            .par_iter()
            .map(|&v| sweep_point(&src, opts, section.parameter, v))
            .collect()
    })?;

    let mut table = Table::new(&header);
    let mut worst: Option<CliError> = None;
    let mut failed = 0usize;
    for (&v, point) in section.values.iter().zip(points) {
        let mut row = vec![fmt9(v)];
        match point {
            Ok(cells) => {
                row.push("ok".into());
                row.extend(cells);
            }
            Err(e @ CliError::Config { .. }) | Err(e @ CliError::Io(_)) => return Err(e),
            Err(e) => {
                failed += 1;
                row.push(e.to_string());
                row.resize(header.len(), String::new());
                if worst.as_ref().is_none_or(|w| e.exit_code() > w.exit_code()) {
                    worst = Some(e);
                }
            }
        }
        table.row(row);
    }
    let mut dir = OutDir::create(out)?;
    dir.table(SWEEP_FILE, &table)?;
    let results = json!({
        "parameter": section.parameter.as_str(),
        "points": table.len(),
        "failed_points": failed,
        "outputs": [SWEEP_FILE],
    });
    dir.json(SUMMARY_FILE, &summary(&src, results)?)?;
    match worst {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
