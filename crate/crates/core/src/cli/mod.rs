//! Command-line scenario runner: `rabisq run <file>` and `rabisq compare`.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3
//! integration failure.

pub mod output;
pub mod report;
pub mod runner;
pub mod scenario;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Error;
use crate::dynamics::Engine;
use crate::models::ModelKind;
use crate::observables::Sample;
use output::{husimi_csv, time_tag, timeseries_csv, to_json, write_atomic};
use report::{compare, Range};
use runner::{ComparisonSummary, HusimiEntry, RunOutput, RunPlan, Summary};
pub use scenario::Scenario;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Integration(Error),
    Io(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Integration(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Integration(e) => write!(f, "integration failed: {e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_integration_failure() {
            CliError::Integration(e)
        } else {
            CliError::Config(e.to_string())
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "rabisq", version, about = "Squeezing in the driven and kicked quantum Rabi and Dicke models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario file and write its output bundle.
    Run {
        file: PathBuf,
        /// Parameter sweep, e.g. `N=1,10,100` or `g_ratio=0.5,0.8`; repeat for a grid.
        #[arg(long)]
        sweep: Vec<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the engine.
        #[arg(long)]
        engine: Option<String>,
        #[arg(long)]
        rtol: Option<f64>,
        /// Override the Fock cutoff.
        #[arg(long)]
        cutoff: Option<usize>,
    },
    /// Compare two time-series CSV files (the second is the reference).
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Ignore samples before this time.
        #[arg(long, default_value_t = 0.0)]
        transient: f64,
    },
}

const INTEGER_KEYS: [&str; 6] = ["n_spins", "cutoff", "max_steps", "positivity_every", "husimi_resolution", "N"];

/// Where a sweep or override key lives in the scenario table.
fn key_path(key: &str) -> Vec<String> {
    let key = if key == "N" { "n_spins" } else { key };
    if key.contains('.') {
        return key.split('.').map(str::to_string).collect();
    }
    let section = match key {
        "cutoff" | "engine" | "model" | "name" => None,
        "t_end" | "alpha" | "alpha_im" | "transient" | "kind" => Some("protocol"),
        "rtol" | "atol" | "max_step" | "sample_dt" | "max_steps" | "positivity_every" => Some("integrator"),
        _ => Some("system"),
    };
    section.into_iter().map(str::to_string).chain([key.to_string()]).collect()
}

fn parse_value(key: &str, raw: &str) -> Result<toml::Value, CliError> {
    let last = key.rsplit('.').next().unwrap_or(key);
    if INTEGER_KEYS.contains(&last) {
        return raw
            .parse::<i64>()
            .map(toml::Value::Integer)
            .map_err(|_| CliError::config(format!("--sweep {key}: `{raw}` is not an integer")));
    }
    if let Ok(v) = raw.parse::<f64>() {
        return Ok(toml::Value::Float(v));
    }
    match raw {
        "true" => Ok(toml::Value::Boolean(true)),
        "false" => Ok(toml::Value::Boolean(false)),
        _ => Ok(toml::Value::String(raw.to_string())),
    }
}

pub fn set_key(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), CliError> {
    let path = key_path(key);
    let (last, parents) = path.split_last().expect("non-empty key");
    let mut cur = table;
    for p in parents {
        cur = cur
            .entry(p.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| CliError::config(format!("`{p}` is not a table")))?;
    }
    if last == "g" {
        cur.remove("g_ratio");
    } else if last == "g_ratio" {
        cur.remove("g");
    }
    cur.insert(last.clone(), value);
    Ok(())
}

/// `key=v1,v2,...` into `(key, [values])`.
pub fn parse_sweep(arg: &str) -> Result<(String, Vec<String>), CliError> {
    let (k, vs) = arg
        .split_once('=')
        .ok_or_else(|| CliError::config(format!("--sweep `{arg}`: expected key=v1,v2,...")))?;
    let values: Vec<String> = vs.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
    if k.trim().is_empty() || values.is_empty() {
        return Err(CliError::config(format!("--sweep `{arg}`: expected key=v1,v2,...")));
    }
    Ok((k.trim().to_string(), values))
}

/// Cartesian product of sweep axes as lists of `(key, value)`.
fn sweep_points(axes: &[(String, Vec<String>)]) -> Vec<Vec<(String, String)>> {
    let mut points: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for (k, vs) in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                vs.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((k.clone(), v.clone()));
                    q
                })
            })
            .collect();
    }
    points
}

/// Everything produced by one scenario run.
pub struct Bundle {
    pub summary: Summary,
    pub main: RunOutput,
    pub comparison: Option<RunOutput>,
}

/// Run a parsed scenario (including the optional comparison run).
pub fn run_scenario(sc: &Scenario) -> Result<Bundle, CliError> {
    let plan = RunPlan::from_scenario(sc)?;
    let main = plan.execute()?;
    let (kicked, steady_state) = runner::protocol_reports(&plan, &main, sc.outputs.steady_state_report)?;

    let mut comparison = None;
    let mut comparison_summary = None;
    if let Some(spec) = &sc.outputs.comparison {
        let mut other = sc.clone();
        other.model = spec.model;
        other.engine = spec.engine;
        other.cutoff = spec.cutoff.unwrap_or(sc.cutoff);
        other.outputs.husimi.clear();
        if other.engine != Engine::Master {
            other.frame = scenario::Frame::Lab;
        }
        if other.model != ModelKind::Dicke && other.model.has_spin() {
            other.system.n_spins = 1;
        }
        let oplan = RunPlan::from_scenario(&other)?;
        let out = oplan.execute()?;
        let report = compare(&main.samples, &out.samples, sc.protocol.transient)?;
        comparison_summary = Some(ComparisonSummary {
            model: spec.model,
            engine: spec.engine,
            cutoff: other.cutoff,
            report,
            runtime_seconds: out.seconds,
        });
        comparison = Some(out);
    }

    let husimi = main
        .husimi
        .iter()
        .map(|h| HusimiEntry {
            t: h.t,
            file: format!("husimi_t{}.csv", time_tag(h.t)),
            mass: h.grid.mass,
            tilt: h.grid.tilt(),
            warning: h.grid.warning.clone(),
        })
        .collect();

    let summary = Summary {
        name: sc.name.clone(),
        model: sc.model,
        engine: sc.engine,
        cutoff: sc.cutoff,
        frame: sc.frame,
        convention: crate::analytics::Convention::Physical.marker(),
        system: plan.system.clone(),
        protocol: plan.protocol.clone(),
        integrator: plan.config.clone(),
        derived: runner::derived(&plan.system),
        validity: runner::validity(&plan.system),
        stats: main.meta.stats.clone(),
        warnings: main.meta.warnings.clone(),
        samples: main.samples.len(),
        final_sample: main.samples.last().copied(),
        kicked,
        steady_state,
        comparison: comparison_summary,
        husimi,
        runtime_seconds: main.seconds,
    };
    Ok(Bundle {
        summary,
        main,
        comparison,
    })
}

/// Write a bundle into `dir`.
pub fn write_bundle(bundle: &Bundle, sc: &Scenario, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    let mut put = |name: &str, data: String| -> Result<(), CliError> {
        let p = dir.join(name);
        write_atomic(&p, data.as_bytes()).map_err(|e| io_err(&p, e))?;
        written.push(p);
        Ok(())
    };
    if sc.outputs.timeseries {
        put("timeseries.csv", timeseries_csv(&bundle.main.samples))?;
        if let Some(c) = &bundle.comparison {
            put("comparison_timeseries.csv", timeseries_csv(&c.samples))?;
        }
    }
    for h in &bundle.main.husimi {
        let tag = time_tag(h.t);
        put(&format!("husimi_t{tag}.csv"), husimi_csv(&h.grid))?;
        put(&format!("husimi_t{tag}.json"), to_json(h))?;
    }
    put("summary.json", to_json(&bundle.summary))?;
    Ok(written)
}

#[derive(Serialize)]
struct SweepEntry {
    point: Vec<(String, String)>,
    directory: String,
    status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    var_x: Option<Range>,
    #[serde(skip_serializing_if = "Option::is_none")]
    var_p: Option<Range>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma22: Option<Range>,
}

fn window_ranges(samples: &[Sample], t0: f64) -> (Option<Range>, Option<Range>, Option<Range>) {
    let w: Vec<&Sample> = samples.iter().filter(|s| s.stats.t >= t0).collect();
    (
        Range::of(w.iter().map(|s| s.stats.var_x)),
        Range::of(w.iter().map(|s| s.stats.var_p)),
        Range::of(w.iter().map(|s| s.sigma22).filter(|v| v.is_finite())),
    )
}

fn point_dir(point: &[(String, String)]) -> String {
    point.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(",")
}

/// `rabisq run`.
pub fn run_command(
    file: &Path,
    sweeps: &[String],
    out: &Path,
    engine: Option<&str>,
    rtol: Option<f64>,
    cutoff: Option<usize>,
) -> Result<(), CliError> {
    let text = std::fs::read_to_string(file).map_err(|e| io_err(file, e))?;
    let mut table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::config(format!("{}: {e}", file.display())))?;
    if let Some(e) = engine {
        set_key(&mut table, "engine", toml::Value::String(e.to_string()))?;
    }
    if let Some(r) = rtol {
        set_key(&mut table, "rtol", toml::Value::Float(r))?;
    }
    if let Some(c) = cutoff {
        set_key(&mut table, "cutoff", toml::Value::Integer(c as i64))?;
    }
    let base = Scenario::from_table(table.clone()).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", file.display())),
        other => other,
    })?;
    let root = out.join(&base.name);

    if sweeps.is_empty() {
        let bundle = run_scenario(&base)?;
        for p in write_bundle(&bundle, &base, &root)? {
            println!("wrote {}", p.display());
        }
        return Ok(());
    }

    let axes: Vec<(String, Vec<String>)> = sweeps.iter().map(|s| parse_sweep(s)).collect::<Result<_, _>>()?;
    let points = sweep_points(&axes);
    let scenarios: Vec<(Vec<(String, String)>, Scenario)> = points
        .into_iter()
        .map(|pt| {
            let mut t = table.clone();
            for (k, v) in &pt {
                set_key(&mut t, k, parse_value(k, v)?)?;
            }
            Ok((pt, Scenario::from_table(t)?))
        })
        .collect::<Result<_, CliError>>()?;

    let results: Vec<(SweepEntry, Result<Vec<PathBuf>, CliError>)> = scenarios
        .par_iter()
        .map(|(pt, sc)| {
            let dir_name = point_dir(pt);
            let dir = root.join(&dir_name);
            let res = run_scenario(sc).and_then(|b| {
                let (vx, vp, sz) = window_ranges(&b.main.samples, sc.protocol.transient);
                write_bundle(&b, sc, &dir).map(|w| (w, vx, vp, sz))
            });
            match res {
                Ok((w, var_x, var_p, sigma22)) => (
                    SweepEntry {
                        point: pt.clone(),
                        directory: dir_name,
                        status: "ok".into(),
                        var_x,
                        var_p,
                        sigma22,
                    },
                    Ok(w),
                ),
                Err(e) => (
                    SweepEntry {
                        point: pt.clone(),
                        directory: dir_name,
                        status: e.to_string(),
                        var_x: None,
                        var_p: None,
                        sigma22: None,
                    },
                    Err(e),
                ),
            }
        })
        .collect();

    let entries: Vec<&SweepEntry> = results.iter().map(|r| &r.0).collect();
    let sweep_path = root.join("sweep.json");
    write_atomic(&sweep_path, to_json(&entries).as_bytes()).map_err(|e| io_err(&sweep_path, e))?;
    let mut worst: Option<CliError> = None;
    for (entry, res) in results {
        match res {
            Ok(files) => {
                for p in files {
                    println!("wrote {}", p.display());
                }
            }
            Err(e) => {
                eprintln!("{}: {e}", entry.directory);
                if worst.as_ref().is_none_or(|w| e.exit_code() > w.exit_code()) {
                    worst = Some(e);
                }
            }
        }
    }
    println!("wrote {}", sweep_path.display());
    worst.map_or(Ok(()), Err)
}

/// `rabisq compare`.
pub fn compare_command(a: &Path, b: &Path, transient: f64) -> Result<String, CliError> {
    let read = |p: &Path| -> Result<Vec<Sample>, CliError> {
        let text = std::fs::read_to_string(p).map_err(|e| io_err(p, e))?;
        output::read_timeseries(&text).map_err(|m| CliError::config(format!("{}: {m}", p.display())))
    };
    let report = compare(&read(a)?, &read(b)?, transient).map_err(|e| CliError::config(e.to_string()))?;
    Ok(to_json(&report))
}

/// Entry point shared by the binary.
pub fn main_with(cli: Cli) -> ExitCode {
    let result = match cli.command {
        Command::Run {
            file,
            sweep,
            out,
            engine,
            rtol,
            cutoff,
        } => run_command(&file, &sweep, &out, engine.as_deref(), rtol, cutoff),
        Command::Compare { a, b, transient } => compare_command(&a, &b, transient).map(|r| print!("{r}")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rabisq: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
