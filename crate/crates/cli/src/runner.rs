//! Runs one experiment or a sweep and writes its artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::experiments::{run_experiment, Kind, Outcome};
use crate::output::{write_json, Table};

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub key: String,
    pub values: Vec<f64>,
}

impl Sweep {
    /// Parses `key=v1,v2,...`.
    pub fn parse(text: &str) -> CliResult<Self> {
        let (key, list) = text
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("sweep `{text}` is not key=v1,v2,...")))?;
        let key = key.trim().to_string();
        if !Config::is_known_key(&key) {
            return Err(CliError::config(key, "unknown sweep key"));
        }
        let values = list
            .split(',')
            .map(|v| {
                let x: f64 = v.trim().parse().map_err(|_| {
                    CliError::config(key.clone(), format!("sweep value `{}` is not a number", v.trim()))
                })?;
                if x.is_finite() {
                    Ok(x)
                } else {
                    Err(CliError::config(key.clone(), "sweep value is not finite"))
                }
            })
            .collect::<CliResult<Vec<_>>>()?;
        if values.is_empty() {
            return Err(CliError::config(key, "empty sweep"));
        }
        Ok(Sweep { key, values })
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub kind: Kind,
    pub config: Config,
    /// Several sweeps run over their cartesian product.
    pub sweeps: Vec<Sweep>,
    pub out: PathBuf,
}

/// What the caller prints and how it exits.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub pass: bool,
    pub text: String,
    pub artifacts: Vec<PathBuf>,
}

impl RunResult {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

fn write_outcome(kind: Kind, o: &Outcome, dir: &Path) -> CliResult<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut paths = Vec::new();
    for (name, table) in &o.tables {
        let path = dir.join(format!("{name}.csv"));
        table.write(&path)?;
        paths.push(path);
    }
    let path = dir.join(format!("{}.json", kind.name()));
    write_json(&path, &o.summary)?;
    paths.push(path);
    Ok(paths)
}

fn value_label(v: f64) -> String {
    format!("{v}")
}

/// `increasing`, `decreasing`, `constant` or `mixed` for each numeric summary
/// field across the sweep.
fn trends(outcomes: &[Outcome]) -> Map<String, Value> {
    let mut out = Map::new();
    let Some(first) = outcomes.first() else { return out };
    for key in first.summary.keys() {
        let vals: Option<Vec<f64>> = outcomes
            .iter()
            .map(|o| o.summary.get(key).and_then(Value::as_f64))
            .collect();
        let Some(vals) = vals else { continue };
        let up = vals.windows(2).all(|w| w[1] > w[0]);
        let down = vals.windows(2).all(|w| w[1] < w[0]);
        let flat = vals.windows(2).all(|w| w[1] == w[0]);
        let label = if vals.len() < 2 || flat {
            "constant"
        } else if up {
            "increasing"
        } else if down {
            "decreasing"
        } else {
            "mixed"
        };
        out.insert(key.clone(), json!(label));
    }
    out
}

pub fn run(spec: &ExperimentSpec) -> CliResult<RunResult> {
    if spec.sweeps.is_empty() {
        let o = run_experiment(spec.kind, &spec.config, &spec.out)?;
        let artifacts = write_outcome(spec.kind, &o, &spec.out)?;
        return Ok(RunResult {
            pass: o.pass.unwrap_or(true),
            text: o.text.unwrap_or_else(|| summary_line(spec.kind, &artifacts)),
            artifacts,
        });
    }
    run_sweep(spec)
}

fn summary_line(kind: Kind, artifacts: &[PathBuf]) -> String {
    let names: Vec<String> = artifacts.iter().map(|p| p.display().to_string()).collect();
    format!("{} finished: {}\n", kind.name(), names.join(", "))
}

/// Every combination of sweep values, first sweep varying slowest.
fn combinations(sweeps: &[Sweep]) -> Vec<Vec<f64>> {
    sweeps.iter().fold(vec![Vec::new()], |acc, sw| {
        acc.iter()
            .flat_map(|head| {
                sw.values.iter().map(move |&v| {
                    let mut c = head.clone();
                    c.push(v);
                    c
                })
            })
            .collect()
    })
}

fn combo_label(keys: &[&str], combo: &[f64]) -> String {
    keys.iter()
        .zip(combo)
        .map(|(k, v)| format!("{k}={}", value_label(*v)))
        .collect::<Vec<_>>()
        .join(",")
}

fn run_sweep(spec: &ExperimentSpec) -> CliResult<RunResult> {
    let keys: Vec<&str> = spec.sweeps.iter().map(|s| s.key.as_str()).collect();
    for (i, k) in keys.iter().enumerate() {
        if keys[..i].contains(k) {
            return Err(CliError::config(*k, "swept more than once"));
        }
    }
    let combos = combinations(&spec.sweeps);
    let instances: Vec<(PathBuf, Outcome)> = combos
        .par_iter()
        .map(|combo| {
            let mut cfg = spec.config.clone();
            for (k, v) in keys.iter().zip(combo) {
                cfg.set(k, *v)?;
            }
            let dir = spec.out.join(combo_label(&keys, combo));
            let o = run_experiment(spec.kind, &cfg, &dir)?;
            write_outcome(spec.kind, &o, &dir)?;
            Ok((dir, o))
        })
        .collect::<CliResult<_>>()?;

    let outcomes: Vec<Outcome> = instances.iter().map(|(_, o)| o.clone()).collect();
    let mut artifacts = Vec::new();
    if let Some((name, first)) = outcomes[0].tables.first() {
        // swept keys the table already carries are not repeated
        let extra: Vec<usize> = (0..keys.len())
            .filter(|&i| !first.headers.iter().any(|h| h == keys[i]))
            .collect();
        let mut headers: Vec<&str> = extra.iter().map(|&i| keys[i]).collect();
        headers.extend(first.headers.iter().map(String::as_str));
        let mut combined = Table::new(&headers);
        for (combo, o) in combos.iter().zip(&outcomes) {
            if let Some((_, t)) = o.tables.iter().find(|(n, _)| n == name) {
                for row in &t.rows {
                    let mut r: Vec<f64> = extra.iter().map(|&i| combo[i]).collect();
                    r.extend(row);
                    combined.push(r);
                }
            }
        }
        let path = spec.out.join("sweep.csv");
        fs::create_dir_all(&spec.out)?;
        combined.write(&path)?;
        artifacts.push(path);
    }
    let pass = outcomes.iter().all(|o| o.pass.unwrap_or(true));
    let mut summary = json!({
        "experiment": spec.kind.name(),
        "sweep_keys": keys,
        "values": combos,
        "pass": pass,
        "instances": outcomes.iter().map(|o| Value::Object(o.summary.clone())).collect::<Vec<_>>(),
    });
    // a trend is only meaningful along a single swept key
    if keys.len() == 1 {
        summary["trends"] = Value::Object(trends(&outcomes));
    }
    let path = spec.out.join("sweep.json");
    write_json(&path, &summary)?;
    artifacts.push(path);
    let mut text = String::new();
    for ((dir, o), combo) in instances.iter().zip(&combos) {
        text.push_str(&format!("[{}] {}\n", combo_label(&keys, combo), dir.display()));
        if let Some(t) = &o.text {
            text.push_str(t);
        }
    }
    text.push_str(&summary_line(spec.kind, &artifacts));
    Ok(RunResult { pass, text, artifacts })
}
