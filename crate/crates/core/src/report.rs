//! Machine-readable run reports.
//!
//! Reports serialize to key-sorted JSON with a fixed 17-significant-digit
//! float rendering, so identical inputs, flags, and seeds reproduce the
//! same bytes (the `wall_clock_ms` provenance field is the one value that
//! varies between runs). Indices in reports are 1-based, matching the
//! constraint file syntax.

use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::estimator::FitResult;
use crate::inference::{BootstrapMode, BootstrapReport};
use crate::qp::SolveStatus;
use crate::tuning::TuningCurve;

/// JSON value for an `f64`, mapping non-finite values to strings.
pub fn json_f64(v: f64) -> Value {
    match serde_json::Number::from_f64(v) {
        Some(n) => Value::Number(n),
        None => Value::String(if v.is_nan() {
            "nan".to_string()
        } else if v > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        }),
    }
}

fn json_vec(v: impl IntoIterator<Item = f64>) -> Value {
    Value::Array(v.into_iter().map(json_f64).collect())
}

fn one_based(indices: &[usize]) -> Value {
    Value::Array(indices.iter().map(|&i| Value::from(i as u64 + 1)).collect())
}

pub fn fit_value(fit: &FitResult) -> Value {
    let mut m = Map::new();
    m.insert("beta".into(), json_vec(fit.beta.iter().copied()));
    m.insert("intercept".into(), json_f64(fit.intercept));
    m.insert("l1_norm".into(), json_f64(fit.l1_norm));
    m.insert("objective".into(), json_f64(fit.objective));
    m.insert("df".into(), Value::from(fit.df as u64));
    m.insert("zero_set".into(), one_based(&fit.zero_set));
    m.insert(
        "active_constraints".into(),
        one_based(&fit.active_constraints),
    );
    let mut solver = Map::new();
    solver.insert(
        "qp_iterations".into(),
        Value::from(fit.solver_info.qp_iterations as u64),
    );
    solver.insert(
        "linearization_rounds".into(),
        Value::from(fit.solver_info.linearization_rounds as u64),
    );
    solver.insert(
        "status".into(),
        Value::String(
            match fit.solver_info.status {
                SolveStatus::Optimal => "optimal",
                SolveStatus::Infeasible => "infeasible",
                SolveStatus::IterationLimit => "iteration_limit",
            }
            .into(),
        ),
    );
    solver.insert(
        "l1_multiplier".into(),
        fit.solver_info
            .l1_multiplier
            .map(json_f64)
            .unwrap_or(Value::Null),
    );
    solver.insert("jitter".into(), json_f64(fit.solver_info.jitter));
    solver.insert(
        "standardized".into(),
        Value::Bool(fit.solver_info.standardized),
    );
    m.insert("solver_info".into(), Value::Object(solver));
    if !fit.warnings.is_empty() {
        m.insert(
            "warnings".into(),
            Value::Array(
                fit.warnings
                    .iter()
                    .map(|w| Value::String(w.clone()))
                    .collect(),
            ),
        );
    }
    Value::Object(m)
}

pub fn curve_value(curve: &TuningCurve) -> Value {
    let mut m = Map::new();
    m.insert(
        "criterion".into(),
        Value::String(curve.criterion.name().into()),
    );
    if let Some(f) = curve.folds {
        m.insert("folds".into(), Value::from(f as u64));
    }
    let points: Vec<Value> = curve
        .grid
        .iter()
        .zip(&curve.values)
        .zip(&curve.valid)
        .map(|((&s, &v), &ok)| {
            let mut p = Map::new();
            p.insert("s".into(), json_f64(s));
            p.insert("value".into(), if ok { json_f64(v) } else { Value::Null });
            p.insert("valid".into(), Value::Bool(ok));
            Value::Object(p)
        })
        .collect();
    m.insert("curve".into(), Value::Array(points));
    m.insert(
        "selected_index".into(),
        Value::from(curve.selected_index as u64 + 1),
    );
    m.insert("selected_s".into(), json_f64(curve.selected_s));
    Value::Object(m)
}

/// Tuning curve as CSV (`s,value,valid`).
pub fn curve_csv(curve: &TuningCurve) -> String {
    let mut out = String::from("s,value,valid\n");
    for ((s, v), ok) in curve.grid.iter().zip(&curve.values).zip(&curve.valid) {
        if *ok {
            out.push_str(&format!("{s},{v},1\n"));
        } else {
            out.push_str(&format!("{s},,0\n"));
        }
    }
    out
}

pub fn bootstrap_value(report: &BootstrapReport) -> Value {
    let mut m = Map::new();
    m.insert("B".into(), Value::from(report.replicates as u64));
    m.insert(
        "mode".into(),
        Value::String(
            match report.mode {
                BootstrapMode::FixedS => "fixed",
                BootstrapMode::ReTuned => "retune",
            }
            .into(),
        ),
    );
    m.insert("se".into(), json_vec(report.se.iter().copied()));
    m.insert(
        "selection_freq".into(),
        json_vec(report.selection_freq.iter().copied()),
    );
    m.insert("seed".into(), Value::from(report.seed));
    m.insert("failures".into(), Value::from(report.failures as u64));
    m.insert("reliable".into(), Value::Bool(report.reliable));
    Value::Object(m)
}

/// SHA-256 digest of a file, lowercase hex.
pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let hash = Sha256::digest(&bytes);
    Ok(hash.iter().map(|b| format!("{b:02x}")).collect())
}

/// Provenance block: digests of the inputs, the seed, tool version, and
/// wall-clock time.
pub fn provenance(
    inputs: &[(&str, &Path)],
    seed: Option<u64>,
    version: &str,
    wall_clock_ms: u64,
) -> Result<Value> {
    let mut m = Map::new();
    let mut digests = Map::new();
    for (name, path) in inputs {
        digests.insert((*name).into(), Value::String(file_digest(path)?));
    }
    m.insert("input_digests".into(), Value::Object(digests));
    if let Some(s) = seed {
        m.insert("seed".into(), Value::from(s));
    }
    m.insert("tool_version".into(), Value::String(version.into()));
    m.insert("wall_clock_ms".into(), Value::from(wall_clock_ms));
    Ok(Value::Object(m))
}

struct FixedFloats;

impl serde_json::ser::Formatter for FixedFloats {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        // 17 significant digits: exact round trip for every f64.
        write!(writer, "{value:.16e}")
    }
}

/// Renders a report with sorted keys and fixed float formatting, with a
/// trailing newline.
pub fn render(value: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats);
    serde::Serialize::serialize(value, &mut ser).expect("report serialization cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("report JSON is UTF-8")
}
