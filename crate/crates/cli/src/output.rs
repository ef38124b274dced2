//! CSV tables and JSON sidecars.

use crate::config::CliResult;
use photonlab::engines::{JointDistribution, Metadata};
use serde_json::{json, Map, Value};
use std::path::{Path, PathBuf};

/// Tail mass above which a run is reported as degraded.
pub const DEGRADED_TAIL: f64 = 1e-9;

/// 17 significant digits, round-trips every `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn axis_name(m: usize) -> String {
    format!("n{}", m + 1)
}

/// Comma-separated with a header row and LF line endings.
pub fn write_csv(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(csv_io)?;
    w.write_record(header).map_err(csv_io)?;
    for r in rows {
        w.write_record(&r).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e.to_string())
}

/// Every cell of a distribution as `counts..., probability`.
pub fn write_distribution(path: &Path, dist: &JointDistribution, axes: &[usize]) -> CliResult<()> {
    let mut header: Vec<String> = axes.iter().map(|&m| axis_name(m)).collect();
    header.push("probability".into());
    let probs = dist.probs();
    let rows = probs.iter().enumerate().map(|(i, p)| {
        let mut r: Vec<String> = dist.counts_of(i).iter().map(|c| c.to_string()).collect();
        r.push(fmt_f64(*p));
        r
    });
    write_csv(path, &header, rows)
}

pub fn meta_json(m: &Metadata) -> Value {
    json!({
        "engine": m.engine.name(),
        "tail_mass": m.tail_bound,
        "quadrature": {
            "phase_nodes": m.phase_nodes,
            "radial_nodes": m.radial_nodes,
            "achieved_tol": m.achieved_tol,
            "components": m.components,
        },
    })
}

/// Accumulates the sidecar of one run.
#[derive(Debug)]
pub struct Sidecar {
    fields: Map<String, Value>,
    files: Vec<PathBuf>,
    tail: f64,
    warnings: Vec<String>,
}

impl Sidecar {
    pub fn new(command: &str) -> Self {
        let mut fields = Map::new();
        fields.insert("command".into(), json!(command));
        Sidecar {
            fields,
            files: vec![],
            tail: 0.0,
            warnings: vec![],
        }
    }

    pub fn set(&mut self, key: &str, v: Value) {
        self.fields.insert(key.into(), v);
    }

    /// Record an engine result; the largest tail mass decides degradation.
    pub fn engine(&mut self, m: &Metadata) {
        self.tail = self.tail.max(m.tail_bound);
        let j = meta_json(m);
        for (k, v) in j.as_object().unwrap() {
            self.fields.insert(k.clone(), v.clone());
        }
    }

    pub fn tail(&mut self, t: f64) {
        self.tail = self.tail.max(t);
    }

    pub fn file(&mut self, p: PathBuf) {
        self.files.push(p);
    }

    pub fn warn(&mut self, w: String) {
        self.warnings.push(w);
    }

    pub fn degraded(&self) -> bool {
        self.tail > DEGRADED_TAIL
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }

    pub fn write(&mut self, path: &Path, wall: f64) -> CliResult<()> {
        if self.degraded() {
            self.warnings
                .push(format!("tail mass {:.3e} exceeds {DEGRADED_TAIL:e}", self.tail));
        }
        let mut f = self.fields.clone();
        f.insert("tail_mass".into(), json!(self.tail));
        f.insert("degraded".into(), json!(self.degraded()));
        f.insert("wall_time_s".into(), json!(wall));
        f.insert("warnings".into(), json!(self.warnings));
        let names: Vec<String> = self
            .files
            .iter()
            .map(|p| p.file_name().map_or(String::new(), |n| n.to_string_lossy().into_owned()))
            .collect();
        f.insert("files".into(), json!(names));
        std::fs::write(path, serde_json::to_string_pretty(&Value::Object(f)).unwrap() + "\n")?;
        Ok(())
    }
}
