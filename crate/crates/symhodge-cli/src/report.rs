//! Tabular results plus named assertions, written as one CSV and one JSON file.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::ExperimentConfig;

#[derive(Clone, Debug, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub assertions: Vec<Assertion>,
    /// Extra experiment-level values (cutoff diagnostics and the like).
    pub summary: Map<String, Value>,
}

/// Float cell: non-finite values become null.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn csv_cell(v: &Value) -> String {
    let s = match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s
    }
}

impl Report {
    pub fn new(config: &ExperimentConfig, columns: &[&str]) -> Self {
        Report {
            experiment: config.experiment.clone(),
            config: config.clone(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            assertions: Vec::new(),
            summary: Map::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<Value>) {
        assert_eq!(cells.len(), self.columns.len(), "row width must match the header");
        self.rows.push(cells);
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) -> bool {
        self.assertions.push(Assertion { name: name.into(), passed, detail: detail.into() });
        passed
    }

    pub fn note(&mut self, key: &str, value: Value) {
        self.summary.insert(key.to_string(), value);
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn failures(&self) -> Vec<&Assertion> {
        self.assertions.iter().filter(|a| !a.passed).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.iter().map(csv_cell).collect::<Vec<_>>().join(","));
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Object(self.columns.iter().cloned().zip(r.iter().cloned()).collect()))
            .collect();
        json!({
            "experiment": self.experiment,
            "config": self.config,
            "columns": self.columns,
            "rows": rows,
            "summary": self.summary,
            "assertions": self.assertions,
            "passed": self.passed(),
        })
    }

    pub fn json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("report values serialize");
        s.push('\n');
        s
    }

    /// Writes `<out>/<experiment>.csv` and `<out>/<experiment>.json`.
    pub fn write(&self, out: &Path) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        let csv = out.join(format!("{}.csv", self.experiment));
        let js = out.join(format!("{}.json", self.experiment));
        fs::write(&csv, self.to_csv()).with_context(|| format!("writing {}", csv.display()))?;
        fs::write(&js, self.json_string()).with_context(|| format!("writing {}", js.display()))?;
        Ok((csv, js))
    }
}
