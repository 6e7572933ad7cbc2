use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::config::ScenarioConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|value - reference| <= tolerance`.
    Near,
    /// `value <= tolerance`.
    AtMost,
    /// `value >= tolerance`.
    AtLeast,
    /// `value` is 1 (true) or 0 (false).
    Holds,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub relation: Relation,
    pub value: f64,
    pub reference: Option<f64>,
    pub tolerance: Option<f64>,
    pub passed: bool,
}

impl Check {
    pub fn near(name: impl Into<String>, value: f64, reference: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            relation: Relation::Near,
            value,
            reference: Some(reference),
            tolerance: Some(tolerance),
            passed: (value - reference).abs() <= tolerance,
        }
    }

    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            relation: Relation::AtMost,
            value,
            reference: None,
            tolerance: Some(tolerance),
            passed: value <= tolerance,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            relation: Relation::AtLeast,
            value,
            reference: None,
            tolerance: Some(bound),
            passed: value >= bound,
        }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            relation: Relation::Holds,
            value: if ok { 1.0 } else { 0.0 },
            reference: Some(1.0),
            tolerance: None,
            passed: ok,
        }
    }
}

/// Where a reference value comes from.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub quantity: String,
    pub reference: String,
    pub basis: String,
}

impl Provenance {
    pub fn new(quantity: &str, reference: &str, basis: &str) -> Self {
        Self {
            quantity: quantity.into(),
            reference: reference.into(),
            basis: basis.into(),
        }
    }
}

/// Tabular data written as CSV next to the report.
#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new<const N: usize>(name: &str, header: [&'static str; N], rows: impl IntoIterator<Item = [f64; N]>) -> Self {
        Self {
            name: name.into(),
            header: header.to_vec(),
            rows: rows.into_iter().map(|r| r.to_vec()).collect(),
        }
    }

    /// CSV text with a header row and 17 significant digits per value.
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub inputs: ScenarioConfig,
    pub results: serde_json::Value,
    pub checks: Vec<Check>,
    pub provenance: Vec<Provenance>,
    #[serde(skip)]
    pub series: Vec<Series>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }

    /// Pretty JSON; depends only on the inputs.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Writes `report.json`, `metadata.json` and any series into `dir`.
    pub fn write(&self, dir: &Path, csv: bool) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
        write_file(&dir.join("report.json"), &self.to_json())?;
        let unix_time = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let meta = serde_json::json!({
            "scenario": self.inputs.scenario.name(),
            "seed": self.inputs.seed,
            "unix_time": unix_time,
            "version": env!("CARGO_PKG_VERSION"),
        });
        write_file(&dir.join("metadata.json"), &serde_json::to_string_pretty(&meta).expect("metadata serializes"))?;
        if csv {
            for s in &self.series {
                emit_series(s, &dir.join(format!("{}.csv", s.name)))?;
            }
        }
        Ok(())
    }
}

pub fn emit_series(series: &Series, path: &Path) -> Result<()> {
    write_file(path, &series.to_csv())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}
