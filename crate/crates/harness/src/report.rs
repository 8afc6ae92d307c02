use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub name: String,
    /// The property being checked, in words.
    pub anchor: String,
    pub pass: bool,
    /// NaN (serialized as null) for records that failed with an error.
    #[serde(deserialize_with = "nullable_f64")]
    pub margin: f64,
    pub tolerance: f64,
    pub runtime_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn nullable_f64<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

impl Record {
    /// `pass = margin ≥ -tolerance`. A NaN margin fails.
    pub fn new(name: impl Into<String>, anchor: &str, margin: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.to_string(),
            pass: margin >= -tolerance,
            margin,
            tolerance,
            runtime_ms: 0.0,
            error: None,
        }
    }

    pub fn failed(name: impl Into<String>, anchor: &str, error: String) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.to_string(),
            pass: false,
            margin: f64::NAN,
            tolerance: 0.0,
            runtime_ms: 0.0,
            error: Some(error),
        }
    }
}

/// Quantities that are reported but never decide pass or fail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub seeds: Vec<u64>,
    pub config_hash: String,
    pub version: String,
    pub threads: usize,
    pub timestamp: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub environment: Environment,
    pub records: Vec<Record>,
    pub observations: Vec<Observation>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(|r| !r.pass)
    }

    /// Copy with wall-clock fields zeroed; equal for equal config and seed.
    pub fn without_timing(&self) -> Report {
        let mut r = self.clone();
        r.environment.timestamp = 0;
        r.environment.threads = 0;
        for rec in &mut r.records {
            rec.runtime_ms = 0.0;
        }
        r
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

pub const CSV_HEADER: [&str; 8] = [
    "name",
    "anchor",
    "pass",
    "margin",
    "tolerance",
    "runtime_ms",
    "error",
    "config_hash",
];

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |e| HarnessError::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

pub fn report_csv(report: &Report) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| HarnessError::Config(format!("csv encoding: {e}"));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in &report.records {
        w.write_record([
            r.name.clone(),
            r.anchor.clone(),
            r.pass.to_string(),
            format!("{:e}", r.margin),
            format!("{:e}", r.tolerance),
            format!("{:.3}", r.runtime_ms),
            r.error.clone().unwrap_or_default(),
            report.environment.config_hash.clone(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Config(format!("csv encoding: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes `report.json` or `report.csv` into `dir` and returns the path.
pub fn emit_report(report: &Report, dir: &Path, format: Format) -> Result<PathBuf, HarnessError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let (path, body) = match format {
        Format::Json => (
            dir.join("report.json"),
            serde_json::to_string_pretty(report).expect("report serializes") + "\n",
        ),
        Format::Csv => (dir.join("report.csv"), report_csv(report)?),
    };
    std::fs::write(&path, body).map_err(io_err(&path))?;
    Ok(path)
}
