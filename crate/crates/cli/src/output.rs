//! Rendering of command results with a reproducibility header.
//!
//! Output never contains timestamps, paths or thread counts, so identical
//! configuration and seed give byte-identical files.

use serde::Serialize;
use serde_json::{json, Value};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_hash: String,
    pub seed: u64,
}

/// A command result: a table for CSV and a document for JSON.
#[derive(Clone, Debug)]
pub struct Report {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub json: Value,
    pub default_format: Format,
    /// `verify` reports failures through the exit code after writing output.
    pub failed: bool,
}

impl Report {
    pub fn table<S: Into<String>>(columns: Vec<S>, rows: Vec<Vec<String>>) -> Self {
        let columns: Vec<String> = columns.into_iter().map(Into::into).collect();
        let json = Value::Array(
            rows.iter()
                .map(|r| Value::Object(columns.iter().cloned().zip(r.iter().map(|c| Value::String(c.clone()))).collect()))
                .collect(),
        );
        Report { columns, rows, json, default_format: Format::Csv, failed: false }
    }

    /// JSON-first result; the CSV form lists top-level keys and compact values.
    pub fn document(json: Value) -> Self {
        let rows = match &json {
            Value::Object(map) => map.iter().map(|(k, v)| vec![k.clone(), scalar(v)]).collect(),
            other => vec![vec!["value".into(), scalar(other)]],
        };
        Report { columns: vec!["key".into(), "value".into()], rows, json, default_format: Format::Json, failed: false }
    }

    pub fn with_json(mut self, json: Value) -> Self {
        self.json = json;
        self
    }

    pub fn json_default(mut self) -> Self {
        self.default_format = Format::Json;
        self
    }

    pub fn render(&self, header: &Header, format: Option<Format>) -> Result<Vec<u8>, CliError> {
        match format.unwrap_or(self.default_format) {
            Format::Csv => {
                let mut out = format!(
                    "# {} {} config={} seed={}\n",
                    header.tool, header.version, header.config_hash, header.seed
                )
                .into_bytes();
                let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
                w.write_record(&self.columns).map_err(io_err)?;
                for r in &self.rows {
                    w.write_record(r).map_err(io_err)?;
                }
                out.extend(w.into_inner().map_err(|e| CliError::Io(e.to_string()))?);
                Ok(out)
            }
            Format::Json => {
                let doc = json!({ "header": header, "result": self.json });
                let mut out = serde_json::to_vec_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?;
                out.push(b'\n');
                Ok(out)
            }
        }
    }
}

fn io_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn bool_cell(b: bool) -> String {
    if b { "true" } else { "false" }.into()
}

/// Shortest round-trip decimal form of a float.
pub fn float_cell(x: f64) -> String {
    format!("{x:?}")
}
