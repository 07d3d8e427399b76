//! Machine-readable reports.
//!
//! Reports are `serde_json::Value` trees. Objects keep their keys sorted,
//! so identical inputs give identical bytes.

use std::io::Write;

use admnet::C64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::io::Cx;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

pub struct Report {
    command: &'static str,
    args: Value,
    results: serde_json::Map<String, Value>,
    checks: Vec<Check>,
    table: Option<Table>,
}

pub fn cx(z: C64) -> Value {
    json!(Cx::from(z))
}

/// A computed value together with how it was obtained and the tolerance it
/// was checked under.
pub fn measured(z: C64, method: &str, tolerance: f64) -> Value {
    json!({ "value": cx(z), "method": method, "tolerance": tolerance })
}

pub fn measured_real(x: f64, method: &str, tolerance: f64) -> Value {
    json!({ "value": x, "method": method, "tolerance": tolerance })
}

impl Report {
    pub fn new(command: &'static str, args: Value) -> Self {
        Report {
            command,
            args,
            results: Default::default(),
            checks: Vec::new(),
            table: None,
        }
    }

    pub fn set(&mut self, key: &str, value: Value) {
        self.results.insert(key.to_string(), value);
    }

    pub fn check(&mut self, name: impl Into<String>, residual: f64, tolerance: f64) {
        // NaN residuals fail
        let passed = residual <= tolerance;
        self.checks.push(Check {
            name: name.into(),
            residual,
            tolerance,
            passed,
        });
    }

    pub fn set_table(&mut self, table: Table) {
        self.table = Some(table);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn to_value(&self) -> Value {
        json!({
            "command": self.command,
            "args": self.args,
            "results": Value::Object(self.results.clone()),
            "checks": self.checks,
            "passed": self.passed(),
        })
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> CliResult<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, &self.to_value())?;
                writeln!(out)?;
            }
            Format::Csv => {
                let table = self.table.as_ref().ok_or_else(|| {
                    CliError::Parse(format!("`{}` has no table for csv output", self.command))
                })?;
                let mut w = csv::Writer::from_writer(out);
                w.write_record(&table.header).map_err(csv_err)?;
                for row in &table.rows {
                    w.write_record(row).map_err(csv_err)?;
                }
                w.flush()?;
            }
        }
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}
