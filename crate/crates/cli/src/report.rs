use std::io::Write;

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Rows are outcomes; the header is always written.
#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

pub struct Report {
    pub command: String,
    pub parameters: Value,
    pub seed: Option<u64>,
    pub payload: Value,
    pub table: Table,
    /// Set when a verification failed; the text names the witness.
    pub failure: Option<String>,
}

#[derive(Serialize)]
struct Envelope<'a> {
    command: &'a str,
    parameters: &'a Value,
    version: &'static str,
    seed: Option<u64>,
    payload: &'a Value,
}

impl Report {
    pub fn write(&self, format: Format, out: &mut impl Write) -> std::io::Result<()> {
        match format {
            Format::Json => {
                let envelope = Envelope {
                    command: &self.command,
                    parameters: &self.parameters,
                    version: env!("CARGO_PKG_VERSION"),
                    seed: self.seed,
                    payload: &self.payload,
                };
                serde_json::to_writer_pretty(&mut *out, &envelope)?;
                writeln!(out)
            }
            Format::Csv => {
                let params = match &self.parameters {
                    Value::Object(map) => map
                        .iter()
                        .filter(|(_, v)| !v.is_null())
                        .map(|(k, v)| format!("{k}={}", plain(v)))
                        .collect::<Vec<_>>()
                        .join(" "),
                    _ => String::new(),
                };
                writeln!(
                    out,
                    "# lonely {} {} {params}",
                    env!("CARGO_PKG_VERSION"),
                    self.command
                )?;
                let mut w = csv::Writer::from_writer(&mut *out);
                w.write_record(&self.table.header)?;
                for row in &self.table.rows {
                    w.write_record(row)?;
                }
                w.flush()
            }
        }
    }
}

fn plain(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn join_path(path: &[usize]) -> String {
    path.iter().map(usize::to_string).collect::<Vec<_>>().join("-")
}

pub fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}
