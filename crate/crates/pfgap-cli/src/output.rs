//! Tables with a metadata header, written as CSV (with `#` comment lines) or JSON.

use crate::args::{Format, Tolerances};
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::io::Write;
use std::path::Path;

pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn records(&self) -> Vec<Value> {
        self.rows
            .iter()
            .map(|r| Value::Object(self.columns.iter().map(|c| c.to_string()).zip(r.iter().cloned()).collect()))
            .collect()
    }
}

/// Everything needed to reproduce a run.
#[derive(Serialize)]
pub struct Meta<'a, S: Serialize> {
    pub version: &'static str,
    pub command_line: String,
    pub seed: Option<u64>,
    pub tolerances: Tolerances,
    /// The parsed arguments, defaults included.
    pub run: &'a S,
}

/// Format from the explicit flag, else the file extension, else the command's default.
pub fn resolve_format(flag: Option<Format>, out: Option<&Path>, default: Format) -> Format {
    flag.or_else(|| match out?.extension()?.to_str()? {
        "json" => Some(Format::Json),
        "csv" => Some(Format::Csv),
        _ => None,
    })
    .unwrap_or(default)
}

pub fn render<S: Serialize>(table: &Table, meta: &Meta<S>, format: Format) -> Result<Vec<u8>, String> {
    let mut buf = Vec::new();
    match format {
        Format::Json => {
            let mut doc = Map::new();
            doc.insert("meta".into(), serde_json::to_value(meta).map_err(|e| e.to_string())?);
            doc.insert("rows".into(), Value::Array(table.records()));
            serde_json::to_writer_pretty(&mut buf, &doc).map_err(|e| e.to_string())?;
            buf.push(b'\n');
        }
        Format::Csv => {
            let run = serde_json::to_string(meta.run).map_err(|e| e.to_string())?;
            let tol = json!(meta.tolerances).to_string();
            let seed = meta.seed.map_or("none".to_string(), |s| s.to_string());
            for line in [
                format!("pfgap {}", meta.version),
                format!("command: {}", meta.command_line),
                format!("seed: {seed}"),
                format!("tolerances: {tol}"),
                format!("run: {run}"),
            ] {
                writeln!(buf, "# {line}").map_err(|e| e.to_string())?;
            }
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(&table.columns).map_err(|e| e.to_string())?;
            for row in &table.rows {
                w.write_record(row.iter().map(cell)).map_err(|e| e.to_string())?;
            }
            w.flush().map_err(|e| e.to_string())?;
        }
    }
    Ok(buf)
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// JSON number, or null for non-finite values.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}
