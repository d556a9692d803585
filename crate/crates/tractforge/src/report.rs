//! Bit-stable report serialization.
//!
//! Every exported artifact (JSON, CSV, text) has to reproduce byte-for-byte
//! from the same inputs, so floats are always rendered with 17 significant
//! digits (enough to round-trip any `f64` exactly) and JSON object keys are
//! sorted at write time. `serde_json` is used for *reading* interchange files;
//! everything we emit goes through this module instead.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

/// A JSON-like value tree for report output.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    Arr(Vec<Value>),
    Obj(Vec<(String, Value)>),
}

impl Value {
    pub fn obj(fields: impl IntoIterator<Item = (&'static str, Value)>) -> Self {
        Value::Obj(
            fields
                .into_iter()
                .map(|(k, v)| (k.to_owned(), v))
                .collect(),
        )
    }

    pub fn arr(items: impl IntoIterator<Item = Value>) -> Self {
        Value::Arr(items.into_iter().collect())
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Float(x)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<usize> for Value {
    fn from(i: usize) -> Self {
        Value::Int(i as i64)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Str(s.to_owned())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Str(s)
    }
}

/// 17-significant-digit rendering; round-trips every finite `f64` exactly.
/// Non-finite values have no JSON spelling and render as `null`.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{:.16e}", x)
    } else {
        "null".to_owned()
    }
}

fn escape_json(s: &str, out: &mut String) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

fn write_value(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Int(i) => {
            let _ = write!(out, "{i}");
        }
        Value::Float(x) => out.push_str(&format_float(*x)),
        Value::Str(s) => escape_json(s, out),
        Value::Arr(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(item, out);
            }
            out.push(']');
        }
        Value::Obj(fields) => {
            let mut order: Vec<usize> = (0..fields.len()).collect();
            order.sort_by(|&a, &b| fields[a].0.cmp(&fields[b].0));
            out.push('{');
            for (i, &idx) in order.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                escape_json(&fields[idx].0, out);
                out.push(':');
                write_value(&fields[idx].1, out);
            }
            out.push('}');
        }
    }
}

pub fn to_json_string(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, &mut out);
    out.push('\n');
    out
}

/// Tabular report payload with a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| (*s).to_owned()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

fn csv_cell(v: &Value, out: &mut String) {
    match v {
        Value::Null => {}
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Int(i) => {
            let _ = write!(out, "{i}");
        }
        Value::Float(x) => out.push_str(&format_float(*x)),
        Value::Str(s) => {
            if s.contains([',', '"', '\n']) {
                out.push('"');
                out.push_str(&s.replace('"', "\"\""));
                out.push('"');
            } else {
                out.push_str(s);
            }
        }
        other => {
            let mut nested = String::new();
            write_value(other, &mut nested);
            csv_cell(&Value::Str(nested), out);
        }
    }
}

pub fn to_csv_string(table: &Table) -> String {
    let mut out = String::new();
    out.push_str(&table.header.join(","));
    out.push('\n');
    for row in &table.rows {
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            csv_cell(cell, &mut out);
        }
        out.push('\n');
    }
    out
}

/// A report that the CLI can export in any of the three formats.
pub trait Report {
    fn to_value(&self) -> Value;
    fn to_table(&self) -> Option<Table> {
        None
    }
    /// Human-readable rendering; must name every failed check.
    fn to_text(&self) -> String;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}

pub fn render(report: &dyn Report, format: Format) -> String {
    match format {
        Format::Json => to_json_string(&report.to_value()),
        Format::Csv => match report.to_table() {
            Some(table) => to_csv_string(&table),
            None => to_csv_string(&value_as_table(&report.to_value())),
        },
        Format::Text => report.to_text(),
    }
}

/// Fallback CSV shape for reports without a natural table: key,value pairs
/// from the flattened JSON tree.
fn value_as_table(v: &Value) -> Table {
    let mut table = Table::new(&["key", "value"]);
    flatten("", v, &mut table);
    table
}

fn flatten(prefix: &str, v: &Value, table: &mut Table) {
    match v {
        Value::Obj(fields) => {
            let mut order: Vec<usize> = (0..fields.len()).collect();
            order.sort_by(|&a, &b| fields[a].0.cmp(&fields[b].0));
            for idx in order {
                let (k, inner) = &fields[idx];
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, inner, table);
            }
        }
        Value::Arr(items) => {
            for (i, item) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), item, table);
            }
        }
        leaf => table.push(vec![Value::Str(prefix.to_owned()), leaf.clone()]),
    }
}

pub fn export(report: &dyn Report, format: Format, path: &Path) -> Result<(), ReportError> {
    let rendered = render(report, format);
    fs::write(path, rendered).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}
