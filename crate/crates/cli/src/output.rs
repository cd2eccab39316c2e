//! Tabular output with a metadata header, as CSV or JSON.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::Format;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format_sig9(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Int(n) => Value::from(*n),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Bool(b) => Value::from(*b),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}

impl From<u32> for Cell {
    fn from(n: u32) -> Self {
        Cell::Int(n as u64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

/// Nine significant digits, '.' separator, independent of locale.
/// Plain notation for moderate magnitudes, scientific otherwise.
pub fn format_sig9(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn json_rows(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> =
                        self.columns.iter().cloned().zip(row.iter().map(Cell::json)).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

/// Header carried by every output file: enough to re-create it.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub generator: String,
    pub command: String,
    pub seed: Option<u64>,
    pub config: Value,
}

impl Metadata {
    pub fn new(command: &str, seed: Option<u64>, config: &impl Serialize) -> Self {
        Metadata {
            generator: format!("pcd-epp {}", env!("CARGO_PKG_VERSION")),
            command: command.to_string(),
            seed,
            config: serde_json::to_value(config).expect("configs serialize to JSON"),
        }
    }

    fn csv_lines(&self) -> String {
        let mut s = format!("# generator: {}\n# command: {}\n", self.generator, self.command);
        if let Some(seed) = self.seed {
            s.push_str(&format!("# seed: {seed}\n"));
        }
        s.push_str(&format!("# config: {}\n", self.config));
        s
    }
}

pub fn render(meta: &Metadata, table: &Table, format: Format) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Csv => {
            let mut buf = meta.csv_lines().into_bytes();
            {
                let mut w = csv::Writer::from_writer(&mut buf);
                let fail = |e: csv::Error| CliError::io("formatting CSV", std::io::Error::other(e));
                w.write_record(&table.columns).map_err(fail)?;
                for row in &table.rows {
                    w.write_record(row.iter().map(Cell::csv)).map_err(fail)?;
                }
                w.flush().map_err(|e| CliError::io("formatting CSV", e))?;
            }
            Ok(buf)
        }
        Format::Json => {
            let mut doc = Map::new();
            doc.insert("metadata".into(), serde_json::to_value(meta).expect("metadata serializes"));
            doc.insert("rows".into(), table.json_rows());
            json_bytes(&Value::Object(doc))
        }
    }
}

/// JSON document with the metadata block and an error record.
pub fn render_error(meta: &Metadata, kind: &str, message: &str, format: Format, fields: &[(&str, Cell)]) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Csv => {
            let mut cols = vec!["error", "message"];
            cols.extend(fields.iter().map(|(k, _)| *k));
            let mut t = Table::new(&cols);
            let mut row = vec![Cell::from(kind), Cell::from(message)];
            row.extend(fields.iter().map(|(_, v)| v.clone()));
            t.push(row);
            render(meta, &t, format)
        }
        Format::Json => {
            let mut err = Map::new();
            err.insert("kind".into(), Value::from(kind));
            err.insert("message".into(), Value::from(message));
            for (k, v) in fields {
                err.insert(k.to_string(), v.json());
            }
            let mut doc = Map::new();
            doc.insert("metadata".into(), serde_json::to_value(meta).expect("metadata serializes"));
            doc.insert("error".into(), Value::Object(err));
            json_bytes(&Value::Object(doc))
        }
    }
}

fn json_bytes(v: &Value) -> Result<Vec<u8>, CliError> {
    let mut out = serde_json::to_vec_pretty(v).map_err(|e| CliError::io("formatting JSON", e.into()))?;
    out.push(b'\n');
    Ok(out)
}

/// Writes to `path`, or to stdout when no path is given.
pub fn emit(bytes: &[u8], path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::io(format!("writing {}", p.display()), e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| CliError::io("writing to stdout", e))
        }
    }
}
