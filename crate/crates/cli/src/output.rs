use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

/// Bumped whenever a JSON field or CSV column changes meaning or order.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<i8> for Cell {
    fn from(v: i8) -> Self {
        Cell::Int(v.into())
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// What a subcommand produced, in both renderings.
pub struct Output {
    pub json: Value,
    pub table: Table,
}

impl Output {
    pub fn new(command: &str, body: impl Serialize, table: Table) -> Result<Self, CliError> {
        let mut json = serde_json::to_value(body).map_err(|e| CliError::Numerical(e.to_string()))?;
        if let Value::Object(map) = &mut json {
            map.insert("schema_version".into(), SCHEMA_VERSION.into());
            map.insert("command".into(), command.into());
        }
        Ok(Output { json, table })
    }
}

/// serde_json turns NaN and infinities into `null`; outputs never contain a
/// legitimate `null`, so any one found is a leaked non-finite number.
fn find_null(v: &Value, path: &mut String) -> Option<String> {
    match v {
        Value::Null => Some(if path.is_empty() { "$".into() } else { path.clone() }),
        Value::Array(items) => items.iter().enumerate().find_map(|(i, x)| {
            let len = path.len();
            path.push_str(&format!("[{i}]"));
            let hit = find_null(x, path);
            path.truncate(len);
            hit
        }),
        Value::Object(map) => map.iter().find_map(|(k, x)| {
            let len = path.len();
            path.push('.');
            path.push_str(k);
            let hit = find_null(x, path);
            path.truncate(len);
            hit
        }),
        _ => None,
    }
}

/// Shortest representation that round-trips, as in the JSON output.
fn format_num(x: f64) -> String {
    serde_json::to_string(&x).unwrap_or_default()
}

fn render_csv(table: &Table) -> Result<Vec<u8>, CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(&table.header).map_err(io)?;
    for (r, row) in table.rows.iter().enumerate() {
        let mut rec = Vec::with_capacity(row.len());
        for (c, cell) in row.iter().enumerate() {
            rec.push(match cell {
                Cell::Num(x) if !x.is_finite() => {
                    return Err(CliError::Numerical(format!(
                        "non-finite value in row {r}, column {}",
                        table.header[c]
                    )))
                }
                Cell::Num(x) => format_num(*x),
                Cell::Int(i) => i.to_string(),
                Cell::Text(s) => s.clone(),
                Cell::Empty => String::new(),
            });
        }
        w.write_record(&rec).map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

pub fn render(out: &Output, format: Format) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Json => {
            if let Some(path) = find_null(&out.json, &mut String::new()) {
                return Err(CliError::Numerical(format!("non-finite value at {path}")));
            }
            let mut s = serde_json::to_string_pretty(&out.json).map_err(|e| CliError::Io(e.to_string()))?;
            s.push('\n');
            Ok(s.into_bytes())
        }
        Format::Csv => render_csv(&out.table),
    }
}

pub fn write(bytes: &[u8], path: Option<&Path>) -> Result<(), CliError> {
    let res = match path {
        Some(p) => std::fs::write(p, bytes),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes).and_then(|_| stdout.flush())
        }
    };
    res.map_err(|e| CliError::Io(format!("cannot write output: {e}")))
}
