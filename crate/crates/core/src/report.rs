//! Deterministic serialization of reports and profiles.
//!
//! JSON objects are emitted with sorted keys, floating-point numbers in the
//! fixed `%.12e` layout (`1.000000000000e+00`), integers verbatim and
//! non-finite values as `null`. CSV profiles start with the columns
//! `r, x` followed by the named value columns in declared order. Identical
//! inputs therefore produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::grid::RadialGrid;

/// `x` in C `%.12e` layout: mantissa with 12 decimals, signed two-digit exponent.
pub fn format_float(x: f64) -> String {
    if !x.is_finite() {
        return "null".to_string();
    }
    let s = format!("{x:.12e}");
    let (mantissa, exponent) = s.split_once('e').expect("exponent marker in LowerExp output");
    let exp: i32 = exponent.parse().expect("integer exponent in LowerExp output");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |k: usize| "  ".repeat(k);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(num) => {
            if let Some(i) = num.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = num.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                out.push_str(&format_float(num.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(out, item, indent + 1);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (k, key) in keys.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String((*key).clone()).to_string());
                out.push_str(": ");
                write_value(out, &map[*key], indent + 1);
                out.push_str(if k + 1 < keys.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

/// Canonical JSON text of an already-built value (trailing newline included).
pub fn canonical_json_value(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v, 0);
    out.push('\n');
    out
}

/// Canonical JSON text of any serializable report.
pub fn to_canonical_json<T: Serialize + ?Sized>(report: &T) -> Result<String> {
    let v = serde_json::to_value(report).map_err(|e| Error::Io { path: "<memory>".into(), message: e.to_string() })?;
    Ok(canonical_json_value(&v))
}

/// CSV cell for `x`: the `%.12e` layout, with `NaN`/`inf`/`-inf` for non-finite values.
pub fn format_cell(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format_float(x)
    }
}

/// A named column of a CSV profile.
#[derive(Debug, Clone, Copy)]
pub struct Column<'a> {
    /// Header name.
    pub name: &'a str,
    /// One value per grid point.
    pub values: &'a [f64],
}

impl<'a> Column<'a> {
    /// A named column.
    pub fn new(name: &'a str, values: &'a [f64]) -> Self {
        Self { name, values }
    }
}

fn csv_error(e: impl std::fmt::Display) -> Error {
    Error::Io { path: "<memory>".into(), message: e.to_string() }
}

/// CSV text of a radial profile: columns `r, x, <names...>`.
pub fn profile_csv(grid: &RadialGrid, columns: &[Column<'_>]) -> Result<String> {
    for c in columns {
        if c.values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: c.values.len() });
        }
    }
    let mut header = vec!["r", "x"];
    header.extend(columns.iter().map(|c| c.name));
    let rows = (0..grid.len()).map(|i| {
        let mut row = vec![format_cell(grid.r()[i]), format_cell(grid.x(i))];
        row.extend(columns.iter().map(|c| format_cell(c.values[i])));
        row
    });
    table_csv(&header, rows)
}

/// CSV text of an arbitrary table with pre-formatted cells.
pub fn table_csv<I>(header: &[&str], rows: I) -> Result<String>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(&row).map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(csv_error)?;
    String::from_utf8(bytes).map_err(csv_error)
}

/// Writes `text` to `path`, creating parent directories; errors carry the path.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let ctx = |e: std::io::Error| Error::Io { path: path.display().to_string(), message: e.to_string() };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(ctx)?;
        }
    }
    fs::write(path, text).map_err(ctx)
}

/// Serializes `report` canonically and writes it to `path`.
pub fn write_json<T: Serialize + ?Sized>(report: &T, path: &Path) -> Result<()> {
    write_text(path, &to_canonical_json(report)?)
}
