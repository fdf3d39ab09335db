//! Tabular results and their CSV / JSON-lines rendering.

use std::io::Write;
use std::time::Duration;

use omega_lab_core::{Complex64, Error, Result};
use serde_json::{Map, Value};

use crate::config::Format;

pub const CSV_HEADER: &str = "# omega-lab csv v1";

/// Column names plus rows of JSON values. The first two columns of every
/// table are the equation tag and the scheme descriptor.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub elapsed: Option<Duration>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        let mut all = vec!["eq_tag".to_string(), "scheme".to_string()];
        all.extend(columns.iter().map(|c| c.to_string()));
        Table {
            columns: all,
            rows: Vec::new(),
            elapsed: None,
        }
    }

    pub fn push(&mut self, tag: &str, scheme: &str, values: Vec<Value>) {
        debug_assert_eq!(values.len() + 2, self.columns.len());
        let mut row = vec![Value::from(tag), Value::from(scheme)];
        row.extend(values);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

/// A float as a JSON number, or a string for non-finite values.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or_else(|| Value::from(x.to_string()))
}

pub fn complex(z: Complex64) -> [Value; 3] {
    [num(z.re), num(z.im), num(z.norm())]
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

pub fn render<W: Write>(table: &Table, format: Format, timing: bool, out: W) -> Result<()> {
    let elapsed = if timing {
        Some(table.elapsed.unwrap_or_default().as_secs_f64())
    } else {
        None
    };
    match format {
        Format::Csv => render_csv(table, elapsed, out),
        Format::Json => render_json(table, elapsed, out),
    }
}

fn render_csv<W: Write>(table: &Table, elapsed: Option<f64>, mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = table.columns.clone();
    if elapsed.is_some() {
        header.push("elapsed_s".into());
    }
    w.write_record(&header).map_err(csv_err)?;
    for row in &table.rows {
        let mut rec: Vec<String> = row.iter().map(cell).collect();
        if let Some(t) = elapsed {
            rec.push(t.to_string());
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn render_json<W: Write>(table: &Table, elapsed: Option<f64>, mut out: W) -> Result<()> {
    for row in &table.rows {
        let mut obj = Map::new();
        for (c, v) in table.columns.iter().zip(row) {
            obj.insert(c.clone(), v.clone());
        }
        if let Some(t) = elapsed {
            obj.insert("elapsed_s".into(), num(t));
        }
        serde_json::to_writer(&mut out, &Value::Object(obj)).map_err(|e| Error::Io(e.into()))?;
        writeln!(out)?;
    }
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_versioned_header_and_optional_timing() {
        let mut t = Table::new(&["N", "value"]);
        t.push("eq_x", "cesaro", vec![Value::from(10), num(0.5)]);
        let mut buf = Vec::new();
        render(&t, Format::Csv, false, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "# omega-lab csv v1\neq_tag,scheme,N,value\neq_x,cesaro,10,0.5\n");
        let mut buf = Vec::new();
        render(&t, Format::Csv, true, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("value,elapsed_s"));
    }

    #[test]
    fn json_lines_mirror_columns() {
        let mut t = Table::new(&["case"]);
        t.push("eq_y", "-", vec![Value::from(2)]);
        let mut buf = Vec::new();
        render(&t, Format::Json, false, &mut buf).unwrap();
        let v: Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["case"], 2);
        assert_eq!(v["eq_tag"], "eq_y");
        assert_eq!(num(f64::INFINITY), Value::from("inf"));
    }
}
