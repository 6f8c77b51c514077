//! Report rendering. Every command builds a list of flat JSON objects;
//! `--format json` prints them inside a document, `--format csv` prints one
//! row per object with the keys as header.

use std::io::Write;

use serde_json::{Map, Value};

/// Rounds to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("float formatted by std")
}

/// Integral values become JSON integers so `1.0` prints as `1` in both
/// formats; non-finite values become the strings `inf`, `-inf`, `nan`.
fn exact(x: f64) -> Value {
    if x.is_nan() {
        Value::from("nan")
    } else if x.is_infinite() {
        Value::from(if x > 0.0 { "inf" } else { "-inf" })
    } else if x.fract() == 0.0 && x.abs() < 9.0e15 {
        if x == 0.0 {
            Value::from(0)
        } else {
            Value::from(x as i64)
        }
    } else {
        Value::from(x)
    }
}

/// A computed float, rounded for output.
pub fn num(x: f64) -> Value {
    exact(sig12(x))
}

/// A profile, echoed without rounding.
pub fn profile(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| exact(x)).collect())
}

/// Ordered record builder.
#[derive(Default)]
pub struct Record(Map<String, Value>);

impl Record {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.0.insert(key.to_string(), value.into());
        self
    }

    pub fn into_value(self) -> Value {
        Value::Object(self.0)
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Array(items) => {
            let mut s = String::from("[");
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                s.push_str(&csv_cell(item));
            }
            s.push(']');
            s
        }
        other => other.to_string(),
    }
}

pub fn write_csv(out: &mut dyn Write, rows: &[Value]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if let Some(Value::Object(first)) = rows.first() {
        w.write_record(first.keys())?;
    }
    for row in rows {
        if let Value::Object(map) = row {
            w.write_record(map.values().map(csv_cell))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_json(out: &mut dyn Write, doc: &Value) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(doc).map_err(std::io::Error::other)?;
    text.push('\n');
    out.write_all(text.as_bytes())
}

/// Unrounded text of a finite location, as it appears in JSON.
pub fn location_text(x: f64) -> String {
    exact(x).to_string()
}

/// Compact single-line profile, e.g. `[0,0.5,1]`.
pub fn profile_line(xs: &[f64]) -> String {
    let mut s = String::from("[");
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(&location_text(*x));
    }
    s.push(']');
    s
}
