//! Table emission: CSV with 17 significant digits (bit-for-bit reproducible
//! across runs) or JSON as an array of row objects plus a `meta` object.

use serde::Serialize;
use std::io::Write;
use std::path::PathBuf;

#[derive(Debug, Clone)]
pub enum Value {
    Num(f64),
    Int(i64),
    Bool(bool),
    Str(String),
    Empty,
}

impl Value {
    fn csv(&self) -> String {
        match self {
            Value::Num(x) => format!("{x:.16e}"),
            Value::Int(i) => i.to_string(),
            Value::Bool(b) => b.to_string(),
            Value::Str(s) => s.clone(),
            Value::Empty => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Value::Num(x) => {
                if x.is_finite() {
                    serde_json::json!(x)
                } else {
                    serde_json::Value::String(x.to_string())
                }
            }
            Value::Int(i) => serde_json::json!(i),
            Value::Bool(b) => serde_json::json!(b),
            Value::Str(s) => serde_json::json!(s),
            Value::Empty => serde_json::Value::Null,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

pub enum Sink {
    Stdout,
    File(PathBuf),
}

#[derive(Serialize)]
struct JsonDoc {
    meta: serde_json::Map<String, serde_json::Value>,
    rows: Vec<serde_json::Map<String, serde_json::Value>>,
}

pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub meta: Vec<(String, Value)>,
}

impl Table {
    pub fn write(&self, sink: Sink, format: Format) -> anyhow::Result<()> {
        let body = match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json()?,
        };
        match sink {
            Sink::Stdout => {
                let stdout = std::io::stdout();
                let mut lock = stdout.lock();
                lock.write_all(body.as_bytes())?;
            }
            Sink::File(path) => {
                std::fs::write(&path, body)
                    .map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))?;
            }
        }
        Ok(())
    }

    fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Value::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    fn to_json(&self) -> anyhow::Result<String> {
        let mut meta = serde_json::Map::new();
        for (k, v) in &self.meta {
            meta.insert(k.clone(), v.json());
        }
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = serde_json::Map::new();
                for (col, v) in self.columns.iter().zip(row) {
                    obj.insert(col.clone(), v.json());
                }
                obj
            })
            .collect();
        let doc = JsonDoc { meta, rows };
        let mut s = serde_json::to_string_pretty(&doc)?;
        s.push('\n');
        Ok(s)
    }
}
