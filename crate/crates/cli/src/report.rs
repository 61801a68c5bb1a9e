//! Report writer. Tables go out as TSV or JSON lines; witness blocks are
//! always one JSON object per line.

use std::io::{self, Write};

use clap::ValueEnum;
use hconvex_core::{GroupPoint, HorizontalVector};
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Tsv,
    JsonLines,
}

/// A JSON number for finite values, otherwise the strings `inf`, `-inf`,
/// `nan`.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::String(fmt_f64(x))
    }
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn point(g: &GroupPoint) -> Value {
    Value::Array(g.coords().iter().map(|c| num(*c)).collect())
}

pub fn vector(v: &HorizontalVector) -> Value {
    Value::Array(v.0.iter().map(|c| num(*c)).collect())
}

fn cell(v: &Value) -> String {
    match v {
        Value::Number(n) if n.is_u64() || n.is_i64() => n.to_string(),
        Value::Number(n) => fmt_f64(n.as_f64().unwrap_or(f64::NAN)),
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(cell).collect::<Vec<_>>().join(" "),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

pub struct Report {
    format: Format,
    out: Vec<u8>,
}

impl Report {
    pub fn new(format: Format, command: &str, config: &[(&str, String)]) -> Self {
        let mut r = Report {
            format,
            out: Vec::new(),
        };
        match format {
            Format::Tsv => {
                r.line(&format!("# command\t{command}"));
                for (k, v) in config {
                    r.line(&format!("# {k}\t{v}"));
                }
            }
            Format::JsonLines => {
                let cfg: Map<String, Value> = config.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
                r.line(&json!({ "command": command, "config": cfg }).to_string());
            }
        }
        r
    }

    fn line(&mut self, s: &str) {
        self.out.extend_from_slice(s.as_bytes());
        self.out.push(b'\n');
    }

    /// A table with named columns. Each row has one value per column.
    pub fn table(&mut self, name: &str, columns: &[&str], rows: &[Vec<Value>]) {
        match self.format {
            Format::Tsv => {
                self.line(&format!("## {name}"));
                self.line(&columns.join("\t"));
                for row in rows {
                    let cells: Vec<String> = row.iter().map(cell).collect();
                    self.line(&cells.join("\t"));
                }
            }
            Format::JsonLines => {
                for row in rows {
                    let mut obj = Map::new();
                    obj.insert("table".into(), json!(name));
                    for (c, v) in columns.iter().zip(row) {
                        obj.insert(c.to_string(), v.clone());
                    }
                    self.line(&Value::Object(obj).to_string());
                }
            }
        }
    }

    /// `key value` summary lines.
    pub fn summary(&mut self, entries: &[(&str, Value)]) {
        match self.format {
            Format::Tsv => {
                for (k, v) in entries {
                    self.line(&format!("{k}\t{}", cell(v)));
                }
            }
            Format::JsonLines => {
                let obj: Map<String, Value> = entries.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
                self.line(&Value::Object(obj).to_string());
            }
        }
    }

    pub fn witness(&mut self, block: Value) {
        self.line(&json!({ "witness": block }).to_string());
    }

    pub fn verdict(&mut self, passed: bool) {
        let word = if passed { "PASS" } else { "FAIL" };
        match self.format {
            Format::Tsv => self.line(&format!("verdict\t{word}")),
            Format::JsonLines => self.line(&json!({ "verdict": word }).to_string()),
        }
    }

    pub fn flush(self) -> io::Result<()> {
        let mut stdout = io::stdout().lock();
        stdout.write_all(&self.out)?;
        stdout.flush()
    }
}
