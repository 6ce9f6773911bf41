//! Result tables and their CSV/JSON serialisations. Both embed the resolved
//! configuration; only the JSON header carries a timestamp, so reruns with
//! the same seed give byte-identical CSV files.

use crate::config::Format;
use serde_json::{json, Map, Value};
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
    /// Full structured results, only written to JSON.
    pub detail: Value,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table { columns, rows: Vec::new(), detail: Value::Null }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn records(&self) -> Vec<Value> {
        self.rows
            .iter()
            .map(|r| {
                let obj: Map<String, Value> =
                    self.columns.iter().zip(r).map(|(c, v)| (c.to_string(), v.clone())).collect();
                Value::Object(obj)
            })
            .collect()
    }
}

/// Numbers that JSON cannot hold become strings.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

pub fn opt(x: Option<f64>) -> Value {
    x.map(num).unwrap_or(Value::Null)
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn render(command: &str, config: &Value, table: &Table, format: Format) -> anyhow::Result<Vec<u8>> {
    match format {
        Format::Json => {
            let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            let doc = json!({
                "header": {
                    "program": "qupload",
                    "version": env!("CARGO_PKG_VERSION"),
                    "timestamp_unix": stamp,
                },
                "command": command,
                "config": config,
                "rows": table.records(),
                "detail": table.detail,
            });
            let mut out = serde_json::to_vec_pretty(&doc)?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut out = Vec::new();
            writeln!(out, "# command: {command}")?;
            writeln!(out, "# config: {}", serde_json::to_string(config)?)?;
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(&table.columns)?;
            for r in &table.rows {
                w.write_record(r.iter().map(cell))?;
            }
            w.flush()?;
            drop(w);
            Ok(out)
        }
    }
}

pub fn write(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_embeds_config_and_has_no_timestamp() {
        let mut t = Table::new(vec!["x", "y"]);
        t.push(vec![num(1.5), json!("a,b")]);
        t.push(vec![num(f64::INFINITY), Value::Null]);
        let cfg = json!({"seed": 7});
        let a = render("demo", &cfg, &t, Format::Csv).unwrap();
        let b = render("demo", &cfg, &t, Format::Csv).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.contains("# config: {\"seed\":7}"));
        assert!(text.contains("1.5,\"a,b\""));
        assert!(text.contains("inf,"));
        assert!(!text.contains("timestamp"));
        let j: Value = serde_json::from_slice(&render("demo", &cfg, &t, Format::Json).unwrap()).unwrap();
        assert_eq!(j["rows"][0]["x"], json!(1.5));
        assert!(j["header"]["timestamp_unix"].is_u64());
    }
}
