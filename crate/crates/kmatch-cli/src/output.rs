//! Table output: CSV to a file or stdout, optionally mirrored as JSON lines.

use anyhow::{Context, Result};
use serde::Serialize;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

/// Where a table goes and in which formats.
#[derive(Clone, Debug)]
pub struct Sink {
    pub path: Option<PathBuf>,
    pub json: bool,
}

fn open(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// `report.csv` mirrors to `report.jsonl`.
#[must_use]
pub fn json_path(path: &Path) -> PathBuf {
    path.with_extension("jsonl")
}

impl Sink {
    /// Writes `header` and `rows` as CSV and, with `json`, each row as one
    /// JSON object keyed by the header. On stdout only one format is
    /// printed: JSON lines when `json` is set, CSV otherwise.
    pub fn write_table(&self, header: &[String], rows: &[Vec<String>]) -> Result<()> {
        let to_stdout = self.path.is_none();
        if !(to_stdout && self.json) {
            let mut w = csv::Writer::from_writer(open(self.path.as_deref())?);
            w.write_record(header)?;
            for row in rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
        if self.json {
            let target = self.path.as_deref().map(json_path);
            let mut w = open(target.as_deref())?;
            for row in rows {
                let obj: serde_json::Map<String, serde_json::Value> =
                    header.iter().cloned().zip(row.iter().map(|v| json_value(v))).collect();
                writeln!(w, "{}", serde_json::Value::Object(obj))?;
            }
            w.flush()?;
        }
        Ok(())
    }

    /// Serializable rows with a flat field layout, in field order.
    pub fn write_records<T: Serialize>(&self, rows: &[T]) -> Result<()> {
        let to_stdout = self.path.is_none();
        if !(to_stdout && self.json) {
            let mut w = csv::Writer::from_writer(open(self.path.as_deref())?);
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        if self.json {
            let target = self.path.as_deref().map(json_path);
            let mut w = open(target.as_deref())?;
            for row in rows {
                writeln!(w, "{}", serde_json::to_string(row)?)?;
            }
            w.flush()?;
        }
        Ok(())
    }
}

/// Numbers stay numbers and empty cells become `null`.
fn json_value(s: &str) -> serde_json::Value {
    if s.is_empty() {
        return serde_json::Value::Null;
    }
    match serde_json::from_str::<serde_json::Value>(s) {
        Ok(v @ (serde_json::Value::Number(_) | serde_json::Value::Bool(_))) => v,
        _ => serde_json::Value::String(s.to_owned()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_cells_keep_their_type() {
        assert_eq!(json_value("3"), serde_json::json!(3));
        assert_eq!(json_value("-1.5e-3"), serde_json::json!(-1.5e-3));
        assert_eq!(json_value("true"), serde_json::json!(true));
        assert_eq!(json_value(""), serde_json::Value::Null);
        assert_eq!(json_value("factor"), serde_json::json!("factor"));
    }

    #[test]
    fn mirror_path_swaps_extension() {
        assert_eq!(json_path(Path::new("a/report.csv")), PathBuf::from("a/report.jsonl"));
    }
}
