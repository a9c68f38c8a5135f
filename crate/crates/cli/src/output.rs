//! Deterministic number formatting and file writers.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::error::CliError;

/// Rounds to 9 significant digits.
pub fn round9(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return if v == 0.0 { 0.0 } else { v };
    }
    format!("{v:.8e}").parse().unwrap_or(v)
}

/// Shortest decimal text of `v` rounded to 9 significant digits.
pub fn fmt9(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{}", round9(v))
}

/// JSON number rounded to 9 significant digits; non-finite values become strings.
pub fn num(v: f64) -> Value {
    let r = round9(v);
    serde_json::Number::from_f64(r).map_or_else(|| Value::String(fmt9(v)), Value::Number)
}

/// An in-memory CSV table written with LF line endings.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| (*s).to_owned()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Collects output files under one directory.
pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_owned(),
            written: Vec::new(),
        })
    }

    pub fn table(&mut self, name: &str, table: &Table) -> Result<(), CliError> {
        table.write(&self.root.join(name))?;
        self.written.push(name.to_owned());
        Ok(())
    }

    pub fn json(&mut self, name: &str, value: &Value) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        fs::write(self.root.join(name), text)?;
        self.written.push(name.to_owned());
        Ok(())
    }

    pub fn files(&self) -> &[String] {
        &self.written
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt9(3.2), "3.2");
        assert_eq!(fmt9(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt9(257.831007808870), "257.831008");
        assert_eq!(fmt9(-0.0), "0");
        assert_eq!(fmt9(f64::INFINITY), "inf");
        assert_eq!(fmt9(123456789012.0), "123456789000");
    }

    #[test]
    fn csv_uses_lf_and_quotes_when_needed() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new(&["a", "b"]);
        t.row(vec!["1".into(), "x,y".into()]);
        let path = dir.path().join("t.csv");
        t.write(&path).unwrap();
        assert_eq!(fs::read_to_string(path).unwrap(), "a,b\n1,\"x,y\"\n");
    }
}
