use std::fmt;
use std::path::{Path, PathBuf};

use crate::{Error, Result};

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Int(u64),
    Text(String),
    Missing,
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Num(v)
    }
}

impl From<Option<f64>> for Value {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Value::Missing, Value::Num)
    }
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::Int(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as u64)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(v) => write!(f, "{v}"),
            Value::Int(v) => write!(f, "{v}"),
            Value::Text(s) => f.write_str(s),
            Value::Missing => Ok(()),
        }
    }
}

/// Named CSV table with a fixed column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Fails on the first NaN or infinite number.
    pub fn check_finite(&self) -> Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            for (col, v) in self.header.iter().zip(row) {
                if let Value::Num(x) = v {
                    if !x.is_finite() {
                        return Err(Error::NonFinite(format!("{}: row {i}, column {col} is {x}", self.name)));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        self.check_finite()?;
        let mut w = csv::Writer::from_writer(Vec::new());
        let wrap = |source| Error::Csv {
            path: PathBuf::from(&self.name),
            source,
        };
        w.write_record(&self.header).map_err(wrap)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string())).map_err(wrap)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::io(&self.name, e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv writes utf-8"))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = self.to_csv_string()?;
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Reads a CSV written by [`Table::write`]; empty cells become
    /// [`Value::Missing`], numbers [`Value::Num`].
    pub fn read(path: &Path) -> Result<Table> {
        let wrap = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut r = csv::Reader::from_path(path).map_err(wrap)?;
        let header: Vec<String> = r.headers().map_err(wrap)?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(wrap)?;
            rows.push(
                rec.iter()
                    .map(|s| match s {
                        "" => Value::Missing,
                        s => s.parse().map(Value::Num).unwrap_or_else(|_| Value::Text(s.to_string())),
                    })
                    .collect(),
            );
        }
        let name = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        Ok(Table { name, header, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

/// Writes every table to `<dir>/<name>.csv`. All tables are checked before
/// anything is written.
pub fn emit_report(tables: &[Table], dir: &Path) -> Result<Vec<PathBuf>> {
    for t in tables {
        t.check_finite()?;
    }
    tables
        .iter()
        .map(|t| {
            let path = dir.join(format!("{}.csv", t.name));
            t.write(&path)?;
            Ok(path)
        })
        .collect()
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_only_and_nan() {
        let t = Table::new("empty", &["a", "b"]);
        assert_eq!(t.to_csv_string().unwrap(), "a,b\n");
        let mut bad = Table::new("bad", &["x"]);
        bad.push(vec![f64::NAN.into()]);
        assert!(matches!(bad.to_csv_string(), Err(Error::NonFinite(_))));
        let mut ok = Table::new("ok", &["x", "y", "z"]);
        ok.push(vec![0.1.into(), Value::Missing, "tag".into()]);
        assert_eq!(ok.to_csv_string().unwrap(), "x,y,z\n0.1,,tag\n");
        assert_eq!(mean_std(&[1.0, 3.0]), (2.0, 2f64.sqrt()));
    }
}
