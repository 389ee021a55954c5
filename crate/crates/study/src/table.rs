use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Significant digits used for every CSV cell.
pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("row {row} has {found} cells, expected {expected}")]
    Ragged {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("row {row}, column `{column}`: value {value} is not finite")]
    NonFinite {
        row: usize,
        column: String,
        value: f64,
    },
    #[error("malformed table: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format `{s}` (expected csv or json)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// A rectangular numeric table with an ordered metadata block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub metadata: IndexMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl ResultTable {
    pub fn new(columns: Vec<String>) -> Self {
        ResultTable {
            metadata: IndexMap::new(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn set_meta(&mut self, key: impl Into<String>, value: impl ToString) {
        self.metadata.insert(key.into(), value.to_string());
    }

    pub fn push_row(&mut self, row: Vec<f64>) -> Result<(), TableError> {
        if row.len() != self.columns.len() {
            return Err(TableError::Ragged {
                row: self.rows.len(),
                found: row.len(),
                expected: self.columns.len(),
            });
        }
        if let Some(k) = row.iter().position(|x| !x.is_finite()) {
            return Err(TableError::NonFinite {
                row: self.rows.len(),
                column: self.columns[k].clone(),
                value: row[k],
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// Checks the table is rectangular with finite cells.
    pub fn validate(&self) -> Result<(), TableError> {
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.columns.len() {
                return Err(TableError::Ragged {
                    row: i,
                    found: row.len(),
                    expected: self.columns.len(),
                });
            }
            if let Some(k) = row.iter().position(|x| !x.is_finite()) {
                return Err(TableError::NonFinite {
                    row: i,
                    column: self.columns[k].clone(),
                    value: row[k],
                });
            }
        }
        Ok(())
    }

    /// `# key=value` metadata lines, a header row, then data rows with
    /// cells at [`SIGNIFICANT_DIGITS`] significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), TableError> {
        self.validate()?;
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}={v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(
                row.iter()
                    .map(|&x| format_significant(x, SIGNIFICANT_DIGITS)),
            )?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the output of [`write_csv`](Self::write_csv).
    pub fn read_csv(text: &str) -> Result<Self, TableError> {
        let mut metadata = IndexMap::new();
        let mut body = String::new();
        for line in text.lines() {
            if let Some(meta) = line.strip_prefix("# ") {
                let (k, v) = meta
                    .split_once('=')
                    .ok_or_else(|| TableError::Malformed(format!("metadata line `{line}`")))?;
                metadata.insert(k.to_string(), v.to_string());
            } else {
                body.push_str(line);
                body.push('\n');
            }
        }
        let mut r = csv::Reader::from_reader(body.as_bytes());
        let columns = r.headers()?.iter().map(str::to_string).collect();
        let mut table = ResultTable {
            metadata,
            columns,
            rows: Vec::new(),
        };
        for record in r.records() {
            let row = record?
                .iter()
                .map(|c| {
                    c.parse::<f64>()
                        .map_err(|_| TableError::Malformed(format!("cell `{c}`")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            table.push_row(row)?;
        }
        Ok(table)
    }

    /// An object with `metadata`, `columns` and `rows`.
    pub fn write_json<W: Write>(&self, mut out: W) -> Result<(), TableError> {
        self.validate()?;
        serde_json::to_writer_pretty(&mut out, self)?;
        writeln!(out)?;
        Ok(())
    }

    pub fn read_json(text: &str) -> Result<Self, TableError> {
        let table: ResultTable = serde_json::from_str(text)?;
        table.validate()?;
        Ok(table)
    }

    pub fn render(&self, format: Format) -> Result<String, TableError> {
        let mut buf = Vec::new();
        match format {
            Format::Csv => self.write_csv(&mut buf)?,
            Format::Json => self.write_json(&mut buf)?,
        }
        Ok(String::from_utf8(buf).expect("table output is UTF-8"))
    }

    /// Renders the table in `format` and writes it to `path`.
    pub fn emit(&self, format: Format, path: &Path) -> Result<(), TableError> {
        fs::write(path, self.render(format)?)?;
        Ok(())
    }
}

/// `x` rounded to `digits` significant digits, in plain notation for
/// moderate magnitudes and scientific notation otherwise, with trailing
/// zeros removed.
pub fn format_significant(x: f64, digits: usize) -> String {
    assert!(digits >= 1, "at least one significant digit");
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -4 || exp >= digits as i32 {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ResultTable {
        let mut t = ResultTable::new(vec!["t_ms".into(), "P".into()]);
        t.set_meta("study", "demo");
        t.push_row(vec![0.0, 0.25]).unwrap();
        t.push_row(vec![1.0, 1.0 / 3.0]).unwrap();
        t
    }

    #[test]
    fn significant_formatting() {
        assert_eq!(format_significant(0.0, 12), "0");
        assert_eq!(format_significant(1.0, 12), "1");
        assert_eq!(format_significant(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(format_significant(-2.5, 12), "-2.5");
        assert_eq!(format_significant(1e-7, 12), "1e-7");
        assert_eq!(format_significant(2.0 / 3.0 * 1e-6, 12), "6.66666666667e-7");
        assert_eq!(format_significant(123456789012.0, 12), "123456789012");
        assert_eq!(format_significant(1234567890123.0, 12), "1.23456789012e12");
        assert_eq!(format_significant(3_600_000.0, 12), "3600000");
        assert_eq!(format_significant(0.999999999999999, 12), "1");
    }

    #[test]
    fn csv_layout() {
        let text = sample().render(Format::Csv).unwrap();
        assert_eq!(text, "# study=demo\nt_ms,P\n0,0.25\n1,0.333333333333\n");
    }

    #[test]
    fn single_row_csv_has_header_and_one_data_line() {
        let mut t = ResultTable::new(vec!["x".into()]);
        t.set_meta("a", 1);
        t.set_meta("b", 2);
        t.push_row(vec![7.0]).unwrap();
        let text = t.render(Format::Csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines, vec!["# a=1", "# b=2", "x", "7"]);
    }

    #[test]
    fn json_round_trips_exactly() {
        let t = sample();
        let text = t.render(Format::Json).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(
            v.get("metadata").is_some() && v.get("columns").is_some() && v.get("rows").is_some()
        );
        assert_eq!(ResultTable::read_json(&text).unwrap(), t);
    }

    #[test]
    fn json_preserves_every_bit() {
        let mut t = ResultTable::new(vec!["x".into()]);
        for k in 1..2000 {
            t.push_row(vec![(k as f64).sqrt() * 1.0e-7 / 3.0]).unwrap();
        }
        assert_eq!(
            ResultTable::read_json(&t.render(Format::Json).unwrap()).unwrap(),
            t
        );
    }

    #[test]
    fn csv_round_trips_at_twelve_digits() {
        let t = sample();
        let back = ResultTable::read_csv(&t.render(Format::Csv).unwrap()).unwrap();
        assert_eq!(back.metadata, t.metadata);
        assert_eq!(back.columns, t.columns);
        for (a, b) in back.rows.iter().flatten().zip(t.rows.iter().flatten()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn ragged_and_non_finite_rows_are_rejected() {
        let mut t = ResultTable::new(vec!["a".into(), "b".into()]);
        assert!(matches!(
            t.push_row(vec![1.0]),
            Err(TableError::Ragged { .. })
        ));
        assert!(matches!(
            t.push_row(vec![1.0, f64::NAN]),
            Err(TableError::NonFinite { .. })
        ));
        t.rows.push(vec![1.0]);
        assert!(t.render(Format::Csv).is_err());
    }

    #[test]
    fn unwritable_path_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing").join("out.csv");
        assert!(matches!(
            sample().emit(Format::Csv, &path),
            Err(TableError::Io(_))
        ));
    }
}
