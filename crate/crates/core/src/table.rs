//! Rectangular output tables rendered as CSV or aligned text.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Real(f64),
    Int(i64),
    Empty,
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Real)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Format {
    Csv,
    #[default]
    Text,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "text" | "txt" => Ok(Format::Text),
            other => Err(Error::InvalidParameter(format!("unknown format {other:?}"))),
        }
    }
}

/// Full-precision real: shortest representation that parses back exactly.
pub fn real_full(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        v.to_string()
    }
}

/// Six significant digits, `%g` style.
pub fn real_sig6(v: f64) -> String {
    if !v.is_finite() {
        return real_full(v);
    }
    if v == 0.0 {
        return "0".into();
    }
    // exponent after rounding to six digits
    let sci = format!("{v:.5e}");
    let (mant, e) = sci.split_once('e').expect("exponent form");
    let exp: i32 = e.parse().expect("integer exponent");
    if !(-5..6).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mant));
    }
    let decimals = (5 - exp) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_owned()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputTable {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl OutputTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        OutputTable {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::DimensionMismatch(format!(
                "row of {} cells for {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Text => self.to_text(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        // writing to a Vec cannot fail
        wtr.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            wtr.write_record(row.iter().map(|c| match c {
                Cell::Text(s) => s.clone(),
                Cell::Real(v) => real_full(*v),
                Cell::Int(v) => v.to_string(),
                Cell::Empty => String::new(),
            }))
            .expect("in-memory write");
        }
        let bytes = wtr.into_inner().expect("in-memory flush");
        String::from_utf8(bytes).expect("csv output is utf-8")
    }

    pub fn to_text(&self) -> String {
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| match c {
                        Cell::Text(s) => s.clone(),
                        Cell::Real(v) => real_sig6(*v),
                        Cell::Int(v) => v.to_string(),
                        Cell::Empty => "-".into(),
                    })
                    .collect()
            })
            .collect();
        let mut widths: Vec<usize> = self.columns.iter().map(|c| c.chars().count()).collect();
        for row in &cells {
            for (w, s) in widths.iter_mut().zip(row) {
                *w = (*w).max(s.chars().count());
            }
        }
        let numeric: Vec<bool> = (0..self.columns.len())
            .map(|j| {
                self.rows
                    .iter()
                    .all(|r| matches!(r[j], Cell::Real(_) | Cell::Int(_) | Cell::Empty))
            })
            .collect();

        let mut out = String::new();
        let line = |out: &mut String, items: &[String]| {
            let mut parts = Vec::with_capacity(items.len());
            for (j, s) in items.iter().enumerate() {
                let pad = widths[j] - s.chars().count();
                if numeric[j] {
                    parts.push(format!("{}{s}", " ".repeat(pad)));
                } else {
                    parts.push(format!("{s}{}", " ".repeat(pad)));
                }
            }
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&mut out, &self.columns);
        let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
        let _ = writeln!(out, "{}", rule.join("  "));
        for row in &cells {
            line(&mut out, row);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig6_examples() {
        assert_eq!(real_sig6(2.4237123), "2.42371");
        assert_eq!(real_sig6(1894.398), "1894.4");
        assert_eq!(real_sig6(0.0), "0");
        assert_eq!(real_sig6(-0.00012345678), "-0.000123457");
        assert_eq!(real_sig6(1.5e-9), "1.5e-9");
        assert_eq!(real_sig6(123456789.0), "1.23457e8");
        assert_eq!(real_sig6(f64::INFINITY), "inf");
        assert_eq!(real_sig6(100.0), "100");
        assert_eq!(real_sig6(999999.7), "1e6");
    }

    #[test]
    fn csv_is_full_precision() {
        let mut t = OutputTable::new(["name", "value"]);
        t.push(vec!["a".into(), Cell::Real(0.1 + 0.2)]).unwrap();
        t.push(vec!["b,c".into(), Cell::Empty]).unwrap();
        assert_eq!(t.to_csv(), "name,value\na,0.30000000000000004\n\"b,c\",\n");
        assert!(t.push(vec![Cell::Empty]).is_err());
    }

    #[test]
    fn text_is_aligned() {
        let mut t = OutputTable::new(["k", "mse"]);
        t.push(vec!["MLE".into(), Cell::Real(14.62071234)]).unwrap();
        t.push(vec!["RAULE".into(), Cell::Real(0.928)]).unwrap();
        let text = t.to_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "k          mse");
        assert_eq!(lines[2], "MLE    14.6207");
        assert_eq!(lines[3], "RAULE    0.928");
    }
}
