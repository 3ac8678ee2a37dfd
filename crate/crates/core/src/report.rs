//! CSV emission and re-reading shared by every result table.
//!
//! Reals are printed with 17 significant digits so that parsing a written
//! value returns the identical `f64`. Metadata lines start with `#`.

use std::io::{Read, Write};
use std::path::Path;

/// Formats a real with 17 significant digits in scientific notation.
pub fn fmt_real(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.16e}")
    }
}

/// An in-memory CSV table: metadata comment lines, a header, and rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvTable {
    pub meta: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            meta: Vec::new(),
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_meta(&mut self, line: impl Into<String>) {
        self.meta.push(line.into());
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Parses column `name` of every row as `f64`.
    pub fn real_column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.column(name)?;
        self.rows.iter().map(|r| r[idx].parse().ok()).collect()
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for line in &self.meta {
            writeln!(out, "# {line}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()
    }

    pub fn to_string_lossy(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8_lossy(&buf).into_owned()
    }

    pub fn read_from<R: Read>(mut input: R) -> std::io::Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        let mut meta = Vec::new();
        let mut body = String::new();
        for line in text.lines() {
            match line.strip_prefix('#') {
                Some(rest) => meta.push(rest.strip_prefix(' ').unwrap_or(rest).to_string()),
                None => {
                    body.push_str(line);
                    body.push('\n');
                }
            }
        }
        let mut r = csv::Reader::from_reader(body.as_bytes());
        let header = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec?.iter().map(str::to_string).collect());
        }
        Ok(Self { meta, header, rows })
    }

    pub fn read_path(path: &Path) -> std::io::Result<Self> {
        Self::read_from(std::fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn formats_seventeen_digits() {
        assert_eq!(fmt_real(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_real(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_real(f64::INFINITY), "inf");
    }

    #[test]
    fn table_round_trip() {
        let mut t = CsvTable::new(["a", "b"]);
        t.push_meta("molcap test");
        t.push_row(vec![fmt_real(0.25), "x".into()]);
        let back = CsvTable::read_from(t.to_string_lossy().as_bytes()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.real_column("a").unwrap(), vec![0.25]);
        assert!(back.real_column("b").is_none());
    }

    proptest! {
        #[test]
        fn reals_round_trip_exactly(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let parsed: f64 = fmt_real(v).parse().unwrap();
            prop_assert_eq!(parsed.to_bits(), v.to_bits());
        }
    }
}
