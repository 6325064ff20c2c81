//! CSV output (RFC 4180: CRLF line endings, '.' decimal separator, 17
//! significant digits) and a small reader for the plot command.

use anyhow::{bail, Context, Result};
use std::io::Write;
use std::path::Path;

pub fn format_value(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        // keep integers exact and compact (grid times, indices)
        format!("{v}")
    } else {
        format!("{v:.16e}")
    }
}

pub struct CsvWriter<W: Write> {
    out: W,
}

impl<W: Write> CsvWriter<W> {
    pub fn new(out: W) -> Self {
        CsvWriter { out }
    }

    pub fn header(&mut self, columns: &[String]) -> Result<()> {
        self.raw_row(columns)
    }

    pub fn row(&mut self, values: &[f64]) -> Result<()> {
        let fields: Vec<String> = values.iter().map(|v| format_value(*v)).collect();
        self.raw_row(&fields)
    }

    pub fn raw_row(&mut self, fields: &[String]) -> Result<()> {
        let mut first = true;
        for field in fields {
            if !first {
                self.out.write_all(b",")?;
            }
            first = false;
            if field.contains(',') || field.contains('"') || field.contains('\n') {
                let escaped = field.replace('"', "\"\"");
                write!(self.out, "\"{escaped}\"")?;
            } else {
                self.out.write_all(field.as_bytes())?;
            }
        }
        self.out.write_all(b"\r\n")?;
        Ok(())
    }
}

pub fn write_csv(path: &Path, columns: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let file = std::fs::File::create(path)
        .with_context(|| format!("creating {}", path.display()))?;
    let mut w = CsvWriter::new(std::io::BufWriter::new(file));
    w.header(columns)?;
    for row in rows {
        w.row(row)?;
    }
    Ok(())
}

/// Parsed numeric CSV: header plus column-major data.
pub struct NumericCsv {
    pub columns: Vec<String>,
    pub data: Vec<Vec<f64>>,
}

pub fn read_numeric_csv(path: &Path) -> Result<NumericCsv> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = match lines.next() {
        Some(h) => h,
        None => bail!("malformed CSV {}: empty file", path.display()),
    };
    let columns: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    if columns.is_empty() {
        bail!("malformed CSV {}: no columns", path.display());
    }
    let mut data: Vec<Vec<f64>> = vec![Vec::new(); columns.len()];
    let mut rows = 0usize;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            bail!(
                "malformed CSV {}: row with {} fields, expected {}",
                path.display(),
                fields.len(),
                columns.len()
            );
        }
        for (col, field) in data.iter_mut().zip(fields.iter()) {
            let v: f64 = field
                .trim()
                .parse()
                .with_context(|| format!("malformed CSV {}: bad number {field}", path.display()))?;
            col.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        bail!("malformed CSV {}: no data rows", path.display());
    }
    Ok(NumericCsv { columns, data })
}
