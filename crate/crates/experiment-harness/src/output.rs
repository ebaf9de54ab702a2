//! CSV and JSON result tables.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::experiments::SpectrumRow;
use crate::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> HarnessError + '_ {
    move |e| HarnessError::Io(format!("{}: {e}", path.display()))
}

pub fn json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| HarnessError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn csv_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| HarnessError::Io(e.to_string()))
}

/// Writes `rows` to `dir/stem.{csv,json}` and returns the path.
pub fn write_table<T: Serialize>(dir: &Path, stem: &str, format: Format, rows: &[T]) -> Result<PathBuf> {
    let path = dir.join(format!("{stem}.{}", format.extension()));
    let text = match format {
        Format::Csv => csv_string(rows)?,
        Format::Json => json_string(rows)?,
    };
    std::fs::write(&path, text).map_err(io(&path))?;
    Ok(path)
}

/// Spectrum CSV: `s, e_0, ..., e_{m-1}, gap`.
pub fn spectrum_csv(rows: &[SpectrumRow]) -> Result<String> {
    let m = rows.first().map(|r| r.eigenvalues.len()).unwrap_or(0);
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| HarnessError::Io(e.to_string());
    let mut header = vec!["s".to_string()];
    header.extend((0..m).map(|k| format!("e_{k}")));
    header.push("gap".into());
    w.write_record(&header).map_err(err)?;
    for r in rows {
        let mut rec = vec![r.s.to_string()];
        rec.extend(r.eigenvalues.iter().map(|e| e.to_string()));
        rec.push(r.gap.to_string());
        w.write_record(&rec).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| HarnessError::Io(e.to_string()))
}

pub fn write_spectrum(dir: &Path, format: Format, rows: &[SpectrumRow]) -> Result<PathBuf> {
    let path = dir.join(format!("spectrum.{}", format.extension()));
    let text = match format {
        Format::Csv => spectrum_csv(rows)?,
        Format::Json => json_string(rows)?,
    };
    std::fs::write(&path, text).map_err(io(&path))?;
    Ok(path)
}
