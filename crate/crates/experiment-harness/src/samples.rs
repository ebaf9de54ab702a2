//! Sample file: one two-point-measurement record per row.

use std::io::{Read, Write};
use std::path::Path;

use ising_model::SpinConfiguration;
use thermo_analysis::EnergyStatistics;

use crate::{HarnessError, Result};

pub const SAMPLE_HEADER: [&str; 5] = ["run_id", "s_bar", "e_initial", "e_final", "final_bits"];

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub run_id: u64,
    pub s_bar: f64,
    pub e_initial: f64,
    pub e_final: f64,
    /// `+`/`-` per spin, or empty when the configuration was not recorded.
    pub final_bits: String,
}

impl SampleRecord {
    pub fn delta_e1(&self) -> f64 {
        self.e_final - self.e_initial
    }
}

pub fn write_samples<W: Write>(out: W, records: &[SampleRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| HarnessError::Io(e.to_string());
    w.write_record(SAMPLE_HEADER).map_err(io)?;
    for r in records {
        w.write_record([
            r.run_id.to_string(),
            r.s_bar.to_string(),
            r.e_initial.to_string(),
            r.e_final.to_string(),
            r.final_bits.clone(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| HarnessError::Io(e.to_string()))
}

pub fn write_sample_file(path: &Path, records: &[SampleRecord]) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    write_samples(std::io::BufWriter::new(f), records)
}

fn finite(line: u64, name: &str, text: &str) -> Result<f64> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| HarnessError::Data(format!("line {line}: {name} {text:?} is not a number")))?;
    if !v.is_finite() {
        return Err(HarnessError::Data(format!("line {line}: {name} is not finite")));
    }
    Ok(v)
}

/// Parses and validates a sample file.
pub fn read_samples<R: Read>(input: R) -> Result<Vec<SampleRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(input);
    let mut rows = rdr.records();
    let header = match rows.next() {
        None => return Err(HarnessError::Data("line 1: missing header".into())),
        Some(h) => h.map_err(|e| HarnessError::Data(format!("line 1: {e}")))?,
    };
    if header.iter().collect::<Vec<_>>() != SAMPLE_HEADER {
        return Err(HarnessError::Data(format!(
            "line 1: header must be exactly {}, got {}",
            SAMPLE_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    let mut bit_len: Option<usize> = None;
    for row in rows {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            HarnessError::Data(format!("line {line}: {e}"))
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != SAMPLE_HEADER.len() {
            return Err(HarnessError::Data(format!("line {line}: expected 5 fields, got {}", row.len())));
        }
        let run_id: u64 = row[0]
            .trim()
            .parse()
            .map_err(|_| HarnessError::Data(format!("line {line}: run_id {:?} is not an unsigned integer", &row[0])))?;
        let s_bar = finite(line, "s_bar", &row[1])?;
        let e_initial = finite(line, "e_initial", &row[2])?;
        let e_final = finite(line, "e_final", &row[3])?;
        let bits = row[4].trim().to_string();
        if !bits.is_empty() {
            SpinConfiguration::from_bits(&bits)
                .map_err(|e| HarnessError::Data(format!("line {line}: final_bits: {e}")))?;
            match bit_len {
                None => bit_len = Some(bits.len()),
                Some(n) if n != bits.len() => {
                    return Err(HarnessError::Data(format!(
                        "line {line}: final_bits has {} spins, earlier rows have {n}",
                        bits.len()
                    )))
                }
                _ => {}
            }
        }
        out.push(SampleRecord { run_id, s_bar, e_initial, e_final, final_bits: bits });
    }
    Ok(out)
}

pub fn read_sample_file(path: &Path) -> Result<Vec<SampleRecord>> {
    let f = std::fs::File::open(path).map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))?;
    read_samples(std::io::BufReader::new(f))
}

/// Records sharing one `s̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleGroup {
    pub s_bar: f64,
    pub records: Vec<SampleRecord>,
}

impl SampleGroup {
    pub fn statistics(&self, chain_length: usize) -> Result<EnergyStatistics> {
        let de: Vec<f64> = self.records.iter().map(|r| r.delta_e1()).collect();
        EnergyStatistics::from_samples(&de, chain_length)
            .map_err(|e| HarnessError::Data(format!("s_bar = {}: {e}", self.s_bar)))
    }

    /// Final configurations; rows without bits are an error.
    pub fn configurations(&self) -> Result<Vec<SpinConfiguration>> {
        self.records
            .iter()
            .map(|r| {
                if r.final_bits.is_empty() {
                    return Err(HarnessError::Data(format!("run {} at s_bar = {} has no final_bits", r.run_id, self.s_bar)));
                }
                SpinConfiguration::from_bits(&r.final_bits).map_err(|e| HarnessError::Data(e.to_string()))
            })
            .collect()
    }
}

/// Groups records by `s̄`, ascending.
pub fn group_by_s_bar(records: Vec<SampleRecord>) -> Vec<SampleGroup> {
    let mut groups: Vec<SampleGroup> = Vec::new();
    for r in records {
        match groups.iter_mut().find(|g| g.s_bar == r.s_bar) {
            Some(g) => g.records.push(r),
            None => groups.push(SampleGroup { s_bar: r.s_bar, records: vec![r] }),
        }
    }
    groups.sort_by(|a, b| a.s_bar.total_cmp(&b.s_bar));
    groups
}

/// Spin count implied by the bit strings, if any are present.
pub fn chain_length_of(records: &[SampleRecord]) -> Option<usize> {
    records.iter().find(|r| !r.final_bits.is_empty()).map(|r| r.final_bits.len())
}

/// Per-`s̄` statistics of a sample file.
pub fn ingest_samples(path: &Path, chain_length: Option<usize>) -> Result<Vec<(f64, EnergyStatistics)>> {
    let records = read_sample_file(path)?;
    if records.len() < 2 {
        return Err(HarnessError::Data(format!("{}: need at least 2 samples, got {}", path.display(), records.len())));
    }
    let l = chain_length.or_else(|| chain_length_of(&records)).unwrap_or(1);
    group_by_s_bar(records).iter().map(|g| Ok((g.s_bar, g.statistics(l)?))).collect()
}
