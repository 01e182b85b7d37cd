//! Result files. CSV rows carry a fixed column set; JSON carries the full
//! summaries.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{OutputFormat, RunSummary};

pub const CSV_COLUMNS: [&str; 15] = [
    "model", "S1", "S2", "n", "k1", "k2", "R", "Rq", "sigma2q", "trials", "errors", "rate", "ci_lo", "ci_hi", "seed",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub model: u8,
    #[serde(rename = "S1")]
    pub s1: f64,
    #[serde(rename = "S2")]
    pub s2: f64,
    pub n: usize,
    pub k1: u32,
    pub k2: u32,
    #[serde(rename = "R")]
    pub rate: f64,
    #[serde(rename = "Rq")]
    pub quant_rate: f64,
    pub sigma2q: f64,
    pub trials: u64,
    pub errors: u64,
    #[serde(rename = "rate")]
    pub error_rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub seed: u64,
}

impl From<&RunSummary> for SummaryRow {
    fn from(s: &RunSummary) -> Self {
        Self {
            model: s.model.into(),
            s1: s.s1,
            s2: s.s2,
            n: s.n,
            k1: s.k1,
            k2: s.k2,
            rate: s.rate,
            quant_rate: s.quant_rate,
            sigma2q: s.sigma2q,
            trials: s.trials,
            errors: s.errors,
            error_rate: s.error_rate,
            ci_lo: s.ci_lo,
            ci_hi: s.ci_hi,
            seed: s.seed,
        }
    }
}

fn format_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Format { path: path.to_path_buf(), message: e.to_string() }
}

pub fn write_csv<W: Write>(summaries: &[RunSummary], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for s in summaries {
        w.serialize(SummaryRow::from(s))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(summaries: &[RunSummary], mut out: W) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut out, summaries)?;
    writeln!(out)?;
    out.flush()
}

pub fn emit_results(summaries: &[RunSummary], format: OutputFormat, path: &Path) -> Result<()> {
    let io_err = |source| Error::Io { path: path.to_path_buf(), source };
    let file = File::create(path).map_err(io_err)?;
    let out = BufWriter::new(file);
    match format {
        OutputFormat::Csv => write_csv(summaries, out).map_err(|e| format_err(path, e)),
        OutputFormat::Json => write_json(summaries, out).map_err(io_err),
    }
}

pub fn read_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| format_err(path, e))?;
    let headers = r.headers().map_err(|e| format_err(path, e))?;
    if headers.iter().ne(CSV_COLUMNS) {
        return Err(format_err(path, format!("unexpected header {headers:?}")));
    }
    r.deserialize().map(|row| row.map_err(|e| format_err(path, e))).collect()
}

pub fn read_json(path: &Path) -> Result<Vec<RunSummary>> {
    let file = File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    serde_json::from_reader(std::io::BufReader::new(file)).map_err(|e| format_err(path, e))
}
