use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::OutputFormat;
use crate::error::{Error, Result};
use crate::noise::ShotLedger;
use crate::strategies::MethodId;

/// One (architecture, trial, method) outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub method: MethodId,
    pub architecture: String,
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    /// Absent when the strategy failed.
    pub success_probability: Option<f64>,
    pub one_norm: Option<f64>,
    pub ledger: ShotLedger,
    pub wall_ms: u64,
    #[serde(default)]
    pub diagnostics: Vec<String>,
    #[serde(default)]
    pub error: Option<String>,
}

/// The fixed CSV columns.
pub const CSV_COLUMNS: [&str; 9] = [
    "method",
    "n",
    "trial",
    "seed",
    "success_probability",
    "one_norm",
    "shots_calibration",
    "shots_circuit",
    "wall_ms",
];

#[derive(Serialize)]
struct CsvRow<'a> {
    method: &'a str,
    n: usize,
    trial: usize,
    seed: u64,
    success_probability: Option<f64>,
    one_norm: Option<f64>,
    /// Profiling plus calibration shots.
    shots_calibration: u64,
    shots_circuit: u64,
    wall_ms: u64,
}

impl<'a> From<&'a ResultRecord> for CsvRow<'a> {
    fn from(r: &'a ResultRecord) -> Self {
        CsvRow {
            method: r.method.as_str(),
            n: r.n,
            trial: r.trial,
            seed: r.seed,
            success_probability: r.success_probability,
            one_norm: r.one_norm,
            shots_calibration: r.ledger.profiling_shots + r.ledger.calibration_shots,
            shots_circuit: r.ledger.circuit_shots,
            wall_ms: r.wall_ms,
        }
    }
}

/// Streaming writer that flushes after every record.
pub struct RecordSink {
    inner: SinkKind,
}

enum SinkKind {
    Csv(csv::Writer<Box<dyn Write + Send>>),
    Json(BufWriter<Box<dyn Write + Send>>),
}

impl RecordSink {
    pub fn new(out: Box<dyn Write + Send>, format: OutputFormat) -> Result<Self> {
        let inner = match format {
            OutputFormat::Csv => {
                let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
                w.write_record(CSV_COLUMNS)?;
                w.flush()?;
                SinkKind::Csv(w)
            }
            OutputFormat::Json => SinkKind::Json(BufWriter::new(out)),
        };
        Ok(RecordSink { inner })
    }

    pub fn create(path: &Path, format: OutputFormat) -> Result<Self> {
        Self::new(Box::new(File::create(path)?), format)
    }

    pub fn write(&mut self, r: &ResultRecord) -> Result<()> {
        match &mut self.inner {
            SinkKind::Csv(w) => {
                w.serialize(CsvRow::from(r))?;
                w.flush()?;
            }
            SinkKind::Json(w) => {
                serde_json::to_writer(&mut *w, r)?;
                w.write_all(b"\n")?;
                w.flush()?;
            }
        }
        Ok(())
    }
}

/// Write `records` to `path`. Refuses an empty list.
pub fn emit_results(records: &[ResultRecord], format: OutputFormat, path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Empty("result records"));
    }
    let mut sink = RecordSink::create(path, format)?;
    records.iter().try_for_each(|r| sink.write(r))
}

/// Read records written in the JSON format.
pub fn read_json_records(path: &Path) -> Result<Vec<ResultRecord>> {
    let mut out = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}
