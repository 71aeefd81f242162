//! Flat result records and their CSV/JSON serialization.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use qrn_core::optimizer::SearchMethod;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, HarnessResult};
use crate::spec::ExperimentSpec;

/// Version of the JSON document layout.
pub const SCHEMA_VERSION: u32 = 1;

/// CSV column order; identical to the field order of [`SweepRecord`].
pub const CSV_COLUMNS: [&str; 24] = [
    "scenario",
    "point",
    "f0",
    "r0",
    "l0",
    "p2",
    "eta",
    "r_min",
    "f_min",
    "method",
    "seed",
    "generation",
    "feasible",
    "status",
    "objective_km",
    "n_links",
    "d_km",
    "n_link_distill",
    "n_e2e_distill",
    "e2e_fidelity",
    "e2e_rate",
    "link_fidelity",
    "link_rate",
    "evaluations",
];

/// One output row. Decision and result columns are empty when no decision
/// exists for the row (no feasible solution, or a GA generation before the
/// first feasible individual).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub scenario: String,
    /// Index of the grid point in coordinate order.
    pub point: usize,
    pub f0: f64,
    pub r0: f64,
    pub l0: f64,
    pub p2: f64,
    pub eta: f64,
    pub r_min: f64,
    pub f_min: f64,
    /// `evaluate`, `exhaustive` or `genetic`.
    pub method: String,
    pub seed: Option<u64>,
    pub generation: Option<usize>,
    pub feasible: bool,
    /// `feasible`, an infeasibility reason, `no_feasible_solution`, or
    /// `rate_unachievable` when R0 is already below the rate floor.
    pub status: String,
    pub objective_km: Option<f64>,
    pub n_links: Option<usize>,
    pub d_km: Option<f64>,
    pub n_link_distill: Option<usize>,
    pub n_e2e_distill: Option<usize>,
    pub e2e_fidelity: Option<f64>,
    pub e2e_rate: Option<f64>,
    pub link_fidelity: Option<f64>,
    pub link_rate: Option<f64>,
    /// Decisions evaluated to produce this row.
    pub evaluations: u64,
}

/// Best feasible record of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestRecord {
    pub point: usize,
    pub objective_km: f64,
    pub n_links: usize,
    pub d_km: f64,
    pub n_link_distill: usize,
    pub n_e2e_distill: usize,
}

/// Per-seed GA convergence figures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaRunSummary {
    pub point: usize,
    pub seed: u64,
    pub objective_km: Option<f64>,
    pub exhaustive_objective_km: Option<f64>,
    /// `100 * (exhaustive - ga) / exhaustive`.
    pub gap_percent: Option<f64>,
    pub converged_at: Option<usize>,
    pub generations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: String,
    pub method: SearchMethod,
    pub points: usize,
    pub records: usize,
    pub feasible_records: usize,
    /// Explicit marker for a run that produced no rows.
    pub empty: bool,
    pub best: Option<BestRecord>,
    pub ga_runs: Vec<GaRunSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "csv" => Some(OutputFormat::Csv),
            "json" => Some(OutputFormat::Json),
            _ => None,
        }
    }
}

#[derive(Serialize, Deserialize)]
pub struct JsonDocument {
    pub schema_version: u32,
    pub spec_echo: ExperimentSpec,
    pub records: Vec<SweepRecord>,
    pub summary: Summary,
}

/// Writes the records as CSV: header row, then one line per record.
pub fn write_csv<W: Write>(records: &[SweepRecord], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(
    spec: &ExperimentSpec,
    records: &[SweepRecord],
    summary: &Summary,
    out: W,
) -> serde_json::Result<()> {
    let doc = JsonDocument {
        schema_version: SCHEMA_VERSION,
        spec_echo: spec.clone(),
        records: records.to_vec(),
        summary: summary.clone(),
    };
    let mut out = out;
    serde_json::to_writer_pretty(&mut out, &doc)?;
    out.write_all(b"\n").map_err(serde_json::Error::io)
}

/// Renders the output in memory.
pub fn render(spec: &ExperimentSpec, records: &[SweepRecord], summary: &Summary, format: OutputFormat) -> Vec<u8> {
    let mut buf = Vec::new();
    match format {
        OutputFormat::Csv => write_csv(records, &mut buf).expect("in-memory CSV write"),
        OutputFormat::Json => write_json(spec, records, summary, &mut buf).expect("in-memory JSON write"),
    }
    buf
}

/// Writes the output file, creating parent directories as needed.
pub fn write_outputs(
    spec: &ExperimentSpec,
    records: &[SweepRecord],
    summary: &Summary,
    format: OutputFormat,
    path: &Path,
) -> HarnessResult<()> {
    if records.is_empty() != summary.empty {
        return Err(HarnessError::InvalidSpec(
            "empty record list without the summary's empty marker".into(),
        ));
    }
    let bytes = render(spec, records, summary, format);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&bytes)
        .and_then(|_| w.flush())
        .map_err(|e| HarnessError::io(path, e))
}

/// Parses CSV produced by [`write_csv`].
pub fn read_csv(text: &[u8]) -> csv::Result<Vec<SweepRecord>> {
    csv::Reader::from_reader(text).deserialize().collect()
}
