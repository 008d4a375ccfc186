//! On-disk formats: frames.csv, summary documents, oracle.csv and report series.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use iopo_core::{FrameRecord, MetricsSummary, Outcome};
use serde::{Deserialize, Serialize};

pub const FRAMES_CSV: &str = "frames.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const CHECKPOINT_JSON: &str = "checkpoint.json";
pub const CONFIG_TOML: &str = "config.toml";
pub const EVAL_CSV: &str = "eval_summary.csv";
pub const EVAL_JSON: &str = "eval_summary.json";
pub const ORACLE_CSV: &str = "oracle.csv";
pub const SERIES_CSV: &str = "series.csv";
pub const PLOT_SVG: &str = "energy.svg";

/// One frames.csv row; field order is the column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRow {
    pub frame: u64,
    pub raw_energy: f64,
    pub penalized_energy: f64,
    pub overdue_count: usize,
    pub improved: u8,
    pub ref_raw_energy: f64,
    pub ref_penalized_energy: f64,
    pub loss: Option<f64>,
}

impl From<&FrameRecord> for FrameRow {
    fn from(r: &FrameRecord) -> Self {
        Self {
            frame: r.frame,
            raw_energy: r.raw_energy,
            penalized_energy: r.penalized_energy,
            overdue_count: r.overdue_count,
            improved: u8::from(r.improved),
            ref_raw_energy: r.ref_raw_energy,
            ref_penalized_energy: r.ref_penalized_energy,
            loss: r.loss,
        }
    }
}

impl FrameRow {
    pub fn outcome(&self) -> Outcome {
        Outcome {
            frame: self.frame,
            raw_energy: self.raw_energy,
            penalized_energy: self.penalized_energy,
            overdue_count: self.overdue_count,
            // Not recorded in frames.csv.
            offloaded: 0,
        }
    }
}

pub fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

pub fn read_frames(path: &Path) -> Result<Vec<FrameRow>> {
    let mut rd =
        csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    rd.deserialize()
        .collect::<Result<Vec<FrameRow>, _>>()
        .with_context(|| format!("parsing {}", path.display()))
}

/// The document written to summary.json and eval_summary.json.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDocument {
    pub config_hash: String,
    pub seed: u64,
    pub frames: u64,
    pub window_start: u64,
    pub window_end: u64,
    pub metrics: Vec<MetricsSummary>,
}

impl SummaryDocument {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }

    pub fn metric(&self, method: &str) -> Option<&MetricsSummary> {
        self.metrics.iter().find(|m| m.method == method)
    }
}

pub fn write_metrics_csv(path: &Path, metrics: &[MetricsSummary]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for m in metrics {
        w.serialize(m)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub frame: u64,
    /// Assigned UAV per user (1-based), `L` for local.
    pub decision: String,
    pub raw_energy: f64,
    pub penalized_energy: f64,
    pub overdue_count: usize,
    pub decisions_searched: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub label: String,
    pub frame: u64,
    pub penalized_energy: f64,
    pub moving_mean: f64,
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    f.write_all(text.as_bytes())?;
    Ok(())
}
