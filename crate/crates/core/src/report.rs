//! CSV and JSON output of a sweep.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::protocol::{SimConfig, SweepPoint, SweepResult};

pub const CSV_HEADER: &str =
    "snr_db,scheme,policy,detector_relay,detector_dest,ber,avg_delay_epochs,avg_buffer_size,residual_blocks,mults,adds";

/// Bumped whenever the CSV columns or their formatting change.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

/// Everything needed to reproduce a run, plus its results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub schema_version: u32,
    pub seed: u64,
    /// SNR_dB = 10·log10(1/σ²), unit transmit power per user per hop.
    pub snr_definition: String,
    pub runtime_seconds: f64,
    pub config: SimConfig,
    pub result: SweepResult,
}

impl RunManifest {
    pub fn new(config: &SimConfig, result: SweepResult, runtime_seconds: f64) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            schema_version: SCHEMA_VERSION,
            seed: config.seed,
            snr_definition: "10*log10(1/noise_variance), unit transmit power per user per hop".into(),
            runtime_seconds,
            config: config.clone(),
            result,
        }
    }
}

fn csv_row(p: &SweepPoint) -> String {
    let delay = p.avg_delay_epochs.map(|d| d.to_string()).unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        p.snr_db,
        p.scheme,
        p.policy,
        p.detector_relay,
        p.detector_dest,
        p.ber,
        delay,
        p.avg_buffer_size,
        p.residual_blocks,
        p.mults,
        p.adds
    )
}

pub fn write_csv<W: Write>(result: &SweepResult, mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for point in &result.points {
        writeln!(out, "{}", csv_row(point))?;
    }
    out.flush()
}

pub fn write_json<W: Write>(manifest: &RunManifest, mut out: W) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut out, manifest)?;
    writeln!(out)?;
    out.flush()
}

pub fn emit_results<W: Write>(manifest: &RunManifest, format: OutputFormat, out: W) -> io::Result<()> {
    match format {
        OutputFormat::Csv => write_csv(&manifest.result, out),
        OutputFormat::Json => write_json(manifest, out),
    }
}
