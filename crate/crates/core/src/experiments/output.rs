//! CSV and manifest writers. Column layouts are fixed; the plotting scripts
//! parse them by header name.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use super::{PhaseCellResult, RankScanRow, TransitionEstimate};
use crate::error::Result;
use crate::statdim::StatDimEstimate;
use crate::theory::{delta_star_asymptote, TheoryCurve};

pub const PHASE_HEADER: [&str; 12] = [
    "model",
    "N",
    "L",
    "d",
    "K",
    "alpha_target",
    "alpha_achieved",
    "epsilon",
    "trials",
    "identifiable_count",
    "ambiguous_count",
    "base_seed",
];
pub const TRANSITION_HEADER: [&str; 6] = ["model", "N", "alpha", "epsilon_50", "method", "censored"];
pub const THEORY_HEADER: [&str; 5] = ["epsilon", "mu_star", "delta_star", "asymptote_2eps_log", "residual"];
pub const STATDIM_HEADER: [&str; 7] = ["N", "K", "epsilon", "samples", "mean", "stderr", "seed"];
pub const RANK_SCAN_HEADER: [&str; 6] = ["N", "L", "d", "seed", "measured_rank", "oracle_rank"];

fn phase_record(c: &PhaseCellResult) -> Vec<String> {
    vec![
        c.model.clone(),
        c.n.to_string(),
        c.l.to_string(),
        c.d.to_string(),
        c.k.to_string(),
        c.alpha_target.to_string(),
        c.alpha_achieved.to_string(),
        c.epsilon.to_string(),
        c.trials.to_string(),
        c.identifiable_count.to_string(),
        c.ambiguous_count.to_string(),
        c.base_seed.to_string(),
    ]
}

/// Appends cells to `phase_diagram.csv`, flushing after every row so a
/// crashed run leaves a readable prefix.
pub struct PhaseCsvWriter {
    inner: csv::Writer<File>,
}

impl PhaseCsvWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let mut inner = csv::Writer::from_path(path)?;
        inner.write_record(PHASE_HEADER)?;
        inner.flush()?;
        Ok(PhaseCsvWriter { inner })
    }

    pub fn append(&mut self, cell: &PhaseCellResult) -> Result<()> {
        self.inner.write_record(phase_record(cell))?;
        self.inner.flush()?;
        Ok(())
    }
}

pub fn write_phase_csv(path: &Path, cells: &[PhaseCellResult]) -> Result<()> {
    let mut w = PhaseCsvWriter::create(path)?;
    cells.iter().try_for_each(|c| w.append(c))
}

fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_transitions_csv(path: &Path, rows: &[TransitionEstimate]) -> Result<()> {
    write_rows(
        path,
        &TRANSITION_HEADER,
        rows.iter().map(|t| {
            vec![
                t.model.clone(),
                t.n.to_string(),
                t.alpha.to_string(),
                t.epsilon_50.map(|e| e.to_string()).unwrap_or_default(),
                t.method.clone(),
                t.censored.to_string(),
            ]
        }),
    )
}

pub fn write_theory_csv(path: &Path, curve: &TheoryCurve) -> Result<()> {
    write_rows(
        path,
        &THEORY_HEADER,
        curve.points.iter().map(|p| {
            vec![
                p.epsilon.to_string(),
                p.mu_star.to_string(),
                p.delta_star.to_string(),
                delta_star_asymptote(p.epsilon).to_string(),
                p.residual.to_string(),
            ]
        }),
    )
}

pub fn write_statdim_csv(path: &Path, rows: &[StatDimEstimate]) -> Result<()> {
    write_rows(
        path,
        &STATDIM_HEADER,
        rows.iter().map(|s| {
            vec![
                s.n.to_string(),
                s.k.to_string(),
                (s.k as f64 / s.n as f64).to_string(),
                s.samples.to_string(),
                s.mean.to_string(),
                s.stderr.to_string(),
                s.seed.to_string(),
            ]
        }),
    )
}

pub fn write_rank_scan_csv(path: &Path, rows: &[RankScanRow]) -> Result<()> {
    write_rows(
        path,
        &RANK_SCAN_HEADER,
        rows.iter().map(|r| {
            vec![
                r.n.to_string(),
                r.l.to_string(),
                r.d.to_string(),
                r.seed.to_string(),
                r.measured_rank.to_string(),
                r.oracle_rank.to_string(),
            ]
        }),
    )
}

pub fn write_spectrum_csv(path: &Path, sigma: &[f64]) -> Result<()> {
    write_rows(path, &["sigma"], sigma.iter().map(|s| vec![s.to_string()]))
}

/// Run record written next to the CSV outputs. Timestamps live here only.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub tool: String,
    pub version: String,
    pub config: serde_json::Value,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<String>,
    pub summary: serde_json::Value,
}

impl Manifest {
    pub fn start(command: &str, config: serde_json::Value) -> (Self, std::time::Instant) {
        let started = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        (
            Manifest {
                command: command.to_string(),
                tool: env!("CARGO_PKG_NAME").to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                config,
                started_unix: started,
                wall_clock_seconds: 0.0,
                outputs: Vec::new(),
                summary: serde_json::Value::Null,
            },
            std::time::Instant::now(),
        )
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        let mut f = File::create(&path)?;
        serde_json::to_writer_pretty(&mut f, self)?;
        writeln!(f)?;
        Ok(path)
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}
