//! Writes a report to disk together with a run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::experiments::Report;

#[derive(Clone, Debug, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub rows: Option<usize>,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub experiment: &'static str,
    pub config: ExperimentConfig,
    pub config_sha256: String,
    pub seed: u64,
    pub version: &'static str,
    pub threads: usize,
    pub started_unix: u64,
    pub wall_seconds: f64,
    pub outputs: Vec<OutputFile>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Run timing, filled in by the caller.
#[derive(Clone, Copy, Debug)]
pub struct RunInfo {
    pub threads: usize,
    pub started_unix: u64,
    pub wall_seconds: f64,
}

fn write(dir: &Path, name: &str, bytes: &[u8], rows: Option<usize>) -> anyhow::Result<OutputFile> {
    fs::write(dir.join(name), bytes)?;
    Ok(OutputFile { file: name.to_owned(), rows, sha256: sha256_hex(bytes) })
}

/// Writes every table and document under `cfg.out`, then `manifest.json`.
pub fn write_report(cfg: &ExperimentConfig, report: &Report, info: RunInfo) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(&cfg.out)?;
    let mut outputs = Vec::new();
    for table in &report.tables {
        let name = format!("{}.{}", table.name, cfg.format.extension());
        outputs.push(write(&cfg.out, &name, &table.encode(cfg.format)?, Some(table.rows.len()))?);
    }
    for (name, doc) in &report.documents {
        let mut bytes = serde_json::to_vec_pretty(doc)?;
        bytes.push(b'\n');
        outputs.push(write(&cfg.out, &format!("{name}.json"), &bytes, None)?);
    }
    let manifest = Manifest {
        experiment: cfg.experiment.name(),
        config: cfg.clone(),
        config_sha256: sha256_hex(cfg.canonical().as_bytes()),
        seed: cfg.seed,
        version: env!("CARGO_PKG_VERSION"),
        threads: info.threads,
        started_unix: info.started_unix,
        wall_seconds: info.wall_seconds,
        outputs,
    };
    let path = cfg.out.join("manifest.json");
    fs::write(&path, serde_json::to_vec_pretty(&manifest)?)?;
    Ok(path)
}
