//! Run manifests and the on-disk output layout: one directory per run with
//! manifest.json, reports/*.json and data/*.csv.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use schlab_core::points::StatReport;
use schlab_core::{Error, Result};

use crate::config::Config;
use crate::experiments::{self, ExperimentOutcome};

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    /// Hash of every result-affecting config key.
    pub config_hash: String,
    pub code_version: String,
    pub wall_clock_secs: f64,
    pub report_files: Vec<String>,
    pub data_files: Vec<String>,
    /// verdict per report name, "pass"/"fail"/"bound"/"inapplicable".
    pub verdicts: BTreeMap<String, String>,
    pub pass: bool,
}

fn verdict_str(r: &StatReport) -> String {
    serde_json::to_value(r.verdict)
        .ok()
        .and_then(|v| v.as_str().map(|s| s.to_string()))
        .unwrap_or_else(|| "unknown".into())
}

/// Execute the configured experiment and persist manifest, reports and data
/// under out_dir. Returns the manifest.
pub fn run_experiment(config: &Config) -> Result<RunManifest> {
    let out_dir = PathBuf::from(config.get("out_dir").unwrap_or("runs/latest"));
    let started = Instant::now();
    let outcome = experiments::run(config)?;
    let wall = started.elapsed().as_secs_f64();
    write_outcome(config, &outcome, wall, &out_dir)
}

pub fn write_outcome(
    config: &Config,
    outcome: &ExperimentOutcome,
    wall_clock_secs: f64,
    out_dir: &Path,
) -> Result<RunManifest> {
    let reports_dir = out_dir.join("reports");
    let data_dir = out_dir.join("data");
    std::fs::create_dir_all(&reports_dir)
        .map_err(|e| Error::invalid("out_dir", format!("{e}")))?;
    std::fs::create_dir_all(&data_dir).map_err(|e| Error::invalid("out_dir", format!("{e}")))?;

    let report_file = format!("reports/{}.json", outcome.experiment);
    let json = serde_json::to_string_pretty(&outcome.reports)
        .map_err(|e| Error::invalid("reports", format!("{e}")))?;
    std::fs::write(out_dir.join(&report_file), json)
        .map_err(|e| Error::invalid("out_dir", format!("{e}")))?;

    let mut data_files = Vec::new();
    for (name, content) in &outcome.data {
        let rel = format!("data/{name}");
        std::fs::write(out_dir.join(&rel), content)
            .map_err(|e| Error::invalid("out_dir", format!("{e}")))?;
        data_files.push(rel);
    }

    let manifest = RunManifest {
        experiment: outcome.experiment.clone(),
        config_hash: format!("{:016x}", config.result_hash()),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_clock_secs,
        report_files: vec![report_file],
        data_files,
        verdicts: outcome
            .reports
            .iter()
            .map(|r| (r.name.clone(), verdict_str(r)))
            .collect(),
        pass: outcome.passed(),
    };
    let manifest_json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::invalid("manifest", format!("{e}")))?;
    std::fs::write(out_dir.join("manifest.json"), manifest_json)
        .map_err(|e| Error::invalid("out_dir", format!("{e}")))?;
    Ok(manifest)
}

/// Load a manifest back for replay validation.
pub fn load_manifest(path: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::invalid("manifest", format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::invalid("manifest", format!("{e}")))
}
