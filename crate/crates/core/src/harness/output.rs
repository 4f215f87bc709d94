use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use super::config::{HarnessError, LoadedScenario};
use super::run::RunResult;
use crate::traffic::write_schedule_csv;

/// Files written by [`write_outputs`].
pub const OUTPUT_FILES: [&str; 9] = [
    "aggregate_bw.csv",
    "tagged_ingress_bw.csv",
    "tagged_egress_bw.csv",
    "probe_delay.csv",
    "probe_loss.csv",
    "flows.csv",
    "audit.log",
    "summary.json",
    "manifest.json",
];

/// Resolved configuration, seed and code version of a run.
pub fn manifest(sc: &LoadedScenario, result: &RunResult) -> Value {
    json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "scenario": sc.config.name,
        "source": sc.source.as_ref().map(|p| p.display().to_string()),
        "seed": sc.config.seed,
        "time_compression": sc.config.time_compression,
        "config": sc.config,
        "rules": result.rules.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "series": result.series.all().iter().map(|s| json!({"name": s.name, "unit": s.unit})).collect::<Vec<_>>(),
        "outputs": OUTPUT_FILES,
    })
}

fn write(dir: &Path, name: &str, data: &[u8]) -> Result<(), HarnessError> {
    let path = dir.join(name);
    fs::write(&path, data).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes the five series, the flow schedule, the audit log, the summary
/// and the manifest into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, sc: &LoadedScenario, result: &RunResult) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    for s in result.series.all() {
        write(dir, &format!("{}.csv", s.name), s.to_csv().as_bytes())?;
    }
    let mut flows = Vec::new();
    write_schedule_csv(&result.flows, &mut flows).expect("writing to memory");
    write(dir, "flows.csv", &flows)?;
    let mut audit = result.audit.join("\n");
    if !audit.is_empty() {
        audit.push('\n');
    }
    write(dir, "audit.log", audit.as_bytes())?;
    let pretty = |v: &Value| serde_json::to_string_pretty(v).expect("json values serialize") + "\n";
    let summary = serde_json::to_value(&result.summary).expect("summary serializes");
    write(dir, "summary.json", pretty(&summary).as_bytes())?;
    write(dir, "manifest.json", pretty(&manifest(sc, result)).as_bytes())?;
    Ok(())
}
