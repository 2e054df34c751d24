use saleslens::stats::prune_correlated;
use serde_json::json;

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};
use crate::run::{load_data, Workspace};

pub fn prune(cfg: &PipelineConfig) -> CliResult<()> {
    let data = load_data(cfg)?;
    let ws = Workspace::open(cfg)?;
    let pruning = prune_correlated(&data.frame, Some(&data.target), cfg.prune_threshold)?;
    let mut log = String::new();
    for step in &pruning.log {
        log.push_str(&serde_json::to_string(step).map_err(|e| CliError::Internal(e.to_string()))?);
        log.push('\n');
    }
    ws.write("prune_log.jsonl", log)?;
    let retained = pruning.retained_names(&data.frame);
    let removed: Vec<&String> = pruning.log.iter().map(|s| &s.removed).collect();
    ws.write_json(
        "prune.json",
        &json!({
            "threshold": cfg.prune_threshold,
            "target": data.target,
            "retained": retained,
            "removed": removed,
        }),
    )?;
    println!(
        "kept {} of {} features: {}",
        retained.len(),
        retained.len() + removed.len(),
        retained.join(", ")
    );
    Ok(())
}
