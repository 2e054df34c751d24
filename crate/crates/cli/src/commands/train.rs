use saleslens::frame::Scaler;
use saleslens::models::{grid_search, train_validation_split, Family, Grid, ModelParams, SplitSpec};
use saleslens::stats::prune_correlated;
use saleslens::Frame;
use serde_json::json;

use crate::config::{ModelSpec, PipelineConfig};
use crate::error::{CliError, CliResult};
use crate::run::{load_data, stage_seed, Data, Workspace};

pub fn model_file(family: Family) -> String {
    format!("model_{family}.json")
}

/// Standardized training frame (features then target) and its scaler.
pub fn training_frame(cfg: &PipelineConfig, data: &Data) -> CliResult<(Frame, Scaler)> {
    let features = if cfg.train_on_pruned {
        let pruning = prune_correlated(&data.frame, Some(&data.target), cfg.prune_threshold)?;
        data.frame.select_names(&pruning.retained_names(&data.frame))?
    } else {
        data.features()?
    };
    let scaler = Scaler::fit(&features)?;
    let scaled = scaler.transform(&features)?;
    let mut pairs: Vec<(String, Vec<f64>)> = scaled
        .names()
        .iter()
        .cloned()
        .zip(scaled.columns().iter().cloned())
        .collect();
    pairs.push((data.target.clone(), data.frame.column_by_name(&data.target)?.to_vec()));
    Ok((Frame::from_pairs(pairs)?, scaler))
}

fn base_params(spec: &ModelSpec) -> CliResult<(ModelParams, Grid)> {
    let mut base = ModelParams::default_for(spec.family);
    for (name, value) in &spec.params {
        base.set(name, *value)?;
    }
    let grid = if spec.grid.is_empty() {
        let (name, value) = base.to_map().into_iter().next().expect("every family has parameters");
        Grid::from([(name, vec![value])])
    } else {
        spec.grid.clone()
    };
    Ok((base, grid))
}

fn describe(params: &ModelParams) -> String {
    params
        .to_map()
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn train(cfg: &PipelineConfig) -> CliResult<()> {
    if cfg.models.is_empty() {
        return Err(CliError::user("no model families configured"));
    }
    let data = load_data(cfg)?;
    let ws = Workspace::open(cfg)?;
    let (frame, scaler) = training_frame(cfg, &data)?;
    let split = SplitSpec {
        train_fraction: cfg.train_fraction,
        seed: stage_seed(cfg, "split"),
    };
    let (train_rows, _) = train_validation_split(frame.n_rows(), split)?;
    let train_frame = frame.take_rows(&train_rows)?;

    struct Row {
        family: Family,
        params: String,
        train: Option<f64>,
        valid: Option<f64>,
    }
    let mut rows = Vec::new();
    let mut best: Option<(f64, Family, String)> = None;
    for spec in &cfg.models {
        let (base, grid) = base_params(spec)?;
        let fit_seed = stage_seed(cfg, &format!("train/{}", spec.family));
        let search = grid_search(&base, &frame, &data.target, &grid, split, fit_seed)?;
        let points = saleslens::models::expand_grid(&base, &grid)?;
        for (params, report) in points.iter().zip(&search.table) {
            rows.push(Row {
                family: spec.family,
                params: describe(params),
                train: report.train_msae,
                valid: report.validation_msae,
            });
        }
        let (model, _) = search.best.fit(&train_frame, &data.target, fit_seed)?;
        let json = model.to_json();
        ws.write(&model_file(spec.family), format!("{json}\n"))?;
        let score = search.table[search.best_index].validation_msae.unwrap_or(f64::INFINITY);
        if best.as_ref().is_none_or(|(s, _, _)| score < *s) {
            best = Some((score, spec.family, json));
        }
    }
    rows.sort_by(|a, b| {
        a.valid
            .unwrap_or(f64::INFINITY)
            .total_cmp(&b.valid.unwrap_or(f64::INFINITY))
    });
    ws.write_csv(
        "fit_report.csv",
        &["model", "params", "train_msae", "validation_msae"],
        rows.iter().map(|r| {
            vec![
                r.family.to_string(),
                r.params.clone(),
                fmt_opt(r.train),
                fmt_opt(r.valid),
            ]
        }),
    )?;
    let (score, family, json) = best.expect("at least one family");
    ws.write("model.json", format!("{json}\n"))?;
    ws.write_json("scaler.json", &scaler)?;
    ws.write_json(
        "train.json",
        &json!({
            "target": data.target,
            "features": scaler.names,
            "train_fraction": cfg.train_fraction,
            "best_family": family,
            "best_validation_msae": score,
        }),
    )?;
    println!("best model: {family} (validation MSAE {score:.4}); wrote fit_report.csv, model.json");
    Ok(())
}
