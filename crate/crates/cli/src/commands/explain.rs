use indexmap::IndexMap;
use saleslens::attribution::{global_importance, shap_all, shap_dispersion, Dispersion};
use saleslens::frame::Scaler;
use saleslens::models::{Family, TreeEnsemble};
use saleslens::redundancy::{redundancy_distance, single_link_cluster, Dendrogram};
use serde_json::json;

use super::train::model_file;
use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};
use crate::run::{file_stem, load_data, Workspace};
use crate::svg::{self, Svg};

const FAMILIES: [Family; 3] = [Family::GradientBoosting, Family::Bagged, Family::AdditiveBoosting];

fn read_model(ws: &Workspace, name: &str) -> CliResult<TreeEnsemble> {
    if !ws.path(name).exists() {
        return Err(CliError::user(format!(
            "{} not found; run `saleslens train` first",
            ws.path(name).display()
        )));
    }
    Ok(TreeEnsemble::from_json(&ws.read(name)?)?)
}

pub fn explain(cfg: &PipelineConfig) -> CliResult<()> {
    if cfg.shap_bins < 2 {
        return Err(CliError::user("shap_bins must be at least 2"));
    }
    let data = load_data(cfg)?;
    let ws = Workspace::open(cfg)?;
    let model = read_model(&ws, "model.json")?;
    if !ws.path("scaler.json").exists() {
        return Err(CliError::user("scaler.json not found; run `saleslens train` first"));
    }
    let scaler: Scaler =
        serde_json::from_str(&ws.read("scaler.json")?).map_err(|e| CliError::user(format!("scaler.json: {e}")))?;
    let raw = data.frame.select_names(&model.feature_names)?;
    let scaled = scaler.transform(&raw)?;

    let shap = shap_all(&model, &scaled)?;
    let names = &model.feature_names;
    let mut rows = Vec::with_capacity(shap.n_rows() * names.len());
    for r in 0..shap.n_rows() {
        for (j, name) in names.iter().enumerate() {
            rows.push(vec![
                r.to_string(),
                name.clone(),
                raw.column(j)[r].to_string(),
                shap.values[r][j].to_string(),
            ]);
        }
    }
    ws.write_csv("shap.csv", &["row", "feature", "x", "phi"], rows)?;

    for (j, name) in names.iter().enumerate() {
        let points: Vec<(f64, f64)> = raw.column(j).iter().copied().zip(shap.column(j)).collect();
        let mut plot = Svg::new(svg::PANEL_WIDTH, svg::PANEL_HEIGHT);
        let title = format!("SHAP values for {name}");
        svg::scatter_panel(&mut plot, 0.0, 0.0, &points, None, (&title, name, "SHAP value"));
        ws.write(&format!("shap_{}.svg", file_stem(name)), plot.finish())?;
    }

    let importance = global_importance(&shap);
    ws.write_json("importance.json", &importance)?;
    let dendrogram = if raw.n_cols() >= 2 {
        single_link_cluster(&redundancy_distance(&raw, None, cfg.cluster_mode)?)?
    } else {
        Dendrogram {
            leaf_names: names.clone(),
            merges: Vec::new(),
        }
    };
    ws.write_json(
        "dendrogram.json",
        &json!({ "mode": cfg.cluster_mode, "dendrogram": dendrogram }),
    )?;
    let bars: Vec<(String, f64)> = importance
        .iter()
        .map(|i| (i.feature.clone(), i.mean_abs_shap))
        .collect();
    ws.write("importance.svg", svg::importance_with_dendrogram(&bars, &dendrogram))?;

    let primary = shap_dispersion(&shap, &scaled, cfg.shap_bins)?;
    let mut families: IndexMap<String, Dispersion> = IndexMap::new();
    for family in FAMILIES {
        let file = model_file(family);
        if !ws.path(&file).exists() {
            continue;
        }
        let m = read_model(&ws, &file)?;
        let x = scaler.transform(&data.frame.select_names(&m.feature_names)?)?;
        families.insert(
            family.to_string(),
            shap_dispersion(&shap_all(&m, &x)?, &x, cfg.shap_bins)?,
        );
    }
    ws.write_json(
        "dispersion.json",
        &json!({
            "bins": cfg.shap_bins,
            "model": model.family,
            "dispersion": primary,
            "families": families,
        }),
    )?;
    println!(
        "explained {} rows of the {} model; aggregate SHAP dispersion {:.4}",
        shap.n_rows(),
        model.family,
        primary.aggregate
    );
    Ok(())
}
