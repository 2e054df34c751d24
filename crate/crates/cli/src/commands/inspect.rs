use saleslens::frame::standardize;
use saleslens::pca::pca_scree;
use saleslens::stats::pearson_corr;

use crate::config::PipelineConfig;
use crate::error::CliResult;
use crate::run::{load_data, Workspace};
use crate::svg;

/// Correlation matrix of every column and the scree of the standardized
/// features.
pub fn inspect(cfg: &PipelineConfig) -> CliResult<()> {
    let data = load_data(cfg)?;
    let ws = Workspace::open(cfg)?;
    let names = data.frame.names().to_vec();
    let corr = pearson_corr(&data.frame)?;

    let mut header = vec![""];
    header.extend(names.iter().map(String::as_str));
    let rows = names.iter().zip(&corr).map(|(name, row)| {
        let mut r = vec![name.clone()];
        r.extend(row.iter().map(|v| v.to_string()));
        r
    });
    ws.write_csv("corr.csv", &header, rows)?;
    ws.write("corr.svg", svg::heatmap(&names, &corr, "Pearson correlation"))?;

    let (features, _) = standardize(&data.features()?)?;
    let scree = pca_scree(&features)?;
    let rows = scree
        .explained_variance
        .iter()
        .zip(&scree.explained_ratio)
        .enumerate()
        .map(|(k, (v, r))| vec![(k + 1).to_string(), v.to_string(), r.to_string()]);
    ws.write_csv(
        "scree.csv",
        &["component", "explained_variance", "explained_ratio"],
        rows,
    )?;
    let points: Vec<(f64, f64)> = scree
        .explained_ratio
        .iter()
        .enumerate()
        .map(|(k, r)| ((k + 1) as f64, *r))
        .collect();
    ws.write(
        "scree.svg",
        svg::line_chart("Scree plot", "component", "explained variance ratio", &points),
    )?;

    println!(
        "inspected {} rows x {} columns ({} dropped); wrote corr.csv, corr.svg, scree.csv, scree.svg",
        data.frame.n_rows(),
        data.frame.n_cols(),
        data.dropped
    );
    Ok(())
}
