use indexmap::IndexMap;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{msae, FitReport, ModelParams};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::seed::rng;

/// Ordered map from hyperparameter name to candidate values. The Cartesian
/// product is enumerated with the last axis varying fastest.
pub type Grid = IndexMap<String, Vec<f64>>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

/// Seeded random partition of `0..n` into sorted train and validation rows.
pub fn train_validation_split(n: usize, split: SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(split.train_fraction > 0.5 && split.train_fraction < 0.95) {
        return Err(Error::InvalidParameter(format!(
            "train_fraction {} outside (0.5, 0.95)",
            split.train_fraction
        )));
    }
    let n_train = (split.train_fraction * n as f64).round() as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::InvalidParameter(format!(
            "{n} rows cannot be split at {}",
            split.train_fraction
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng(split.seed));
    let mut train = order[..n_train].to_vec();
    let mut valid = order[n_train..].to_vec();
    train.sort_unstable();
    valid.sort_unstable();
    Ok((train, valid))
}

#[derive(Debug, Clone)]
pub struct GridSearch {
    pub best: ModelParams,
    pub best_index: usize,
    /// One report per grid point, in grid order.
    pub table: Vec<FitReport>,
}

/// Every grid point in enumeration order, applied on top of `base`.
pub fn expand_grid(base: &ModelParams, grid: &Grid) -> Result<Vec<ModelParams>> {
    if grid.is_empty() || grid.values().any(Vec::is_empty) {
        return Err(Error::EmptyGrid);
    }
    let axes: Vec<(&String, &Vec<f64>)> = grid.iter().collect();
    let total: usize = axes.iter().map(|(_, v)| v.len()).product();
    let mut points = Vec::with_capacity(total);
    for mut k in 0..total {
        let mut picks = vec![0; axes.len()];
        for (a, (_, values)) in axes.iter().enumerate().rev() {
            picks[a] = k % values.len();
            k /= values.len();
        }
        let mut p = base.clone();
        for (a, (name, values)) in axes.iter().enumerate() {
            p.set(name, values[picks[a]])?;
        }
        points.push(p);
    }
    Ok(points)
}

/// Exhaustive search on one fixed train/validation split. The best point has
/// the lowest validation MSAE; earlier grid points win ties.
pub fn grid_search(
    base: &ModelParams,
    frame: &Frame,
    target: &str,
    grid: &Grid,
    split: SplitSpec,
    fit_seed: u64,
) -> Result<GridSearch> {
    let points = expand_grid(base, grid)?;
    let (train_rows, valid_rows) = train_validation_split(frame.n_rows(), split)?;
    let train = frame.take_rows(&train_rows)?;
    let valid = frame.take_rows(&valid_rows)?;
    let y_valid = valid.column_by_name(target)?.to_vec();

    let mut table = Vec::with_capacity(points.len());
    let mut best: Option<(usize, f64)> = None;
    for (i, params) in points.iter().enumerate() {
        let (model, mut report) = params.fit(&train, target, fit_seed)?;
        let pred = model.predict_frame(&valid)?;
        let score = msae(&y_valid, &pred)?;
        report.validation_msae = Some(score);
        if best.is_none_or(|(_, s)| score < s) {
            best = Some((i, score));
        }
        table.push(report);
    }
    let (best_index, _) = best.expect("grid is non-empty");
    Ok(GridSearch {
        best: points[best_index].clone(),
        best_index,
        table,
    })
}
