use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::tree::{choose_sorted, presort, GrowConfig, Grower};
use super::{as_count, check_fraction, mse, unknown_param, Family, FitReport, TreeEnsemble};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::seed::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbtParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub colsample_bytree: f64,
    pub colsample_bylevel: f64,
    pub min_samples_leaf: usize,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            n_estimators: 100,
            max_depth: 3,
            learning_rate: 0.1,
            colsample_bytree: 1.0,
            colsample_bylevel: 1.0,
            min_samples_leaf: 1,
        }
    }
}

impl GbtParams {
    pub fn to_map(&self) -> IndexMap<String, f64> {
        IndexMap::from([
            ("n_estimators".to_string(), self.n_estimators as f64),
            ("max_depth".to_string(), self.max_depth as f64),
            ("learning_rate".to_string(), self.learning_rate),
            ("colsample_bytree".to_string(), self.colsample_bytree),
            ("colsample_bylevel".to_string(), self.colsample_bylevel),
            ("min_samples_leaf".to_string(), self.min_samples_leaf as f64),
        ])
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        match name {
            "n_estimators" => self.n_estimators = as_count(name, value)?,
            "max_depth" => self.max_depth = as_count(name, value)?,
            "learning_rate" | "eta" => self.learning_rate = value,
            "colsample_bytree" => self.colsample_bytree = value,
            "colsample_bylevel" => self.colsample_bylevel = value,
            "min_samples_leaf" => self.min_samples_leaf = as_count(name, value)?,
            _ => return Err(unknown_param(name, Family::GradientBoosting)),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(Error::InvalidParameter("n_estimators must be at least 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidParameter("min_samples_leaf must be at least 1".into()));
        }
        check_fraction("learning_rate", self.learning_rate)?;
        check_fraction("colsample_bytree", self.colsample_bytree)?;
        check_fraction("colsample_bylevel", self.colsample_bylevel)
    }
}

/// Stagewise squared-loss boosting of `target` on every other column.
pub fn fit_gbt(frame: &Frame, target: &str, params: &GbtParams, seed: u64) -> Result<(TreeEnsemble, FitReport)> {
    let (x, y) = frame.features_and_target(target)?;
    fit_gbt_columns(x.names().to_vec(), x.columns(), &y, params, seed)
}

/// [`fit_gbt`] on raw feature columns.
pub fn fit_gbt_columns(
    names: Vec<String>,
    columns: &[Vec<f64>],
    y: &[f64],
    params: &GbtParams,
    seed: u64,
) -> Result<(TreeEnsemble, FitReport)> {
    params.validate()?;
    let n = y.len();
    if n == 0 || columns.iter().any(|c| c.len() != n) {
        return Err(Error::InvalidParameter("feature and target lengths differ".into()));
    }
    let d = columns.len();
    let base = y.iter().sum::<f64>() / n as f64;
    let mut model = TreeEnsemble::new(Family::GradientBoosting, names, base);
    let mut rng = rng(seed);
    let presorted = presort(columns);
    let all: Vec<usize> = (0..d).collect();

    let mut fitted = vec![base; n];
    let mut residual: Vec<f64> = y.iter().zip(&fitted).map(|(t, p)| t - p).collect();
    let mut leaf_values = vec![0.0; n];
    let mut per_round = Vec::with_capacity(params.n_estimators);

    for _ in 0..params.n_estimators {
        let scope = choose_sorted(&all, params.colsample_bytree, &mut rng);
        let config = GrowConfig {
            max_depth: if d == 0 { 0 } else { params.max_depth },
            min_samples_leaf: params.min_samples_leaf,
            scope: scope.clone(),
            level_fraction: params.colsample_bylevel,
            node_fraction: 1.0,
        };
        let sorted = if scope.is_empty() {
            vec![(0..n).collect()]
        } else {
            scope.iter().map(|&f| presorted[f].clone()).collect()
        };
        let root = {
            let mut grower = Grower::new(columns, &residual, &config, &mut rng);
            grower.leaf_out = Some(&mut leaf_values);
            grower.grow(sorted)
        };
        for r in 0..n {
            fitted[r] += params.learning_rate * leaf_values[r];
            residual[r] = y[r] - fitted[r];
        }
        per_round.push(mse(y, &fitted));
        model.push(params.learning_rate, scope, root);
    }

    let report = FitReport::new(Family::GradientBoosting, params.to_map(), y, &fitted, per_round);
    Ok((model, report))
}
