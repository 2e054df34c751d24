use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::{presort, sorted_sample, subsample_size, GrowConfig, Grower};
use super::{as_count, check_fraction, mse, unknown_param, Family, FitReport, TreeEnsemble};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::seed::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaggedParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    /// Rows drawn per tree, as a fraction of the training set.
    pub row_subsample: f64,
    /// Features considered at each node, as a fraction of all features.
    pub feature_subsample: f64,
    pub min_samples_leaf: usize,
    /// Draw rows with replacement. Without it each tree sees a plain
    /// subsample (the whole set at `row_subsample = 1`).
    pub bootstrap: bool,
}

impl Default for BaggedParams {
    fn default() -> Self {
        BaggedParams {
            n_estimators: 100,
            max_depth: 7,
            row_subsample: 1.0,
            feature_subsample: 1.0,
            min_samples_leaf: 1,
            bootstrap: true,
        }
    }
}

impl BaggedParams {
    pub fn to_map(&self) -> IndexMap<String, f64> {
        IndexMap::from([
            ("n_estimators".to_string(), self.n_estimators as f64),
            ("max_depth".to_string(), self.max_depth as f64),
            ("row_subsample".to_string(), self.row_subsample),
            ("feature_subsample".to_string(), self.feature_subsample),
            ("min_samples_leaf".to_string(), self.min_samples_leaf as f64),
            ("bootstrap".to_string(), if self.bootstrap { 1.0 } else { 0.0 }),
        ])
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        match name {
            "n_estimators" => self.n_estimators = as_count(name, value)?,
            "max_depth" => self.max_depth = as_count(name, value)?,
            "row_subsample" => self.row_subsample = value,
            "feature_subsample" => self.feature_subsample = value,
            "min_samples_leaf" => self.min_samples_leaf = as_count(name, value)?,
            "bootstrap" => self.bootstrap = value != 0.0,
            _ => return Err(unknown_param(name, Family::Bagged)),
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
        check_fraction("row_subsample", self.row_subsample)?;
        check_fraction("feature_subsample", self.feature_subsample)
    }
}

/// Bagged regression trees; the prediction is the unweighted mean of the
/// trees.
pub fn fit_bagged(frame: &Frame, target: &str, params: &BaggedParams, seed: u64) -> Result<(TreeEnsemble, FitReport)> {
    params.validate()?;
    let (x, y) = frame.features_and_target(target)?;
    let columns = x.columns();
    let (n, d) = (y.len(), columns.len());
    let mut rng = rng(seed);
    let presorted = presort(columns);
    let weight = 1.0 / params.n_estimators as f64;
    let mut model = TreeEnsemble::new(Family::Bagged, x.names().to_vec(), 0.0);
    let config = GrowConfig {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        scope: (0..d).collect(),
        level_fraction: 1.0,
        node_fraction: params.feature_subsample,
    };

    let mut counts = vec![0usize; n];
    let mut order: Vec<usize> = (0..n).collect();
    let mut tree_sum = vec![0.0; n];
    let mut per_round = Vec::with_capacity(params.n_estimators);
    let rows: Vec<Vec<f64>> = (0..n).map(|r| x.row(r)).collect();

    for t in 0..params.n_estimators {
        counts.iter_mut().for_each(|c| *c = 0);
        let m = subsample_size(params.row_subsample, n);
        if params.bootstrap {
            for _ in 0..m {
                counts[rng.random_range(0..n)] += 1;
            }
        } else if m == n {
            counts.iter_mut().for_each(|c| *c = 1);
        } else {
            order.shuffle(&mut rng);
            for &r in &order[..m] {
                counts[r] = 1;
            }
        }
        let root = Grower::new(columns, &y, &config, &mut rng).grow(sorted_sample(&presorted, &config.scope, &counts));
        for (acc, row) in tree_sum.iter_mut().zip(&rows) {
            *acc += root.predict(row);
        }
        let k = (t + 1) as f64;
        let running: Vec<f64> = tree_sum.iter().map(|s| s / k).collect();
        per_round.push(mse(&y, &running));
        model.push(weight, config.scope.clone(), root);
    }

    let fitted: Vec<f64> = rows.iter().map(|r| model.predict(r)).collect();
    let report = FitReport::new(Family::Bagged, params.to_map(), &y, &fitted, per_round);
    Ok((model, report))
}
