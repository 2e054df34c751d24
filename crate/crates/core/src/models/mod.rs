//! Tree-ensemble regressors: stagewise gradient boosting, bagged trees and a
//! cyclic additive booster, plus the scaled absolute error metric and
//! hyperparameter grid search.

mod additive;
mod bagging;
mod boosting;
mod grid;
pub mod tree;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Frame;

pub use additive::{fit_gam_boost, GamParams};
pub use bagging::{fit_bagged, BaggedParams};
pub use boosting::{fit_gbt, fit_gbt_columns, GbtParams};
pub use grid::{expand_grid, grid_search, train_validation_split, Grid, GridSearch, SplitSpec};
pub use tree::{SplitCandidate, TreeNode};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    GradientBoosting,
    Bagged,
    AdditiveBoosting,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::GradientBoosting => "gradient_boosting",
            Family::Bagged => "bagged",
            Family::AdditiveBoosting => "additive_boosting",
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gradient_boosting" | "gbt" => Ok(Family::GradientBoosting),
            "bagged" | "random_forest" => Ok(Family::Bagged),
            "additive_boosting" | "gam" => Ok(Family::AdditiveBoosting),
            other => Err(Error::InvalidParameter(format!("unknown model family {other:?}"))),
        }
    }
}

/// One member of an ensemble: a tree, its multiplier and the features it
/// was allowed to split on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScopedTree {
    pub weight: f64,
    pub scope: Vec<usize>,
    pub root: TreeNode,
}

/// `prediction(x) = base_score + Σ weight_t · tree_t(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub format_version: u32,
    pub family: Family,
    pub feature_names: Vec<String>,
    pub base_score: f64,
    pub trees: Vec<ScopedTree>,
}

impl TreeEnsemble {
    pub fn new(family: Family, feature_names: Vec<String>, base_score: f64) -> Self {
        TreeEnsemble {
            format_version: FORMAT_VERSION,
            family,
            feature_names,
            base_score,
            trees: Vec::new(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn push(&mut self, weight: f64, scope: Vec<usize>, root: TreeNode) {
        self.trees.push(ScopedTree { weight, scope, root });
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut acc = self.base_score;
        for t in &self.trees {
            acc += t.weight * t.root.predict(row);
        }
        acc
    }

    /// Predicts every row of `frame`, matching columns by feature name.
    pub fn predict_frame(&self, frame: &Frame) -> Result<Vec<f64>> {
        let x = frame.select_names(&self.feature_names)?;
        Ok((0..x.n_rows()).map(|r| self.predict(&x.row(r))).collect())
    }

    /// Trees concatenated, base scores summed. Attributions are linear under
    /// this operation.
    pub fn concat(&self, other: &TreeEnsemble) -> Result<TreeEnsemble> {
        if self.feature_names != other.feature_names {
            return Err(Error::InvalidParameter("ensembles use different features".into()));
        }
        let mut out = self.clone();
        out.base_score += other.base_score;
        out.trees.extend(other.trees.iter().cloned());
        Ok(out)
    }

    /// Per-feature component of an additive model: the sum of the weighted
    /// trees whose scope is exactly `{feature}`, evaluated at `value`.
    pub fn shape_function(&self, feature: usize, value: f64) -> f64 {
        let mut row = vec![0.0; self.n_features()];
        row[feature] = value;
        self.trees
            .iter()
            .filter(|t| t.scope == [feature])
            .map(|t| t.weight * t.root.predict(&row))
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "format version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        if !self.base_score.is_finite() {
            return Err(Error::Format("non-finite base score".into()));
        }
        let d = self.n_features();
        for t in &self.trees {
            t.root.validate(d)?;
            if !t.weight.is_finite() {
                return Err(Error::Format("non-finite tree weight".into()));
            }
            if t.root.features().iter().any(|f| !t.scope.contains(f)) {
                return Err(Error::Format("tree splits outside its scope".into()));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ensembles serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: TreeEnsemble = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }
}

/// Mean absolute error divided by the mean of the true target.
pub fn msae(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.is_empty() || y_true.len() != y_pred.len() {
        return Err(Error::InvalidParameter(format!(
            "msae needs equal non-empty lengths, got {} and {}",
            y_true.len(),
            y_pred.len()
        )));
    }
    let n = y_true.len() as f64;
    let mean = y_true.iter().sum::<f64>() / n;
    if !(mean > 0.0) {
        return Err(Error::NonPositiveMean);
    }
    let mae = y_true.iter().zip(y_pred).map(|(t, p)| (t - p).abs()).sum::<f64>() / n;
    Ok(mae / mean)
}

pub(crate) fn mse(y_true: &[f64], y_pred: &[f64]) -> f64 {
    y_true.iter().zip(y_pred).map(|(t, p)| (t - p) * (t - p)).sum::<f64>() / y_true.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub family: Family,
    pub params: IndexMap<String, f64>,
    /// `None` when the target mean is not positive.
    pub train_msae: Option<f64>,
    pub validation_msae: Option<f64>,
    pub per_round_train_mse: Vec<f64>,
}

impl FitReport {
    pub(crate) fn new(
        family: Family,
        params: IndexMap<String, f64>,
        y: &[f64],
        fitted: &[f64],
        per_round_train_mse: Vec<f64>,
    ) -> Self {
        FitReport {
            family,
            params,
            train_msae: msae(y, fitted).ok(),
            validation_msae: None,
            per_round_train_mse,
        }
    }
}

/// Hyperparameters for one of the three families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelParams {
    GradientBoosting(GbtParams),
    Bagged(BaggedParams),
    AdditiveBoosting(GamParams),
}

impl ModelParams {
    pub fn default_for(family: Family) -> Self {
        match family {
            Family::GradientBoosting => ModelParams::GradientBoosting(GbtParams::default()),
            Family::Bagged => ModelParams::Bagged(BaggedParams::default()),
            Family::AdditiveBoosting => ModelParams::AdditiveBoosting(GamParams::default()),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            ModelParams::GradientBoosting(_) => Family::GradientBoosting,
            ModelParams::Bagged(_) => Family::Bagged,
            ModelParams::AdditiveBoosting(_) => Family::AdditiveBoosting,
        }
    }

    pub fn to_map(&self) -> IndexMap<String, f64> {
        match self {
            ModelParams::GradientBoosting(p) => p.to_map(),
            ModelParams::Bagged(p) => p.to_map(),
            ModelParams::AdditiveBoosting(p) => p.to_map(),
        }
    }

    /// Overrides one hyperparameter by name.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        match self {
            ModelParams::GradientBoosting(p) => p.set(name, value),
            ModelParams::Bagged(p) => p.set(name, value),
            ModelParams::AdditiveBoosting(p) => p.set(name, value),
        }
    }

    pub fn fit(&self, frame: &Frame, target: &str, seed: u64) -> Result<(TreeEnsemble, FitReport)> {
        match self {
            ModelParams::GradientBoosting(p) => fit_gbt(frame, target, p, seed),
            ModelParams::Bagged(p) => fit_bagged(frame, target, p, seed),
            ModelParams::AdditiveBoosting(p) => fit_gam_boost(frame, target, p),
        }
    }
}

pub(crate) fn as_count(name: &str, value: f64) -> Result<usize> {
    if value >= 0.0 && value.fract() == 0.0 && value.is_finite() {
        Ok(value as usize)
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be a non-negative integer, got {value}"
        )))
    }
}

pub(crate) fn unknown_param(name: &str, family: Family) -> Error {
    Error::InvalidParameter(format!("{family} has no hyperparameter {name:?}"))
}

pub(crate) fn check_fraction(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be in (0, 1], got {value}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn msae_examples() {
        assert_eq!(msae(&[2.0, 4.0], &[2.0, 4.0]).unwrap(), 0.0);
        assert_eq!(msae(&[2.0, 4.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert!((msae(&[2.0, 4.0], &[3.0, 3.0]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn msae_rejects_non_positive_mean() {
        let err = msae(&[-1.0, 1.0], &[0.0, 0.0]).unwrap_err();
        assert_eq!(err.to_string(), "MSAE undefined for non-positive target mean");
        assert!(msae(&[1.0], &[1.0, 2.0]).is_err());
    }

    fn stump() -> TreeNode {
        TreeNode::split(0, 0.0, TreeNode::leaf(-1.0, 3), TreeNode::leaf(2.0, 5))
    }

    #[test]
    fn prediction_is_base_plus_weighted_trees() {
        let mut m = TreeEnsemble::new(Family::GradientBoosting, vec!["x".into()], 10.0);
        m.push(0.5, vec![0], stump());
        m.push(0.5, vec![0], stump());
        let mut single = TreeEnsemble::new(Family::GradientBoosting, vec!["x".into()], 10.0);
        single.push(1.0, vec![0], stump());
        for x in [-1.0, 0.0, 0.1, 4.0] {
            assert_eq!(m.predict(&[x]), single.predict(&[x]));
        }
        assert_eq!(m.predict(&[0.0]), 9.0);
        assert_eq!(m.predict(&[1.0]), 12.0);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let mut m = TreeEnsemble::new(Family::AdditiveBoosting, vec!["a".into(), "b".into()], 1.5);
        m.push(0.1, vec![0], stump());
        let back = TreeEnsemble::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);

        let mut bad = m.clone();
        bad.trees[0].scope = vec![1];
        assert!(TreeEnsemble::from_json(&bad.to_json()).is_err());
        let mut bad = m;
        bad.format_version = 99;
        assert!(TreeEnsemble::from_json(&bad.to_json()).is_err());
    }

    #[test]
    fn params_override_by_name() {
        let mut p = ModelParams::default_for(Family::GradientBoosting);
        p.set("n_estimators", 7.0).unwrap();
        assert_eq!(p.to_map()["n_estimators"], 7.0);
        assert!(p.set("interactions", 1.0).is_err());
        assert!(p.set("n_estimators", 1.5).is_err());
        assert_eq!("gam".parse::<Family>().unwrap(), Family::AdditiveBoosting);
    }
}
