//! Cyclic additive boosting.
//!
//! Each round visits the features in column order and fits one shallow tree
//! restricted to that single feature on the current residuals. The model is a
//! sum of per-feature shape functions, optionally followed by a small number
//! of pair-scoped interaction terms.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::tree::{presort, GrowConfig, Grower};
use super::{as_count, check_fraction, mse, unknown_param, Family, FitReport, TreeEnsemble};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::seed::rng;

pub const MAX_TERM_DEPTH: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GamParams {
    pub rounds: usize,
    pub learning_rate: f64,
    /// Depth of every per-feature tree, at most 2.
    pub max_depth: usize,
    /// Number of feature pairs given their own interaction terms.
    pub interactions: usize,
    pub min_samples_leaf: usize,
}

impl Default for GamParams {
    fn default() -> Self {
        GamParams {
            rounds: 200,
            learning_rate: 0.1,
            max_depth: 2,
            interactions: 1,
            min_samples_leaf: 1,
        }
    }
}

impl GamParams {
    pub fn to_map(&self) -> IndexMap<String, f64> {
        IndexMap::from([
            ("rounds".to_string(), self.rounds as f64),
            ("learning_rate".to_string(), self.learning_rate),
            ("max_depth".to_string(), self.max_depth as f64),
            ("interactions".to_string(), self.interactions as f64),
            ("min_samples_leaf".to_string(), self.min_samples_leaf as f64),
        ])
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        match name {
            "rounds" | "n_estimators" => self.rounds = as_count(name, value)?,
            "learning_rate" => self.learning_rate = value,
            "max_depth" => self.max_depth = as_count(name, value)?,
            "interactions" => self.interactions = as_count(name, value)?,
            "min_samples_leaf" => self.min_samples_leaf = as_count(name, value)?,
            _ => return Err(unknown_param(name, Family::AdditiveBoosting)),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_depth > MAX_TERM_DEPTH {
            return Err(Error::InvalidParameter(format!(
                "additive boosting trees have depth at most {MAX_TERM_DEPTH}"
            )));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidParameter("min_samples_leaf must be at least 1".into()));
        }
        check_fraction("learning_rate", self.learning_rate)
    }
}

struct Booster<'a> {
    columns: &'a [Vec<f64>],
    presorted: Vec<Vec<usize>>,
    y: &'a [f64],
    fitted: Vec<f64>,
    residual: Vec<f64>,
    leaf_values: Vec<f64>,
    min_samples_leaf: usize,
}

impl<'a> Booster<'a> {
    fn config(&self, scope: Vec<usize>, max_depth: usize) -> GrowConfig {
        GrowConfig {
            max_depth,
            min_samples_leaf: self.min_samples_leaf,
            scope,
            level_fraction: 1.0,
            node_fraction: 1.0,
        }
    }

    /// Fits one scoped tree on the residuals without applying it; returns the
    /// tree and its squared-error reduction.
    fn probe(&mut self, scope: &[usize], max_depth: usize) -> (super::TreeNode, f64) {
        let config = self.config(scope.to_vec(), max_depth);
        let sorted = scope.iter().map(|&f| self.presorted[f].clone()).collect();
        // Full-fraction configs never draw from the generator.
        let mut unused = rng(0);
        let mut grower = Grower::new(self.columns, &self.residual, &config, &mut unused);
        grower.leaf_out = Some(&mut self.leaf_values);
        let tree = grower.grow(sorted);
        let gain = grower.total_gain;
        (tree, gain)
    }

    fn step(&mut self, model: &mut TreeEnsemble, scope: Vec<usize>, max_depth: usize, lr: f64) {
        let (tree, _) = self.probe(&scope, max_depth);
        for r in 0..self.y.len() {
            self.fitted[r] += lr * self.leaf_values[r];
            self.residual[r] = self.y[r] - self.fitted[r];
        }
        model.push(lr, scope, tree);
    }
}

/// Cyclic round-robin boosting of `target` on every other column.
///
/// After the main-effect rounds every feature pair is scored by the
/// squared-error reduction of the best depth-2 tree on the pair, fitted to the
/// residuals. The top `interactions` pairs (ties by pair order) then receive
/// `rounds` further cyclic rounds of pair-scoped depth-2 trees.
pub fn fit_gam_boost(frame: &Frame, target: &str, params: &GamParams) -> Result<(TreeEnsemble, FitReport)> {
    params.validate()?;
    let (x, y) = frame.features_and_target(target)?;
    let columns = x.columns();
    let (n, d) = (y.len(), columns.len());
    let base = y.iter().sum::<f64>() / n as f64;
    let mut model = TreeEnsemble::new(Family::AdditiveBoosting, x.names().to_vec(), base);
    let mut booster = Booster {
        columns,
        presorted: presort(columns),
        y: &y,
        fitted: vec![base; n],
        residual: y.iter().map(|t| t - base).collect(),
        leaf_values: vec![0.0; n],
        min_samples_leaf: params.min_samples_leaf,
    };
    let lr = params.learning_rate;
    let mut per_round = Vec::new();

    for _ in 0..params.rounds {
        for j in 0..d {
            booster.step(&mut model, vec![j], params.max_depth, lr);
        }
        per_round.push(mse(&y, &booster.fitted));
    }

    let pairs = select_pairs(&mut booster, d, params.interactions);
    if !pairs.is_empty() {
        for _ in 0..params.rounds {
            for &(a, b) in &pairs {
                booster.step(&mut model, vec![a, b], MAX_TERM_DEPTH, lr);
            }
            per_round.push(mse(&y, &booster.fitted));
        }
    }

    let report = FitReport::new(
        Family::AdditiveBoosting,
        params.to_map(),
        &y,
        &booster.fitted,
        per_round,
    );
    Ok((model, report))
}

fn select_pairs(booster: &mut Booster<'_>, d: usize, k: usize) -> Vec<(usize, usize)> {
    if k == 0 || d < 2 {
        return Vec::new();
    }
    let mut scored = Vec::new();
    for a in 0..d {
        for b in (a + 1)..d {
            let (_, gain) = booster.probe(&[a, b], MAX_TERM_DEPTH);
            scored.push(((a, b), gain));
        }
    }
    // Stable sort keeps pair order among equal gains.
    scored.sort_by(|x, y| y.1.total_cmp(&x.1));
    scored.into_iter().take(k).map(|(p, _)| p).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng;
    use rand::Rng;

    fn frame(n: usize, seed: u64, f: impl Fn(f64, f64) -> f64) -> Frame {
        let mut r = rng(seed);
        let a: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let y = a.iter().zip(&b).map(|(&u, &v)| f(u, v)).collect();
        Frame::from_pairs(vec![("a", a), ("b", b), ("y", y)]).unwrap()
    }

    #[test]
    fn zero_rounds_predicts_the_mean() {
        let f = frame(50, 0, |a, b| a + b + 3.0);
        let p = GamParams {
            rounds: 0,
            ..Default::default()
        };
        let (m, _) = fit_gam_boost(&f, "y", &p).unwrap();
        assert!(m.trees.is_empty());
        assert_eq!(m.predict(&[0.3, 0.4]), m.base_score);
    }

    #[test]
    fn scopes_are_singletons_then_pairs() {
        let f = frame(300, 1, |a, b| a * b + a);
        let p = GamParams {
            rounds: 20,
            interactions: 1,
            ..Default::default()
        };
        let (m, _) = fit_gam_boost(&f, "y", &p).unwrap();
        let pair_trees: Vec<_> = m.trees.iter().filter(|t| t.scope.len() == 2).collect();
        assert_eq!(pair_trees.len(), 20);
        assert!(pair_trees.iter().all(|t| t.scope == [0, 1]));
        for t in &m.trees {
            assert!(t.root.depth() <= MAX_TERM_DEPTH);
            assert!(t.root.features().iter().all(|f| t.scope.contains(f)));
        }
        m.validate().unwrap();
    }

    #[test]
    fn interactions_beyond_pairs_are_capped() {
        let f = frame(100, 2, |a, b| a + b);
        let p = GamParams {
            rounds: 3,
            interactions: 5,
            ..Default::default()
        };
        let (m, _) = fit_gam_boost(&f, "y", &p).unwrap();
        let distinct: std::collections::BTreeSet<_> = m
            .trees
            .iter()
            .filter(|t| t.scope.len() == 2)
            .map(|t| t.scope.clone())
            .collect();
        assert_eq!(distinct.len(), 1);
    }

    #[test]
    fn single_feature_identity_gives_increasing_shape() {
        let x: Vec<f64> = (0..400).map(|i| i as f64 / 100.0 - 2.0).collect();
        let f = Frame::from_pairs(vec![("x", x.clone()), ("y", x)]).unwrap();
        let p = GamParams {
            rounds: 300,
            interactions: 0,
            ..Default::default()
        };
        let (m, _) = fit_gam_boost(&f, "y", &p).unwrap();
        let grid: Vec<f64> = (0..=80).map(|i| -2.0 + i as f64 * 0.05).collect();
        let shape: Vec<f64> = grid.iter().map(|&v| m.shape_function(0, v)).collect();
        assert!(shape.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert!(shape[80] - shape[0] > 3.5);
    }

    #[test]
    fn rejects_deep_terms() {
        let f = frame(20, 3, |a, _| a);
        let p = GamParams {
            max_depth: 3,
            ..Default::default()
        };
        assert!(fit_gam_boost(&f, "y", &p).is_err());
    }
}
