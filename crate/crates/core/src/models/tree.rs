//! Binary regression trees and the least-squares grower shared by every
//! model family.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        value: f64,
        cover: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        cover: usize,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn leaf(value: f64, cover: usize) -> Self {
        TreeNode::Leaf { value, cover }
    }

    /// Internal node whose cover is the sum of its children's.
    pub fn split(feature: usize, threshold: f64, left: TreeNode, right: TreeNode) -> Self {
        TreeNode::Split {
            feature,
            threshold,
            cover: left.cover() + right.cover(),
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn cover(&self) -> usize {
        match self {
            TreeNode::Leaf { cover, .. } | TreeNode::Split { cover, .. } => *cover,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    /// Rows with `x[feature] <= threshold` go left.
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value, .. } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    node = if row[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Features split on anywhere in the tree, in ascending order.
    pub fn features(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_features(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_features(&self, out: &mut Vec<usize>) {
        if let TreeNode::Split {
            feature, left, right, ..
        } = self
        {
            out.push(*feature);
            left.collect_features(out);
            right.collect_features(out);
        }
    }

    /// Checks cover bookkeeping, finiteness and feature bounds.
    pub fn validate(&self, n_features: usize) -> Result<()> {
        match self {
            TreeNode::Leaf { value, cover } => {
                if !value.is_finite() {
                    return Err(Error::Format("non-finite leaf value".into()));
                }
                if *cover == 0 {
                    return Err(Error::ZeroCover);
                }
            }
            TreeNode::Split {
                feature,
                threshold,
                cover,
                left,
                right,
            } => {
                if *feature >= n_features {
                    return Err(Error::Format(format!("split on feature {feature} of {n_features}")));
                }
                if !threshold.is_finite() {
                    return Err(Error::Format("non-finite threshold".into()));
                }
                if *cover == 0 {
                    return Err(Error::ZeroCover);
                }
                if *cover != left.cover() + right.cover() {
                    return Err(Error::Format(format!(
                        "cover {cover} != {} + {}",
                        left.cover(),
                        right.cover()
                    )));
                }
                left.validate(n_features)?;
                right.validate(n_features)?;
            }
        }
        Ok(())
    }
}

/// Row indices sorted by `(value, row)` for each column.
pub(crate) fn presort(columns: &[Vec<f64>]) -> Vec<Vec<usize>> {
    columns
        .iter()
        .map(|col| {
            let mut idx: Vec<usize> = (0..col.len()).collect();
            idx.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
            idx
        })
        .collect()
}

/// Expands presorted orders to a row sample in which row `r` appears
/// `counts[r]` times.
pub(crate) fn sorted_sample(presorted: &[Vec<usize>], features: &[usize], counts: &[usize]) -> Vec<Vec<usize>> {
    features
        .iter()
        .map(|&f| {
            let mut out = Vec::new();
            for &r in &presorted[f] {
                for _ in 0..counts[r] {
                    out.push(r);
                }
            }
            out
        })
        .collect()
}

/// Number of items kept when subsampling `len` items at `fraction`.
pub(crate) fn subsample_size(fraction: f64, len: usize) -> usize {
    ((fraction * len as f64).round() as usize).clamp(1, len.max(1))
}

/// Uniformly chosen subset of `items`, returned in ascending order.
pub(crate) fn choose_sorted<R: Rng>(items: &[usize], fraction: f64, rng: &mut R) -> Vec<usize> {
    if fraction >= 1.0 || items.len() <= 1 {
        return items.to_vec();
    }
    let k = subsample_size(fraction, items.len());
    let mut picked: Vec<usize> = sample(rng, items.len(), k).into_iter().map(|i| items[i]).collect();
    picked.sort_unstable();
    picked
}

#[derive(Debug, Clone)]
pub(crate) struct GrowConfig {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Features eligible anywhere in this tree, ascending.
    pub scope: Vec<usize>,
    /// Fraction of `scope` drawn once per depth level.
    pub level_fraction: f64,
    /// Fraction of the level set drawn at every node.
    pub node_fraction: f64,
}

/// Best split found for a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    /// Reduction in the sum of squared errors.
    pub gain: f64,
}

/// Midpoint of two consecutive distinct values that still separates them.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m < hi {
        m
    } else {
        lo
    }
}

/// Exhaustive least-squares split search over one feature's sorted rows.
/// Updates `best` only on strictly larger gain, so earlier features and
/// lower thresholds win ties.
pub(crate) fn scan_feature(
    feature: usize,
    column: &[f64],
    rows: &[usize],
    targets: &[f64],
    node_mean: f64,
    min_leaf: usize,
    best: &mut Option<SplitCandidate>,
) {
    let n = rows.len();
    let mut left_sum = 0.0;
    for i in 0..n.saturating_sub(1) {
        left_sum += targets[rows[i]] - node_mean;
        let nl = i + 1;
        let (lo, hi) = (column[rows[i]], column[rows[i + 1]]);
        if lo == hi || nl < min_leaf || n - nl < min_leaf {
            continue;
        }
        let gain = left_sum * left_sum * n as f64 / (nl as f64 * (n - nl) as f64);
        if best.is_none_or(|b| gain > b.gain) {
            *best = Some(SplitCandidate {
                feature,
                threshold: midpoint(lo, hi),
                gain,
            });
        }
    }
}

pub(crate) struct Grower<'a, R> {
    pub columns: &'a [Vec<f64>],
    pub targets: &'a [f64],
    pub config: &'a GrowConfig,
    pub rng: &'a mut R,
    /// Per-row output slot filled with the leaf value each row lands in.
    pub leaf_out: Option<&'a mut [f64]>,
    level_sets: Vec<Vec<usize>>,
    /// Total squared-error reduction achieved by the splits.
    pub total_gain: f64,
}

impl<'a, R: Rng> Grower<'a, R> {
    pub fn new(columns: &'a [Vec<f64>], targets: &'a [f64], config: &'a GrowConfig, rng: &'a mut R) -> Self {
        let level_sets = (0..config.max_depth)
            .map(|_| choose_sorted(&config.scope, config.level_fraction, rng))
            .collect();
        Grower {
            columns,
            targets,
            config,
            rng,
            leaf_out: None,
            level_sets,
            total_gain: 0.0,
        }
    }

    /// `sorted[k]` holds the node's rows ordered by feature `config.scope[k]`.
    pub fn grow(&mut self, sorted: Vec<Vec<usize>>) -> TreeNode {
        self.grow_node(sorted, 0)
    }

    fn grow_node(&mut self, sorted: Vec<Vec<usize>>, depth: usize) -> TreeNode {
        let rows = sorted.first().cloned().unwrap_or_default();
        let n = rows.len();
        let sum: f64 = rows.iter().map(|&r| self.targets[r]).sum();
        let mean = sum / n as f64;

        let split = if depth < self.config.max_depth && n >= 2 * self.config.min_samples_leaf {
            self.best_split(&sorted, depth, mean)
        } else {
            None
        };

        let Some(split) = split else {
            if let Some(out) = self.leaf_out.as_deref_mut() {
                for &r in &rows {
                    out[r] = mean;
                }
            }
            return TreeNode::leaf(mean, n);
        };
        self.total_gain += split.gain;

        let column = &self.columns[split.feature];
        let (mut left, mut right) = (Vec::with_capacity(sorted.len()), Vec::with_capacity(sorted.len()));
        for list in sorted {
            let (l, r): (Vec<usize>, Vec<usize>) = list.into_iter().partition(|&row| column[row] <= split.threshold);
            left.push(l);
            right.push(r);
        }
        let left = self.grow_node(left, depth + 1);
        let right = self.grow_node(right, depth + 1);
        TreeNode::split(split.feature, split.threshold, left, right)
    }

    fn best_split(&mut self, sorted: &[Vec<usize>], depth: usize, mean: f64) -> Option<SplitCandidate> {
        let sse: f64 = sorted[0].iter().map(|&r| (self.targets[r] - mean).powi(2)).sum();
        let scale = sorted[0].len() as f64 * mean.abs().max(1.0).powi(2);
        if sse <= 1e-24 * scale {
            return None;
        }
        let candidates = choose_sorted(&self.level_sets[depth], self.config.node_fraction, self.rng);
        let mut best = None;
        for f in candidates {
            let k = self
                .config
                .scope
                .binary_search(&f)
                .expect("candidate features come from the scope");
            scan_feature(
                f,
                &self.columns[f],
                &sorted[k],
                self.targets,
                mean,
                self.config.min_samples_leaf,
                &mut best,
            );
        }
        best.filter(|b| b.gain > 1e-12 * sse)
    }
}
