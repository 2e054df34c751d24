//! Feature redundancy distances and single-link agglomerative clustering.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::models::tree::{presort, GrowConfig, Grower};
use crate::seed::rng;
use crate::stats::{ensure_not_constant, pearson, Matrix};

/// Depth of the single-feature trees used by [`RedundancyMode::Supervised`].
pub const SUPERVISED_TREE_DEPTH: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RedundancyMode {
    /// `1 - |pearson|`
    Correlation,
    /// `1 - max(0, R²(i|j), R²(j|i))`, where each R² is the better of a
    /// linear fit and a depth-3 tree predicting one feature from the other.
    Supervised,
}

impl std::str::FromStr for RedundancyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "correlation" => Ok(RedundancyMode::Correlation),
            "supervised" => Ok(RedundancyMode::Supervised),
            other => Err(Error::InvalidParameter(format!("unknown redundancy mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    pub names: Vec<String>,
    pub values: Matrix,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.names.len();
        if self.values.len() != n || self.values.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidDistance(format!("expected a {n}x{n} matrix")));
        }
        for i in 0..n {
            if self.values[i][i] != 0.0 {
                return Err(Error::InvalidDistance(format!("non-zero diagonal at {i}")));
            }
            for j in 0..n {
                let v = self.values[i][j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidDistance(format!("entry ({i}, {j}) = {v}")));
                }
                if v != self.values[j][i] {
                    return Err(Error::InvalidDistance(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(())
    }
}

/// Training R² of a depth-3 regression tree predicting `target` from
/// `feature` alone.
pub fn tree_r2(feature: &[f64], target: &[f64]) -> f64 {
    let columns = [feature.to_vec()];
    let config = GrowConfig {
        max_depth: SUPERVISED_TREE_DEPTH,
        min_samples_leaf: 1,
        scope: vec![0],
        level_fraction: 1.0,
        node_fraction: 1.0,
    };
    let mut unused = rng(0);
    let mut fitted = vec![0.0; target.len()];
    {
        let mut grower = Grower::new(&columns, target, &config, &mut unused);
        grower.leaf_out = Some(&mut fitted);
        grower.grow(presort(&columns));
    }
    let mean = target.iter().sum::<f64>() / target.len() as f64;
    let sst: f64 = target.iter().map(|t| (t - mean).powi(2)).sum();
    let sse: f64 = target.iter().zip(&fitted).map(|(t, f)| (t - f).powi(2)).sum();
    1.0 - sse / sst
}

/// Pairwise redundancy distances between the feature columns of `frame`
/// (every column except `target`, when given).
pub fn redundancy_distance(frame: &Frame, target: Option<&str>, mode: RedundancyMode) -> Result<DistanceMatrix> {
    let t = target.map(|name| frame.index_of(name)).transpose()?;
    let features: Vec<usize> = (0..frame.n_cols()).filter(|&i| Some(i) != t).collect();
    if features.len() < 2 {
        return Err(Error::TooFewFeatures {
            needed: 2,
            got: features.len(),
        });
    }
    for &f in &features {
        ensure_not_constant(&frame.names()[f], frame.column(f))?;
    }
    let d = features.len();
    let mut values = vec![vec![0.0; d]; d];
    for a in 0..d {
        for b in (a + 1)..d {
            let (xa, xb) = (frame.column(features[a]), frame.column(features[b]));
            let r = pearson(xa, xb);
            let dist = match mode {
                RedundancyMode::Correlation => 1.0 - r.abs(),
                RedundancyMode::Supervised => {
                    let linear = r * r;
                    let best = linear.max(tree_r2(xb, xa)).max(tree_r2(xa, xb)).max(0.0);
                    1.0 - best.min(1.0)
                }
            };
            let dist = dist.clamp(0.0, 1.0);
            values[a][b] = dist;
            values[b][a] = dist;
        }
    }
    Ok(DistanceMatrix {
        names: features.iter().map(|&f| frame.names()[f].clone()).collect(),
        values,
    })
}

/// One agglomeration step. Leaves have ids `0..n`; the cluster created by
/// merge `k` has id `n + k`. `a < b` always.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub id: usize,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub leaf_names: Vec<String>,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn n_leaves(&self) -> usize {
        self.leaf_names.len()
    }

    /// Leaves in drawing order (depth-first, `a` before `b`).
    pub fn leaf_order(&self) -> Vec<usize> {
        let n = self.n_leaves();
        let Some(root) = self.merges.last() else {
            return (0..n).collect();
        };
        let mut out = Vec::with_capacity(n);
        let mut stack = vec![root.id];
        while let Some(id) = stack.pop() {
            if id < n {
                out.push(id);
            } else {
                let m = &self.merges[id - n];
                stack.push(m.b);
                stack.push(m.a);
            }
        }
        out
    }

    /// Leaf ids under cluster `id`, ascending.
    pub fn members(&self, id: usize) -> Vec<usize> {
        let n = self.n_leaves();
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(c) = stack.pop() {
            if c < n {
                out.push(c);
            } else {
                let m = &self.merges[c - n];
                stack.push(m.a);
                stack.push(m.b);
            }
        }
        out.sort_unstable();
        out
    }
}

/// Single-link agglomerative clustering.
///
/// Each step merges the pair of active clusters at minimum distance, ties
/// broken by the smallest `(a, b)` id pair. Inter-cluster distances follow the
/// single-link update `d(x, a ∪ b) = min(d(x, a), d(x, b))`, and each cluster
/// caches its nearest higher-id partner so a step only rescans the rows whose
/// partner was consumed.
pub fn single_link_cluster(dist: &DistanceMatrix) -> Result<Dendrogram> {
    dist.validate()?;
    let n = dist.len();
    let total = if n == 0 { 0 } else { 2 * n - 1 };
    // Distances indexed by cluster id; rows are only filled for active ids.
    let mut d: Vec<Vec<f64>> = vec![vec![f64::INFINITY; total]; total];
    for i in 0..n {
        for j in 0..n {
            d[i][j] = dist.values[i][j];
        }
    }
    let mut active: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; total];
    let mut nearest: Vec<Option<(f64, usize)>> = vec![None; total];

    let scan = |d: &Vec<Vec<f64>>, active: &[usize], c: usize| -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for &o in active {
            if o > c && best.is_none_or(|(bd, _)| d[c][o] < bd) {
                best = Some((d[c][o], o));
            }
        }
        best
    };
    for &c in &active {
        nearest[c] = scan(&d, &active, c);
    }

    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for step in 0..n.saturating_sub(1) {
        let mut pick: Option<(f64, usize, usize)> = None;
        for &c in &active {
            if let Some((h, o)) = nearest[c] {
                if pick.is_none_or(|(ph, _, _)| h < ph) {
                    pick = Some((h, c, o));
                }
            }
        }
        let (height, a, b) = pick.expect("at least two active clusters");
        let id = n + step;
        active.retain(|&c| c != a && c != b);
        for &c in &active {
            let v = d[c][a].min(d[c][b]);
            d[c][id] = v;
            d[id][c] = v;
        }
        size[id] = size[a] + size[b];
        merges.push(Merge {
            a,
            b,
            height,
            id,
            size: size[id],
        });
        active.push(id);
        for &c in &active {
            match nearest[c] {
                Some((h, o)) if o != a && o != b => {
                    if c != id && d[c][id] < h {
                        nearest[c] = Some((d[c][id], id));
                    }
                }
                _ => nearest[c] = scan(&d, &active, c),
            }
        }
    }
    Ok(Dendrogram {
        leaf_names: dist.names.clone(),
        merges,
    })
}
