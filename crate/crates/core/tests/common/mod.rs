#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use saleslens::models::{Family, TreeEnsemble, TreeNode};
use saleslens::redundancy::DistanceMatrix;
use saleslens::seed::rng;
use saleslens::Frame;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    rng(seed)
}

pub fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn uniforms(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

pub fn frame(cols: Vec<(&str, Vec<f64>)>) -> Frame {
    Frame::from_pairs(cols).unwrap()
}

/// Random tree with covers that add up; features may repeat along a path.
pub fn random_tree(rng: &mut ChaCha8Rng, depth: usize, d: usize) -> TreeNode {
    if depth == 0 || rng.random_bool(0.15) {
        return TreeNode::leaf(rng.sample(StandardNormal), rng.random_range(1..20));
    }
    let feature = rng.random_range(0..d);
    let threshold = rng.sample(StandardNormal);
    TreeNode::split(
        feature,
        threshold,
        random_tree(rng, depth - 1, d),
        random_tree(rng, depth - 1, d),
    )
}

pub fn random_ensemble(rng: &mut ChaCha8Rng, n_trees: usize, depth: usize, d: usize) -> TreeEnsemble {
    let names = (0..d).map(|j| format!("x{j}")).collect();
    let mut model = TreeEnsemble::new(Family::GradientBoosting, names, rng.sample(StandardNormal));
    let all: Vec<usize> = (0..d).collect();
    for _ in 0..n_trees {
        let w = rng.random_range(0.05..1.0);
        model.push(w, all.clone(), random_tree(rng, depth, d));
    }
    model
}

/// Symmetric matrix with zero diagonal and entries drawn from a small grid
/// so that ties are common.
pub fn random_distances(rng: &mut ChaCha8Rng, n: usize, levels: u32) -> DistanceMatrix {
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = if levels == 0 {
                rng.random_range(0.0..1.0)
            } else {
                rng.random_range(0..levels) as f64 / levels as f64
            };
            values[i][j] = v;
            values[j][i] = v;
        }
    }
    DistanceMatrix {
        names: (0..n).map(|i| format!("f{i}")).collect(),
        values,
    }
}

/// O(n³)-per-step re-scan: every step recomputes all inter-cluster minima
/// from leaf distances and merges the lexicographically first minimal pair.
pub fn brute_single_link(dist: &DistanceMatrix) -> Vec<(usize, usize, f64, usize)> {
    let n = dist.values.len();
    let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let mut out = Vec::new();
    for step in 0..n.saturating_sub(1) {
        let mut best: Option<(f64, usize, usize)> = None;
        for x in 0..clusters.len() {
            for y in 0..clusters.len() {
                let (ia, ib) = (clusters[x].0, clusters[y].0);
                if ia >= ib {
                    continue;
                }
                let mut h = f64::INFINITY;
                for &p in &clusters[x].1 {
                    for &q in &clusters[y].1 {
                        h = h.min(dist.values[p][q]);
                    }
                }
                let better = match best {
                    None => true,
                    Some((bh, ba, bb)) => h < bh || (h == bh && (ia, ib) < (ba, bb)),
                };
                if better {
                    best = Some((h, ia, ib));
                }
            }
        }
        let (h, a, b) = best.unwrap();
        let id = n + step;
        let mut members = Vec::new();
        clusters.retain(|(cid, m)| {
            if *cid == a || *cid == b {
                members.extend_from_slice(m);
                false
            } else {
                true
            }
        });
        clusters.push((id, members));
        out.push((a, b, h, id));
    }
    out
}

pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
