//! Shapley-value attribution for tree ensembles.
//!
//! The coalition value of a feature subset `S` is the path-dependent
//! conditional expectation of each tree: splits on features in `S` follow the
//! explained row, splits on other features average both children weighted by
//! their training cover. [`shap_exact`] enumerates every subset and serves as
//! the oracle for the polynomial-time recursion in [`tree_shap_fast`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::models::{TreeEnsemble, TreeNode};

/// Largest feature count accepted by [`shap_exact`].
pub const EXACT_FEATURE_CAP: usize = 20;

pub const DEFAULT_DISPERSION_BINS: usize = 16;

/// Conditional expectation of `tree` at `x` given the features marked in
/// `known`.
pub fn v_tree(tree: &TreeNode, known: &[bool], x: &[f64]) -> Result<f64> {
    match tree {
        TreeNode::Leaf { value, .. } => Ok(*value),
        TreeNode::Split {
            feature,
            threshold,
            cover,
            left,
            right,
        } => {
            if known[*feature] {
                let next = if x[*feature] <= *threshold { left } else { right };
                return v_tree(next, known, x);
            }
            if *cover == 0 {
                return Err(Error::ZeroCover);
            }
            let l = left.cover() as f64 * v_tree(left, known, x)?;
            let r = right.cover() as f64 * v_tree(right, known, x)?;
            Ok((l + r) / *cover as f64)
        }
    }
}

/// Coalition value of the whole ensemble: base score plus weighted tree
/// expectations.
pub fn v_ensemble(model: &TreeEnsemble, known: &[bool], x: &[f64]) -> Result<f64> {
    let mut acc = model.base_score;
    for t in &model.trees {
        acc += t.weight * v_tree(&t.root, known, x)?;
    }
    Ok(acc)
}

/// Expected model output with nothing known.
pub fn base_value(model: &TreeEnsemble) -> Result<f64> {
    v_ensemble(model, &vec![false; model.n_features()], &vec![0.0; model.n_features()])
}

/// Shapley values by enumerating all `2^d` coalitions.
pub fn shap_exact(model: &TreeEnsemble, x: &[f64]) -> Result<Vec<f64>> {
    let d = model.n_features();
    if d > EXACT_FEATURE_CAP {
        return Err(Error::TooManyFeatures {
            got: d,
            cap: EXACT_FEATURE_CAP,
        });
    }
    if d == 0 {
        return Ok(Vec::new());
    }
    let mut value = vec![0.0; 1 << d];
    let mut known = vec![false; d];
    for (mask, slot) in value.iter_mut().enumerate() {
        for (j, k) in known.iter_mut().enumerate() {
            *k = mask & (1 << j) != 0;
        }
        *slot = v_ensemble(model, &known, x)?;
    }

    // |S|!(d-|S|-1)!/d! = 1 / (d * C(d-1, |S|))
    let mut binom = vec![1.0f64; d];
    for s in 1..d {
        binom[s] = binom[s - 1] * (d - s) as f64 / s as f64;
    }
    let weight: Vec<f64> = binom.iter().map(|c| 1.0 / (d as f64 * c)).collect();

    let mut phi = vec![0.0; d];
    for (j, p) in phi.iter_mut().enumerate() {
        let bit = 1usize << j;
        for mask in 0..(1usize << d) {
            if mask & bit == 0 {
                let s = mask.count_ones() as usize;
                *p += weight[s] * (value[mask | bit] - value[mask]);
            }
        }
    }
    Ok(phi)
}

#[derive(Debug, Clone, Copy)]
struct PathElement {
    feature: Option<usize>,
    zero_fraction: f64,
    one_fraction: f64,
    weight: f64,
}

fn extend_path(path: &mut Vec<PathElement>, zero_fraction: f64, one_fraction: f64, feature: Option<usize>) {
    let depth = path.len();
    path.push(PathElement {
        feature,
        zero_fraction,
        one_fraction,
        weight: if depth == 0 { 1.0 } else { 0.0 },
    });
    let denom = (depth + 1) as f64;
    for i in (0..depth).rev() {
        path[i + 1].weight += one_fraction * path[i].weight * (i + 1) as f64 / denom;
        path[i].weight = zero_fraction * path[i].weight * (depth - i) as f64 / denom;
    }
}

fn unwind_path(path: &mut Vec<PathElement>, index: usize) {
    let depth = path.len() - 1;
    let PathElement {
        one_fraction: one,
        zero_fraction: zero,
        ..
    } = path[index];
    let denom = (depth + 1) as f64;
    let mut next = path[depth].weight;
    for i in (0..depth).rev() {
        if one != 0.0 {
            let tmp = path[i].weight;
            path[i].weight = next * denom / ((i + 1) as f64 * one);
            next = tmp - path[i].weight * zero * (depth - i) as f64 / denom;
        } else {
            path[i].weight = path[i].weight * denom / (zero * (depth - i) as f64);
        }
    }
    for i in index..depth {
        path[i].feature = path[i + 1].feature;
        path[i].zero_fraction = path[i + 1].zero_fraction;
        path[i].one_fraction = path[i + 1].one_fraction;
    }
    path.pop();
}

/// Total permutation weight of the path with element `index` removed.
fn unwound_sum(path: &[PathElement], index: usize) -> f64 {
    let depth = path.len() - 1;
    let PathElement {
        one_fraction: one,
        zero_fraction: zero,
        ..
    } = path[index];
    let denom = (depth + 1) as f64;
    let mut next = path[depth].weight;
    let mut total = 0.0;
    for i in (0..depth).rev() {
        if one != 0.0 {
            let tmp = next * denom / ((i + 1) as f64 * one);
            total += tmp;
            next = path[i].weight - tmp * zero * (depth - i) as f64 / denom;
        } else {
            total += path[i].weight / zero * denom / (depth - i) as f64;
        }
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    node: &TreeNode,
    x: &[f64],
    scale: f64,
    phi: &mut [f64],
    mut path: Vec<PathElement>,
    zero_fraction: f64,
    one_fraction: f64,
    feature: Option<usize>,
) {
    extend_path(&mut path, zero_fraction, one_fraction, feature);
    match node {
        TreeNode::Leaf { value, .. } => {
            for i in 1..path.len() {
                let w = unwound_sum(&path, i);
                let el = path[i];
                let f = el.feature.expect("only the root element has no feature");
                phi[f] += w * (el.one_fraction - el.zero_fraction) * value * scale;
            }
        }
        TreeNode::Split {
            feature: split,
            threshold,
            cover,
            left,
            right,
        } => {
            let (hot, cold) = if x[*split] <= *threshold {
                (left, right)
            } else {
                (right, left)
            };
            let (mut incoming_zero, mut incoming_one) = (1.0, 1.0);
            if let Some(k) = (1..path.len()).find(|&k| path[k].feature == Some(*split)) {
                incoming_zero = path[k].zero_fraction;
                incoming_one = path[k].one_fraction;
                unwind_path(&mut path, k);
            }
            let cover = *cover as f64;
            recurse(
                hot,
                x,
                scale,
                phi,
                path.clone(),
                incoming_zero * hot.cover() as f64 / cover,
                incoming_one,
                Some(*split),
            );
            recurse(
                cold,
                x,
                scale,
                phi,
                path,
                incoming_zero * cold.cover() as f64 / cover,
                0.0,
                Some(*split),
            );
        }
    }
}

/// Path-dependent Shapley values in time polynomial in tree depth.
pub fn tree_shap_fast(model: &TreeEnsemble, x: &[f64]) -> Vec<f64> {
    let mut phi = vec![0.0; model.n_features()];
    for t in &model.trees {
        let depth = t.root.depth();
        recurse(
            &t.root,
            x,
            t.weight,
            &mut phi,
            Vec::with_capacity(depth + 2),
            1.0,
            1.0,
            None,
        );
    }
    phi
}

/// Attributions for every row of a frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapMatrix {
    pub feature_names: Vec<String>,
    pub base_value: f64,
    /// `values[row][feature]`
    pub values: Vec<Vec<f64>>,
}

impl ShapMatrix {
    pub fn n_rows(&self) -> usize {
        self.values.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[j]).collect()
    }

    /// `base_value + Σ_j φ_rj`, which equals the model prediction.
    pub fn row_total(&self, r: usize) -> f64 {
        self.base_value + self.values[r].iter().sum::<f64>()
    }
}

pub fn shap_all(model: &TreeEnsemble, frame: &Frame) -> Result<ShapMatrix> {
    let x = frame.select_names(&model.feature_names)?;
    let values = (0..x.n_rows()).map(|r| tree_shap_fast(model, &x.row(r))).collect();
    Ok(ShapMatrix {
        feature_names: model.feature_names.clone(),
        base_value: base_value(model)?,
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Importance {
    pub feature: String,
    pub index: usize,
    pub mean_abs_shap: f64,
}

/// Mean |φ| per feature, descending; ties keep column order.
pub fn global_importance(shap: &ShapMatrix) -> Vec<Importance> {
    let n = shap.n_rows().max(1) as f64;
    let mut out: Vec<Importance> = shap
        .feature_names
        .iter()
        .enumerate()
        .map(|(j, name)| Importance {
            feature: name.clone(),
            index: j,
            mean_abs_shap: shap.values.iter().map(|r| r[j].abs()).sum::<f64>() / n,
        })
        .collect();
    out.sort_by(|a, b| b.mean_abs_shap.total_cmp(&a.mean_abs_shap));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDispersion {
    pub feature: String,
    pub dispersion: f64,
    pub bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dispersion {
    pub per_feature: Vec<FeatureDispersion>,
    pub aggregate: f64,
}

/// Bin label per row: one bin per distinct value when there are at most
/// `n_bins` of them, otherwise equal-frequency bins by rank in which tied
/// values always share a bin.
pub fn quantile_bins(values: &[f64], n_bins: usize) -> (Vec<usize>, usize) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));

    let mut group_start = vec![0usize; n];
    let mut distinct = 0;
    for k in 0..n {
        if k == 0 || values[order[k]] != values[order[k - 1]] {
            distinct += 1;
            group_start[k] = k;
        } else {
            group_start[k] = group_start[k - 1];
        }
    }

    let mut bins = vec![0usize; n];
    if distinct <= n_bins {
        let mut label = 0;
        for k in 0..n {
            if k > 0 && group_start[k] == k {
                label += 1;
            }
            bins[order[k]] = label;
        }
        (bins, distinct)
    } else {
        for k in 0..n {
            bins[order[k]] = group_start[k] * n_bins / n;
        }
        (bins, n_bins)
    }
}

/// Pooled within-bin variance of each feature's attributions, binning rows by
/// the feature's own value. Low dispersion means φ_j is close to a function of
/// x_j alone.
pub fn shap_dispersion(shap: &ShapMatrix, frame: &Frame, n_bins: usize) -> Result<Dispersion> {
    if n_bins < 2 {
        return Err(Error::InvalidParameter(format!(
            "n_bins must be at least 2, got {n_bins}"
        )));
    }
    let x = frame.select_names(&shap.feature_names)?;
    if x.n_rows() != shap.n_rows() {
        return Err(Error::InvalidParameter(format!(
            "{} attribution rows for {} data rows",
            shap.n_rows(),
            x.n_rows()
        )));
    }
    let n = shap.n_rows();
    let n_bins = n_bins.min(n);
    let per_feature: Vec<FeatureDispersion> = shap
        .feature_names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let (bins, used) = quantile_bins(x.column(j), n_bins);
            let mut sums = vec![0.0; used];
            let mut counts = vec![0usize; used];
            for (r, &b) in bins.iter().enumerate() {
                sums[b] += shap.values[r][j];
                counts[b] += 1;
            }
            let ss: f64 = bins
                .iter()
                .enumerate()
                .map(|(r, &b)| {
                    let m = sums[b] / counts[b] as f64;
                    (shap.values[r][j] - m).powi(2)
                })
                .sum();
            FeatureDispersion {
                feature: name.clone(),
                dispersion: ss / n as f64,
                bins: used,
            }
        })
        .collect();
    let aggregate = if per_feature.is_empty() {
        0.0
    } else {
        per_feature.iter().map(|f| f.dispersion).sum::<f64>() / per_feature.len() as f64
    };
    Ok(Dispersion { per_feature, aggregate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Family;

    fn model(d: usize, trees: Vec<TreeNode>) -> TreeEnsemble {
        let names = (0..d).map(|j| format!("f{j}")).collect();
        let mut m = TreeEnsemble::new(Family::GradientBoosting, names, 0.0);
        for t in trees {
            let scope = (0..d).collect();
            m.push(1.0, scope, t);
        }
        m
    }

    fn stump() -> TreeNode {
        TreeNode::split(0, 0.5, TreeNode::leaf(1.0, 6), TreeNode::leaf(2.0, 4))
    }

    #[test]
    fn v_tree_hand_values() {
        let t = stump();
        assert!((v_tree(&t, &[false], &[0.0]).unwrap() - 1.4).abs() < 1e-15);
        assert_eq!(v_tree(&t, &[true], &[0.0]).unwrap(), 1.0);
        assert_eq!(v_tree(&t, &[true], &[0.9]).unwrap(), 2.0);
    }

    #[test]
    fn zero_cover_is_reported() {
        let bad = TreeNode::Split {
            feature: 0,
            threshold: 0.0,
            cover: 0,
            left: Box::new(TreeNode::leaf(1.0, 1)),
            right: Box::new(TreeNode::leaf(1.0, 1)),
        };
        assert!(matches!(v_tree(&bad, &[false], &[0.0]), Err(Error::ZeroCover)));
    }

    #[test]
    fn constant_model_has_zero_attributions() {
        let m = model(3, vec![TreeNode::leaf(5.0, 10)]);
        assert_eq!(shap_exact(&m, &[1.0, 2.0, 3.0]).unwrap(), vec![0.0; 3]);
        assert_eq!(tree_shap_fast(&m, &[1.0, 2.0, 3.0]), vec![0.0; 3]);
    }

    #[test]
    fn stump_attribution_is_prediction_minus_expectation() {
        let m = model(3, vec![stump()]);
        for x in [[0.0, 9.0, 9.0], [1.0, -9.0, 0.0]] {
            let expected = m.predict(&x) - 1.4;
            let exact = shap_exact(&m, &x).unwrap();
            let fast = tree_shap_fast(&m, &x);
            assert!((exact[0] - expected).abs() < 1e-14);
            assert_eq!(&exact[1..], [0.0, 0.0]);
            assert!((fast[0] - expected).abs() < 1e-14);
            assert_eq!(&fast[1..], [0.0, 0.0]);
        }
    }

    #[test]
    fn depth_two_tree_matches_hand_enumeration() {
        // Root on f0 (cover 10 = 4 + 6); left child splits f1 into leaves
        // 1 (cover 1) and 3 (cover 3); right leaf 10 (cover 6).
        let tree = TreeNode::split(
            0,
            0.0,
            TreeNode::split(1, 0.0, TreeNode::leaf(1.0, 1), TreeNode::leaf(3.0, 3)),
            TreeNode::leaf(10.0, 6),
        );
        let m = model(2, vec![tree]);
        let x = [-1.0, -1.0];
        // v(∅) = 0.4 * (0.25 * 1 + 0.75 * 3) + 0.6 * 10 = 7
        // v({0}) = 0.25 * 1 + 0.75 * 3 = 2.5
        // v({1}) = 0.4 * 1 + 0.6 * 10 = 6.4
        // v({0,1}) = 1
        let phi0 = 0.5 * ((2.5 - 7.0) + (1.0 - 6.4));
        let phi1 = 0.5 * ((6.4 - 7.0) + (1.0 - 2.5));
        let exact = shap_exact(&m, &x).unwrap();
        let fast = tree_shap_fast(&m, &x);
        assert!((exact[0] - phi0).abs() < 1e-14 && (exact[1] - phi1).abs() < 1e-14);
        assert!((fast[0] - phi0).abs() < 1e-14 && (fast[1] - phi1).abs() < 1e-14);
        assert!((base_value(&m).unwrap() - 7.0).abs() < 1e-14);
    }

    #[test]
    fn repeated_feature_on_a_path() {
        let tree = TreeNode::split(
            0,
            0.0,
            TreeNode::split(0, -1.0, TreeNode::leaf(-3.0, 2), TreeNode::leaf(-1.0, 3)),
            TreeNode::split(1, 0.0, TreeNode::leaf(2.0, 4), TreeNode::leaf(5.0, 1)),
        );
        let m = model(2, vec![tree]);
        for x in [[-2.0, 1.0], [-0.5, -1.0], [0.5, 0.5], [0.5, -0.5]] {
            let exact = shap_exact(&m, &x).unwrap();
            let fast = tree_shap_fast(&m, &x);
            for (a, b) in exact.iter().zip(&fast) {
                assert!((a - b).abs() < 1e-12, "{exact:?} vs {fast:?}");
            }
        }
    }

    #[test]
    fn too_many_features_for_enumeration() {
        let m = model(21, vec![TreeNode::leaf(0.0, 1)]);
        assert!(matches!(
            shap_exact(&m, &[0.0; 21]),
            Err(Error::TooManyFeatures { got: 21, cap: 20 })
        ));
    }

    #[test]
    fn importance_orders_and_ties() {
        let shap = ShapMatrix {
            feature_names: vec!["a".into(), "b".into(), "c".into()],
            base_value: 0.0,
            values: vec![vec![0.0, 1.0, -1.0], vec![0.0, -3.0, 3.0]],
        };
        let imp = global_importance(&shap);
        let names: Vec<&str> = imp.iter().map(|i| i.feature.as_str()).collect();
        assert_eq!(names, ["b", "c", "a"]);
        assert_eq!(imp[0].mean_abs_shap, 2.0);
        assert_eq!(imp[2].mean_abs_shap, 0.0);
    }

    #[test]
    fn binning_respects_ties() {
        let (bins, used) = quantile_bins(&[3.0, 1.0, 1.0, 2.0], 16);
        assert_eq!(used, 3);
        assert_eq!(bins, [2, 0, 0, 1]);

        let values: Vec<f64> = (0..100).map(|i| (i / 2) as f64).collect();
        let (bins, used) = quantile_bins(&values, 4);
        assert_eq!(used, 4);
        for k in (0..100).step_by(2) {
            assert_eq!(bins[k], bins[k + 1]);
        }
        assert_eq!(bins.iter().filter(|&&b| b == 0).count(), 26);
    }

    #[test]
    fn dispersion_of_functional_attributions_is_zero() {
        let x: Vec<f64> = (0..40).map(|i| (i % 5) as f64).collect();
        let frame = Frame::from_pairs(vec![("a", x.clone())]).unwrap();
        let shap = ShapMatrix {
            feature_names: vec!["a".into()],
            base_value: 0.0,
            values: x.iter().map(|v| vec![v * v]).collect(),
        };
        let d = shap_dispersion(&shap, &frame, 16).unwrap();
        assert_eq!(d.aggregate, 0.0);
        assert_eq!(d.per_feature[0].bins, 5);
        assert!(shap_dispersion(&shap, &frame, 1).is_err());
    }
}
