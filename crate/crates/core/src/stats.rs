//! Correlation analysis and correlated-feature pruning.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{mean_var, Frame};

/// Dense square matrix stored as rows.
pub type Matrix = Vec<Vec<f64>>;

pub(crate) fn ensure_not_constant(name: &str, col: &[f64]) -> Result<(f64, f64)> {
    let (mean, var) = mean_var(col);
    if !(var > 0.0) || var.sqrt() <= 1e-12 * mean.abs().max(1.0) {
        return Err(Error::ConstantColumn(name.to_string()));
    }
    Ok((mean, var))
}

/// Pearson correlation between two equal-length vectors.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, _) = mean_var(x);
    let (my, _) = mean_var(y);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Symmetric matrix of pairwise Pearson coefficients with unit diagonal.
pub fn pearson_corr(frame: &Frame) -> Result<Matrix> {
    if frame.n_rows() < 2 {
        return Err(Error::TooFewRows {
            rows: frame.n_rows(),
            cols: 2,
        });
    }
    let centered: Vec<(Vec<f64>, f64)> = frame
        .names()
        .iter()
        .zip(frame.columns())
        .map(|(name, col)| {
            let (mean, _) = ensure_not_constant(name, col)?;
            let c: Vec<f64> = col.iter().map(|v| v - mean).collect();
            let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            Ok((c, norm))
        })
        .collect::<Result<_>>()?;

    let d = centered.len();
    let mut corr = vec![vec![0.0; d]; d];
    for i in 0..d {
        corr[i][i] = 1.0;
        for j in (i + 1)..d {
            let (ci, ni) = &centered[i];
            let (cj, nj) = &centered[j];
            let dot: f64 = ci.iter().zip(cj).map(|(a, b)| a * b).sum();
            let r = (dot / (ni * nj)).clamp(-1.0, 1.0);
            corr[i][j] = r;
            corr[j][i] = r;
        }
    }
    Ok(corr)
}

/// One deletion performed by [`prune_correlated`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneStep {
    pub step: usize,
    pub removed: String,
    pub pair: (String, String),
    pub corr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pruning {
    /// Indices into the input frame of the surviving feature columns.
    pub retained: Vec<usize>,
    pub log: Vec<PruneStep>,
}

impl Pruning {
    pub fn retained_names(&self, frame: &Frame) -> Vec<String> {
        self.retained.iter().map(|&i| frame.names()[i].clone()).collect()
    }
}

pub const DEFAULT_PRUNE_THRESHOLD: f64 = 0.3;

/// Repeatedly removes one feature from the most correlated pair until no
/// retained pair has `|corr| > threshold`.
///
/// The member removed is the one with the larger mean absolute correlation
/// against every other remaining feature; ties go to the lower column index.
/// `target`, when given, is never considered.
pub fn prune_correlated(frame: &Frame, target: Option<&str>, threshold: f64) -> Result<Pruning> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "prune threshold {threshold} outside (0, 1)"
        )));
    }
    let t = target.map(|name| frame.index_of(name)).transpose()?;
    let features: Vec<usize> = (0..frame.n_cols()).filter(|&i| Some(i) != t).collect();
    if features.len() < 2 {
        return Err(Error::TooFewFeatures {
            needed: 2,
            got: features.len(),
        });
    }
    let corr = pearson_corr(&frame.select(&features)?)?;
    let (kept, deletions) = prune_matrix(&corr, threshold);

    let name = |k: usize| frame.names()[features[k]].clone();
    let log = deletions
        .into_iter()
        .enumerate()
        .map(|(step, (removed, (a, b), r))| PruneStep {
            step: step + 1,
            removed: name(removed),
            pair: (name(a), name(b)),
            corr: r,
        })
        .collect();
    Ok(Pruning {
        retained: kept.into_iter().map(|k| features[k]).collect(),
        log,
    })
}

/// Greedy pruning on a correlation matrix. Returns the surviving positions
/// and, per deletion, `(removed, (pair_a, pair_b), corr)`.
pub fn prune_matrix(corr: &Matrix, threshold: f64) -> (Vec<usize>, Vec<(usize, (usize, usize), f64)>) {
    let mut alive: Vec<usize> = (0..corr.len()).collect();
    let mut log = Vec::new();
    loop {
        let mut worst: Option<(usize, usize, f64)> = None;
        for (x, &i) in alive.iter().enumerate() {
            for &j in &alive[x + 1..] {
                let r = corr[i][j].abs();
                if r > threshold && worst.is_none_or(|(_, _, w)| r > w) {
                    worst = Some((i, j, r));
                }
            }
        }
        let Some((i, j, _)) = worst else { break };

        let mean_abs = |k: usize| {
            let others = alive.iter().filter(|&&o| o != k);
            let n = (alive.len() - 1) as f64;
            others.map(|&o| corr[k][o].abs()).sum::<f64>() / n
        };
        let removed = if mean_abs(j) > mean_abs(i) { j } else { i };
        log.push((removed, (i, j), corr[i][j]));
        alive.retain(|&k| k != removed);
    }
    (alive, log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn correlation_definitions() {
        let x = vec![0.3, -1.0, 2.5, 4.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_abs_diff_eq!(pearson(&x, &x), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pearson(&x, &neg), -1.0, epsilon = 1e-15);
        // sum dx*dy = 3, sum dx^2 = 2, sum dy^2 = 14/3
        assert_abs_diff_eq!(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]), 0.981981, epsilon = 1e-5);
    }

    #[test]
    fn corr_matrix_shape() {
        let f = Frame::from_pairs(vec![
            ("a", vec![1.0, 2.0, 3.0, 4.0]),
            ("b", vec![2.0, 1.0, 4.0, 3.0]),
            ("c", vec![0.0, 5.0, 1.0, 1.0]),
        ])
        .unwrap();
        let c = pearson_corr(&f).unwrap();
        for i in 0..3 {
            assert_eq!(c[i][i], 1.0);
            for j in 0..3 {
                assert_eq!(c[i][j], c[j][i]);
                assert!(c[i][j].abs() <= 1.0);
            }
        }
    }

    #[test]
    fn corr_rejects_constant_and_short() {
        let f = Frame::from_pairs(vec![("a", vec![1.0, 2.0]), ("k", vec![3.0, 3.0])]).unwrap();
        assert!(matches!(pearson_corr(&f), Err(Error::ConstantColumn(n)) if n == "k"));
        let f = Frame::from_pairs(vec![("a", vec![1.0])]).unwrap();
        assert!(pearson_corr(&f).is_err());
    }

    #[test]
    fn greedy_rule_on_hand_matrix() {
        // a has mean |corr| (0.9 + 0.5) / 2 = 0.7 against b's 0.5.
        let corr = vec![vec![1.0, 0.9, 0.5], vec![0.9, 1.0, 0.1], vec![0.5, 0.1, 1.0]];
        let (kept, log) = prune_matrix(&corr, 0.3);
        assert_eq!(kept, vec![1, 2]);
        assert_eq!(log, vec![(0, (0, 1), 0.9)]);
    }

    #[test]
    fn tie_in_mean_correlation_removes_lower_index() {
        let corr = vec![vec![1.0, -0.8], vec![-0.8, 1.0]];
        let (kept, log) = prune_matrix(&corr, 0.3);
        assert_eq!(kept, vec![1]);
        assert_eq!(log[0].2, -0.8);
    }

    #[test]
    fn uncorrelated_features_all_survive() {
        let corr = vec![vec![1.0, 0.2, -0.3], vec![0.2, 1.0, 0.1], vec![-0.3, 0.1, 1.0]];
        let (kept, log) = prune_matrix(&corr, 0.3);
        assert_eq!(kept, vec![0, 1, 2]);
        assert!(log.is_empty());
    }

    #[test]
    fn prune_skips_target_and_validates() {
        let f = Frame::from_pairs(vec![
            ("a", vec![1.0, 2.0, 3.0, 4.0, 5.0]),
            ("b", vec![1.1, 2.1, 2.9, 4.2, 5.0]),
            ("c", vec![1.0, -1.0, 1.0, -1.0, 1.0]),
            ("Y", vec![1.0, 2.0, 3.0, 4.0, 5.0]),
        ])
        .unwrap();
        let p = prune_correlated(&f, Some("Y"), 0.3).unwrap();
        assert!(!p.retained.contains(&3));
        assert_eq!(p.log.len(), 1);
        assert_eq!(p.log[0].pair, ("a".to_string(), "b".to_string()));
        assert!(prune_correlated(&f, Some("Y"), 1.5).is_err());
        let two = f.select_names(&["a", "Y"]).unwrap();
        assert!(matches!(
            prune_correlated(&two, Some("Y"), 0.3),
            Err(Error::TooFewFeatures { .. })
        ));
    }

    #[test]
    fn step_serializes_as_json_line() {
        let s = PruneStep {
            step: 1,
            removed: "a".into(),
            pair: ("a".into(), "b".into()),
            corr: 0.5,
        };
        assert_eq!(
            serde_json::to_string(&s).unwrap(),
            r#"{"step":1,"removed":"a","pair":["a","b"],"corr":0.5}"#
        );
    }
}
