//! Cross-fitted double machine learning for a continuous treatment in a
//! partially linear model `Y = θ T + g(W) + u`.
//!
//! Rows are shuffled once with a stream derived from the seed (label
//! `"dml/folds"`); row `perm[i]` lands in fold `i % K`. For each fold the
//! nuisance learners `T ~ W` and `Y ~ W` are gradient-boosted trees fit on the
//! other folds with seeds derived from `"dml/fold{k}/treatment"` and
//! `"dml/fold{k}/outcome"`. Folds and seeds do not depend on the confounder
//! set, so estimates across a sweep share their splits.
//!
//! With no confounders both nuisances are the full-sample means, which makes
//! θ the ordinary least-squares slope.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{mean, Frame};
use crate::models::{fit_gbt_columns, GbtParams};
use crate::seed::{derive_seed, rng};

pub const DEFAULT_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmlEstimate {
    pub treatment: String,
    pub outcome: String,
    pub confounders: Vec<String>,
    pub theta: f64,
    pub std_error: f64,
    pub ci95: [f64; 2],
    pub n: usize,
    #[serde(rename = "folds")]
    pub n_folds: usize,
    /// `(T̃, Ỹ)` per row, in input order.
    #[serde(skip)]
    pub residual_pairs: Vec<(f64, f64)>,
}

impl DmlEstimate {
    /// `Σ T̃ (Ỹ − θ T̃)`; zero up to rounding by construction.
    pub fn orthogonality_residual(&self) -> f64 {
        self.residual_pairs.iter().map(|&(t, y)| t * (y - self.theta * t)).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("estimates serialize")
    }
}

/// Nuisance learner defaults: depth 3, 100 rounds, learning rate 0.1.
pub fn default_nuisance() -> GbtParams {
    GbtParams::default()
}

/// Fold index per row.
pub fn fold_assignment(n: usize, n_folds: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng(derive_seed(seed, "dml/folds")));
    let mut fold = vec![0; n];
    for (i, &r) in perm.iter().enumerate() {
        fold[r] = i % n_folds;
    }
    fold
}

fn check_roles<S: AsRef<str>>(
    frame: &Frame,
    treatment: &str,
    outcome: &str,
    confounders: &[S],
    n_folds: usize,
) -> Result<()> {
    frame.index_of(treatment)?;
    frame.index_of(outcome)?;
    if treatment == outcome {
        return Err(Error::InvalidParameter("treatment and outcome must differ".into()));
    }
    for (i, c) in confounders.iter().enumerate() {
        let c = c.as_ref();
        frame.index_of(c)?;
        if c == treatment || c == outcome {
            return Err(Error::InvalidParameter(format!(
                "{c:?} cannot be both a confounder and the treatment or outcome"
            )));
        }
        if confounders[..i].iter().any(|o| o.as_ref() == c) {
            return Err(Error::InvalidParameter(format!("confounder {c:?} listed twice")));
        }
    }
    if n_folds < 2 {
        return Err(Error::InvalidParameter("at least 2 folds are required".into()));
    }
    if frame.n_rows() < 10 * n_folds {
        return Err(Error::InvalidParameter(format!(
            "{} rows is fewer than 10 per fold for {n_folds} folds",
            frame.n_rows()
        )));
    }
    Ok(())
}

fn cross_fit(
    w: &[Vec<f64>],
    names: &[String],
    target: &[f64],
    fold: &[usize],
    n_folds: usize,
    params: &GbtParams,
    seed: u64,
    role: &str,
) -> Result<Vec<f64>> {
    let n = target.len();
    if w.is_empty() {
        let m = mean(target);
        return Ok(vec![m; n]);
    }
    let mut pred = vec![0.0; n];
    for k in 0..n_folds {
        let train: Vec<usize> = (0..n).filter(|&r| fold[r] != k).collect();
        let cols: Vec<Vec<f64>> = w.iter().map(|c| train.iter().map(|&r| c[r]).collect()).collect();
        let y: Vec<f64> = train.iter().map(|&r| target[r]).collect();
        let fold_seed = derive_seed(seed, &format!("dml/fold{k}/{role}"));
        let (model, _) = fit_gbt_columns(names.to_vec(), &cols, &y, params, fold_seed)?;
        let mut row = vec![0.0; w.len()];
        for r in (0..n).filter(|&r| fold[r] == k) {
            for (j, c) in w.iter().enumerate() {
                row[j] = c[r];
            }
            pred[r] = model.predict(&row);
        }
    }
    Ok(pred)
}

fn estimate_with_folds<S: AsRef<str>>(
    frame: &Frame,
    treatment: &str,
    outcome: &str,
    confounders: &[S],
    params: &GbtParams,
    n_folds: usize,
    fold: &[usize],
    seed: u64,
) -> Result<DmlEstimate> {
    let t = frame.column_by_name(treatment)?;
    let y = frame.column_by_name(outcome)?;
    let names: Vec<String> = confounders.iter().map(|c| c.as_ref().to_string()).collect();
    let w: Vec<Vec<f64>> = names
        .iter()
        .map(|c| frame.column_by_name(c).map(<[f64]>::to_vec))
        .collect::<Result<_>>()?;

    let m_hat = cross_fit(&w, &names, t, fold, n_folds, params, seed, "treatment")?;
    let g_hat = cross_fit(&w, &names, y, fold, n_folds, params, seed, "outcome")?;
    let pairs: Vec<(f64, f64)> = (0..t.len()).map(|r| (t[r] - m_hat[r], y[r] - g_hat[r])).collect();

    let stt: f64 = pairs.iter().map(|(a, _)| a * a).sum();
    if stt < 1e-12 {
        return Err(Error::NoResidualVariation);
    }
    let sty: f64 = pairs.iter().map(|(a, b)| a * b).sum();
    let theta = sty / stt;
    let meat: f64 = pairs.iter().map(|(a, b)| (a * (b - theta * a)).powi(2)).sum();
    let std_error = meat.sqrt() / stt;
    Ok(DmlEstimate {
        treatment: treatment.to_string(),
        outcome: outcome.to_string(),
        confounders: names,
        theta,
        std_error,
        ci95: [theta - 1.96 * std_error, theta + 1.96 * std_error],
        n: t.len(),
        n_folds,
        residual_pairs: pairs,
    })
}

/// Cross-fitted partialling-out estimate of the effect of `treatment` on
/// `outcome`. Columns not named are ignored.
pub fn dml_ace<S: AsRef<str>>(
    frame: &Frame,
    treatment: &str,
    outcome: &str,
    confounders: &[S],
    params: &GbtParams,
    n_folds: usize,
    seed: u64,
) -> Result<DmlEstimate> {
    check_roles(frame, treatment, outcome, confounders, n_folds)?;
    params.validate()?;
    let fold = fold_assignment(frame.n_rows(), n_folds, seed);
    estimate_with_folds(frame, treatment, outcome, confounders, params, n_folds, &fold, seed)
}

/// One estimate per confounder set, in order, on shared folds and seeds.
pub fn confounder_sweep<S: AsRef<str>>(
    frame: &Frame,
    treatment: &str,
    outcome: &str,
    confounder_sets: &[Vec<S>],
    params: &GbtParams,
    n_folds: usize,
    seed: u64,
) -> Result<Vec<(Vec<String>, DmlEstimate)>> {
    for set in confounder_sets {
        check_roles(frame, treatment, outcome, set, n_folds)?;
    }
    params.validate()?;
    let fold = fold_assignment(frame.n_rows(), n_folds, seed);
    confounder_sets
        .iter()
        .map(|set| {
            let est = estimate_with_folds(frame, treatment, outcome, set, params, n_folds, &fold, seed)?;
            Ok((est.confounders.clone(), est))
        })
        .collect()
}
