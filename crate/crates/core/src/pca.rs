//! Covariance eigendecomposition and scree summaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::stats::Matrix;

const MAX_SWEEPS: usize = 100;
const OFF_DIAGONAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeResult {
    /// Eigenvalues of the covariance matrix, descending, clamped at zero.
    pub explained_variance: Vec<f64>,
    pub explained_ratio: Vec<f64>,
}

/// Eigenpairs of a symmetric matrix, sorted by descending eigenvalue.
/// `vectors[k]` is the unit eigenvector for `values[k]`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// Population covariance matrix of the frame's columns.
pub fn covariance(frame: &Frame) -> Matrix {
    let n = frame.n_rows() as f64;
    let centered: Vec<Vec<f64>> = frame
        .columns()
        .iter()
        .map(|c| {
            let m = c.iter().sum::<f64>() / n;
            c.iter().map(|v| v - m).collect()
        })
        .collect();
    let d = centered.len();
    let mut cov = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in i..d {
            let s = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum::<f64>() / n;
            cov[i][j] = s;
            cov[j][i] = s;
        }
    }
    cov
}

/// Cyclic Jacobi rotations until every off-diagonal entry is below
/// `1e-10` (relative to the matrix scale when that exceeds one).
pub fn symmetric_eigen(matrix: &Matrix) -> Result<SymmetricEigen> {
    let d = matrix.len();
    let mut a = matrix.clone();
    let mut v = vec![vec![0.0; d]; d];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let tol = OFF_DIAGONAL_TOL * scale;

    let off_max = |a: &Matrix| {
        let mut m = 0.0f64;
        for i in 0..d {
            for j in (i + 1)..d {
                m = m.max(a[i][j].abs());
            }
        }
        m
    };

    let mut sweeps = 0;
    while off_max(&a) >= tol {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NotConverged(MAX_SWEEPS));
        }
        sweeps += 1;
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[p][q];
                if apq.abs() < f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]).then(i.cmp(&j)));
    Ok(SymmetricEigen {
        values: order.iter().map(|&k| a[k][k]).collect(),
        vectors: order.iter().map(|&k| v.iter().map(|row| row[k]).collect()).collect(),
    })
}

/// Scree summary of the column covariance. Callers wanting correlation PCA
/// pass a standardized frame.
pub fn pca_scree(frame: &Frame) -> Result<ScreeResult> {
    if frame.n_rows() <= frame.n_cols() {
        return Err(Error::TooFewRows {
            rows: frame.n_rows(),
            cols: frame.n_cols(),
        });
    }
    let eig = symmetric_eigen(&covariance(frame))?;
    let explained_variance: Vec<f64> = eig.values.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = explained_variance.iter().sum();
    let explained_ratio = if total > 0.0 {
        explained_variance.iter().map(|v| v / total).collect()
    } else {
        vec![0.0; explained_variance.len()]
    };
    Ok(ScreeResult {
        explained_variance,
        explained_ratio,
    })
}
