//! Column-major numeric tables.
//!
//! A [`Frame`] is the dataset abstraction used by every other module: named,
//! equal-length `f64` columns with no missing or non-finite entries. CSV
//! ingestion drops incomplete rows instead of imputing them and reports how
//! many were lost.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl Frame {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::InvalidParameter(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        if columns.is_empty() {
            return Err(Error::InvalidParameter("frame has no columns".into()));
        }
        let mut seen = HashSet::new();
        for (i, name) in names.iter().enumerate() {
            if name.trim().is_empty() {
                return Err(Error::EmptyColumnName(i));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
        let n_rows = columns[0].len();
        if n_rows == 0 {
            return Err(Error::NoRows { dropped: 0 });
        }
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != n_rows {
                return Err(Error::LengthMismatch {
                    name: name.clone(),
                    len: col.len(),
                    expected: n_rows,
                });
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(name.clone()));
            }
        }
        Ok(Frame { names, columns })
    }

    /// Builds a frame from `(name, values)` pairs.
    pub fn from_pairs<S: Into<String>>(pairs: Vec<(S, Vec<f64>)>) -> Result<Self> {
        let (names, columns) = pairs.into_iter().map(|(n, c)| (n.into(), c)).unzip();
        Frame::new(names, columns)
    }

    pub fn n_rows(&self) -> usize {
        self.columns[0].len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, index: usize) -> &[f64] {
        &self.columns[index]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn column_by_name(&self, name: &str) -> Result<&[f64]> {
        Ok(self.column(self.index_of(name)?))
    }

    pub fn row(&self, r: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[r]).collect()
    }

    /// New frame holding the given columns, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Frame> {
        let names = indices.iter().map(|&i| self.names[i].clone()).collect();
        let columns = indices.iter().map(|&i| self.columns[i].clone()).collect();
        Frame::new(names, columns)
    }

    pub fn select_names<S: AsRef<str>>(&self, names: &[S]) -> Result<Frame> {
        let idx = names
            .iter()
            .map(|n| self.index_of(n.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        self.select(&idx)
    }

    /// New frame holding the given rows (repeats allowed).
    pub fn take_rows(&self, rows: &[usize]) -> Result<Frame> {
        let columns = self
            .columns
            .iter()
            .map(|c| rows.iter().map(|&r| c[r]).collect())
            .collect();
        Frame::new(self.names.clone(), columns)
    }

    /// Splits the frame into its feature columns (every column except
    /// `target`, in order) and the target column.
    pub fn features_and_target(&self, target: &str) -> Result<(Frame, Vec<f64>)> {
        let t = self.index_of(target)?;
        let keep: Vec<usize> = (0..self.n_cols()).filter(|&i| i != t).collect();
        if keep.is_empty() {
            return Err(Error::TooFewFeatures { needed: 1, got: 0 });
        }
        Ok((self.select(&keep)?, self.columns[t].clone()))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.names)?;
        let mut record = Vec::with_capacity(self.n_cols());
        for r in 0..self.n_rows() {
            record.clear();
            record.extend(self.columns.iter().map(|c| c[r].to_string()));
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Result of [`load_csv`].
#[derive(Debug, Clone)]
pub struct Loaded {
    pub frame: Frame,
    /// Rows discarded because a cell was empty, unparseable or non-finite.
    pub dropped: usize,
}

/// Reads a headed, comma-separated numeric table. The target column is moved
/// to the last position.
pub fn load_csv(path: &Path, target: &str) -> Result<Loaded> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, target)
}

pub fn read_csv<R: std::io::Read>(reader: R, target: &str) -> Result<Loaded> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();

    let mut seen = HashSet::new();
    for (i, name) in header.iter().enumerate() {
        if name.is_empty() {
            return Err(Error::EmptyColumnName(i));
        }
        if !seen.insert(name.as_str()) {
            return Err(Error::DuplicateColumn(name.clone()));
        }
    }
    let t = header
        .iter()
        .position(|n| n == target)
        .ok_or_else(|| Error::MissingColumn(target.to_string()))?;

    let mut columns = vec![Vec::new(); header.len()];
    let mut dropped = 0;
    let mut parsed = Vec::with_capacity(header.len());
    for record in rdr.records() {
        let record = record?;
        parsed.clear();
        let complete = record.len() == header.len()
            && record.iter().all(|cell| match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => {
                    parsed.push(v);
                    true
                }
                _ => false,
            });
        if !complete {
            dropped += 1;
            continue;
        }
        for (col, &v) in columns.iter_mut().zip(&parsed) {
            col.push(v);
        }
    }
    if columns[0].is_empty() {
        return Err(Error::NoRows { dropped });
    }

    let mut order: Vec<usize> = (0..header.len()).filter(|&i| i != t).collect();
    order.push(t);
    let names = order.iter().map(|&i| header[i].clone()).collect();
    let mut columns: Vec<Option<Vec<f64>>> = columns.into_iter().map(Some).collect();
    let columns = order.iter().map(|&i| columns[i].take().unwrap()).collect();
    Ok(Loaded {
        frame: Frame::new(names, columns)?,
        dropped,
    })
}

/// Per-column affine transform recorded by [`standardize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub names: Vec<String>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Scaler {
    pub fn fit(frame: &Frame) -> Result<Self> {
        let mut means = Vec::with_capacity(frame.n_cols());
        let mut stds = Vec::with_capacity(frame.n_cols());
        for (name, col) in frame.names().iter().zip(frame.columns()) {
            let (mean, var) = mean_var(col);
            if !(var > 0.0) || var.sqrt() <= 1e-12 * mean.abs().max(1.0) {
                return Err(Error::ConstantColumn(name.clone()));
            }
            means.push(mean);
            stds.push(var.sqrt());
        }
        Ok(Scaler {
            names: frame.names().to_vec(),
            means,
            stds,
        })
    }

    pub fn transform(&self, frame: &Frame) -> Result<Frame> {
        self.map(frame, |v, m, s| (v - m) / s)
    }

    pub fn inverse(&self, frame: &Frame) -> Result<Frame> {
        self.map(frame, |v, m, s| v * s + m)
    }

    fn map(&self, frame: &Frame, f: impl Fn(f64, f64, f64) -> f64) -> Result<Frame> {
        let columns = frame
            .names()
            .iter()
            .zip(frame.columns())
            .map(|(name, col)| {
                let i = self
                    .names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| Error::MissingColumn(name.clone()))?;
                let (m, s) = (self.means[i], self.stds[i]);
                Ok(col.iter().map(|&v| f(v, m, s)).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Frame::new(frame.names().to_vec(), columns)
    }
}

/// Rescales every column to zero mean and unit population variance.
pub fn standardize(frame: &Frame) -> Result<(Frame, Scaler)> {
    let scaler = Scaler::fit(frame)?;
    Ok((scaler.transform(frame)?, scaler))
}

/// Mean and population (1/n) variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
