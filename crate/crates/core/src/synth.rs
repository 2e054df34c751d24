//! Structural causal models with known ground truth.
//!
//! Every variable is `intercept + Σ coef · transform(parent) + sd · ε`, with
//! parents restricted to earlier variables so the graph is acyclic by
//! construction. Noise is standard normal, drawn from a ChaCha8 stream seeded
//! with the caller's seed (`rand_chacha::ChaCha8Rng::seed_from_u64`) via the
//! ziggurat sampler of `rand_distr::StandardNormal`. Variables are sampled in
//! order, all `n` rows of one variable before the next; a noise draw is
//! consumed for every cell even when its `sd` is zero.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::seed::rng;
use crate::stats::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    #[default]
    Identity,
    Square,
    Tanh,
}

impl Transform {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Transform::Identity => v,
            Transform::Square => v * v,
            Transform::Tanh => v.tanh(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub parent: String,
    pub coef: f64,
    #[serde(default)]
    pub transform: Transform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equation {
    pub name: String,
    #[serde(default)]
    pub intercept: f64,
    #[serde(default)]
    pub terms: Vec<Term>,
    pub noise_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScmSpec {
    pub variables: Vec<Equation>,
    pub treatment: String,
    pub outcome: String,
    pub true_theta: f64,
}

fn term(parent: &str, coef: f64) -> Term {
    Term {
        parent: parent.into(),
        coef,
        transform: Transform::Identity,
    }
}

fn nonlinear(parent: &str, coef: f64, transform: Transform) -> Term {
    Term {
        parent: parent.into(),
        coef,
        transform,
    }
}

fn equation(name: &str, intercept: f64, terms: Vec<Term>, noise_sd: f64) -> Equation {
    Equation {
        name: name.into(),
        intercept,
        terms,
        noise_sd,
    }
}

impl ScmSpec {
    pub fn names(&self) -> Vec<String> {
        self.variables.iter().map(|e| e.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|e| e.name == name)
            .ok_or_else(|| Error::InvalidScm(format!("unknown variable {name:?}")))
    }

    /// Checks ordering, names, noise scales and that `true_theta` is the
    /// linear coefficient of the treatment in the outcome's equation.
    pub fn validate(&self) -> Result<()> {
        if self.variables.is_empty() {
            return Err(Error::InvalidScm("no variables".into()));
        }
        for (i, eq) in self.variables.iter().enumerate() {
            if eq.name.trim().is_empty() {
                return Err(Error::InvalidScm(format!("variable {i} has no name")));
            }
            if self.variables[..i].iter().any(|e| e.name == eq.name) {
                return Err(Error::InvalidScm(format!("duplicate variable {:?}", eq.name)));
            }
            if !(eq.noise_sd >= 0.0 && eq.noise_sd.is_finite()) || !eq.intercept.is_finite() {
                return Err(Error::InvalidScm(format!("bad noise or intercept for {:?}", eq.name)));
            }
            for t in &eq.terms {
                if !self.variables[..i].iter().any(|e| e.name == t.parent) {
                    return Err(Error::InvalidScm(format!(
                        "{:?} depends on {:?}, which is not an earlier variable",
                        eq.name, t.parent
                    )));
                }
                if !t.coef.is_finite() {
                    return Err(Error::InvalidScm(format!("non-finite coefficient in {:?}", eq.name)));
                }
            }
        }
        let outcome = &self.variables[self.index_of(&self.outcome)?];
        self.index_of(&self.treatment)?;
        let coef: f64 = outcome
            .terms
            .iter()
            .filter(|t| t.parent == self.treatment)
            .map(|t| {
                if t.transform == Transform::Identity {
                    Ok(t.coef)
                } else {
                    Err(Error::InvalidScm("treatment enters the outcome non-linearly".into()))
                }
            })
            .sum::<Result<f64>>()?;
        if coef != self.true_theta {
            return Err(Error::InvalidScm(format!(
                "true_theta {} differs from the structural coefficient {coef}",
                self.true_theta
            )));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ScmSpec = serde_json::from_str(text).map_err(|e| Error::InvalidScm(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("specs serialize")
    }

    pub fn is_linear(&self) -> bool {
        self.variables
            .iter()
            .flat_map(|e| &e.terms)
            .all(|t| t.transform == Transform::Identity)
    }

    /// Population covariance of a linear spec, propagated in variable order.
    /// `None` when any term is non-linear.
    pub fn linear_covariance(&self) -> Option<Matrix> {
        if !self.is_linear() {
            return None;
        }
        let n = self.variables.len();
        let parents: Vec<Vec<(usize, f64)>> = self
            .variables
            .iter()
            .map(|e| {
                e.terms
                    .iter()
                    .map(|t| (self.index_of(&t.parent).expect("validated"), t.coef))
                    .collect()
            })
            .collect();
        let mut cov = vec![vec![0.0; n]; n];
        for i in 0..n {
            for k in 0..i {
                let c: f64 = parents[i].iter().map(|&(p, w)| w * cov[p][k]).sum();
                cov[i][k] = c;
                cov[k][i] = c;
            }
            let mut v = self.variables[i].noise_sd.powi(2);
            for &(p, w) in &parents[i] {
                for &(q, u) in &parents[i] {
                    v += w * u * cov[p][q];
                }
            }
            cov[i][i] = v;
        }
        Some(cov)
    }
}

/// Samples `n` rows in variable order. Columns follow the spec order.
pub fn generate(spec: &ScmSpec, n: usize, seed: u64) -> Result<Frame> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("row count must be at least 1".into()));
    }
    let mut rng = rng(seed);
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(spec.variables.len());
    for eq in &spec.variables {
        let parents: Vec<(usize, &Term)> = eq
            .terms
            .iter()
            .map(|t| (spec.index_of(&t.parent).expect("validated"), t))
            .collect();
        let col = (0..n)
            .map(|r| {
                let eps: f64 = rng.sample(StandardNormal);
                let mut v = eq.intercept;
                for &(p, t) in &parents {
                    v += t.coef * t.transform.apply(columns[p][r]);
                }
                v + eq.noise_sd * eps
            })
            .collect();
        columns.push(col);
    }
    Frame::new(spec.names(), columns)
}

/// Population partialling-out slope of `outcome` on `treatment` after linear
/// projection of both on `controls`:
/// `Cov(T, Y | C) / Var(T | C)` with `Cov(a, b | C) = Σ_ab - Σ_aC Σ_CC⁻¹ Σ_Cb`.
pub fn partial_slope(cov: &Matrix, treatment: usize, outcome: usize, controls: &[usize]) -> Result<f64> {
    let partial = |a: usize, b: usize| -> Result<f64> {
        if controls.is_empty() {
            return Ok(cov[a][b]);
        }
        let scc: Matrix = controls
            .iter()
            .map(|&i| controls.iter().map(|&j| cov[i][j]).collect())
            .collect();
        let scb: Vec<f64> = controls.iter().map(|&i| cov[i][b]).collect();
        let w = solve(scc, scb)?;
        Ok(cov[a][b] - controls.iter().zip(&w).map(|(&i, wi)| cov[a][i] * wi).sum::<f64>())
    };
    let vt = partial(treatment, treatment)?;
    if vt <= 1e-12 {
        return Err(Error::NoResidualVariation);
    }
    Ok(partial(treatment, outcome)? / vt)
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: Matrix, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty range");
        if a[pivot][col].abs() < 1e-14 {
            return Err(Error::InvalidParameter("singular control covariance".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = ((row + 1)..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Ok(x)
}

/// `W → T`, `W → Y`, `T → Y` with effect −1:
/// `T = 0.8 W + e (sd 0.6)`, `Y = −1.0 T + 1.5 W + u (sd 1)`.
///
/// Var(T) = 0.64 + 0.36 = 1 and Cov(T, Y) = −1 + 1.5 · 0.8, so the slope of Y
/// on T without adjustment is +0.2.
pub fn linear_confounded_spec() -> ScmSpec {
    ScmSpec {
        variables: vec![
            equation("W", 0.0, vec![], 1.0),
            equation("T", 0.0, vec![term("W", 0.8)], 0.6),
            equation("Y", 0.0, vec![term("T", -1.0), term("W", 1.5)], 1.0),
        ],
        treatment: "T".into(),
        outcome: "Y".into(),
        true_theta: -1.0,
    }
}

/// Five-variable analogue of the seller-responsiveness example.
///
/// ```text
/// F2, F4 ~ N(0, 1)
/// F5 = 0.6 F2 + 0.6 F4 + e5          sd(e5) = 0.6
/// F6 = 0.9 F5 + 0.9 F2 + 0.9 F4 + e6 sd(e6) = 0.8
/// Y  = 10 − 0.5 F6 + 1.5 F2 + 1.5 F4 + 0.5 F5 + u   sd(u) = 0.5
/// ```
///
/// Adjusting for {F2, F4, F5} leaves `F6 − E[F6 | ·] = e6`, so the slope is
/// the structural −0.5. Adjusting for F5 alone, write `s = F2 + F4` and
/// `s̃ = s − E[s | F5]`. Var(F5) = 1.08, Cov(s, F5) = 1.2, so
/// Var(s̃) = 2 − 1.44 / 1.08 = 2/3. The F6 residual is `0.9 s̃ + e6` and the
/// outcome's confounding part is `1.5 s̃`, giving a slope of
/// `−0.5 + (1.5 · 0.9 · 2/3) / (0.81 · 2/3 + 0.64) = −0.5 + 0.9 / 1.18 ≈ +0.263`.
pub fn paper_analog_spec() -> ScmSpec {
    ScmSpec {
        variables: vec![
            equation("F2", 0.0, vec![], 1.0),
            equation("F4", 0.0, vec![], 1.0),
            equation("F5", 0.0, vec![term("F2", 0.6), term("F4", 0.6)], 0.6),
            equation("F6", 0.0, vec![term("F5", 0.9), term("F2", 0.9), term("F4", 0.9)], 0.8),
            equation(
                "Y",
                10.0,
                vec![term("F6", -0.5), term("F2", 1.5), term("F4", 1.5), term("F5", 0.5)],
                0.5,
            ),
        ],
        treatment: "F6".into(),
        outcome: "Y".into(),
        true_theta: -0.5,
    }
}

/// Seven features F1..F7 and a positive-mean target Y. F2, F4, F5 and F6
/// carry the confounding structure of [`paper_analog_spec`]; F1, F3 and F7
/// enter non-linearly and independently.
pub fn retail_spec() -> ScmSpec {
    ScmSpec {
        variables: vec![
            equation("F1", 0.0, vec![], 1.0),
            equation("F2", 0.0, vec![], 1.0),
            equation("F3", 0.0, vec![], 1.0),
            equation("F4", 0.0, vec![], 1.0),
            equation("F5", 0.0, vec![term("F2", 0.6), term("F4", 0.6)], 0.6),
            equation("F6", 0.0, vec![term("F5", 0.9), term("F2", 0.9), term("F4", 0.9)], 0.8),
            equation("F7", 0.0, vec![], 1.0),
            equation(
                "Y",
                20.0,
                vec![
                    nonlinear("F1", -0.8, Transform::Square),
                    term("F2", 1.5),
                    nonlinear("F3", 1.0, Transform::Tanh),
                    term("F4", 1.5),
                    term("F5", 0.5),
                    term("F6", -0.5),
                    nonlinear("F7", 1.2, Transform::Tanh),
                ],
                0.5,
            ),
        ],
        treatment: "F6".into(),
        outcome: "Y".into(),
        true_theta: -0.5,
    }
}

/// Independent standard-normal features X1..X4 with an additive outcome
/// `Y = 10 + 2 tanh(X1) + 0.5 X2² + X3 + u` (X4 is irrelevant).
pub fn additive_spec() -> ScmSpec {
    ScmSpec {
        variables: vec![
            equation("X1", 0.0, vec![], 1.0),
            equation("X2", 0.0, vec![], 1.0),
            equation("X3", 0.0, vec![], 1.0),
            equation("X4", 0.0, vec![], 1.0),
            equation(
                "Y",
                10.0,
                vec![
                    nonlinear("X1", 2.0, Transform::Tanh),
                    nonlinear("X2", 0.5, Transform::Square),
                    term("X3", 1.0),
                ],
                0.3,
            ),
        ],
        treatment: "X3".into(),
        outcome: "Y".into(),
        true_theta: 1.0,
    }
}

pub const BUILTIN_SPECS: [&str; 4] = ["linear-confounded", "paper-analog", "retail", "additive"];

pub fn builtin_spec(name: &str) -> Option<ScmSpec> {
    match name {
        "linear-confounded" => Some(linear_confounded_spec()),
        "paper-analog" => Some(paper_analog_spec()),
        "retail" => Some(retail_spec()),
        "additive" => Some(additive_spec()),
        _ => None,
    }
}
