//! Pipeline configuration: a JSON document whose fields can all be
//! overridden from the command line.

use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use saleslens::models::{Family, GbtParams, Grid};
use saleslens::redundancy::RedundancyMode;
use saleslens::stats::DEFAULT_PRUNE_THRESHOLD;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const OUT_ENV: &str = "SALESLENS_OUT";
pub const DEFAULT_OUT: &str = "saleslens-out";
pub const DEFAULT_SYNTH_ROWS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSource {
    /// Built-in spec name or path to a spec JSON file.
    pub spec: String,
    #[serde(default = "default_rows")]
    pub rows: usize,
}

fn default_rows() -> usize {
    DEFAULT_SYNTH_ROWS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: Family,
    /// Fixed overrides applied before the grid.
    #[serde(default)]
    pub params: IndexMap<String, f64>,
    #[serde(default)]
    pub grid: Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DmlConfig {
    /// Defaults to the synthetic spec's treatment.
    pub treatment: Option<String>,
    /// Defaults to `[[], every other feature]`.
    pub confounder_sets: Option<Vec<Vec<String>>>,
    pub folds: usize,
    pub nuisance: GbtParams,
}

impl Default for DmlConfig {
    fn default() -> Self {
        DmlConfig {
            treatment: None,
            confounder_sets: None,
            folds: saleslens::causal::DEFAULT_FOLDS,
            nuisance: saleslens::causal::default_nuisance(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub synth: Option<SynthSource>,
    pub target: Option<String>,
    pub prune_threshold: f64,
    /// Train on the features that survive pruning instead of all of them.
    pub train_on_pruned: bool,
    pub train_fraction: f64,
    pub models: Vec<ModelSpec>,
    pub shap_bins: usize,
    pub cluster_mode: RedundancyMode,
    pub dml: DmlConfig,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

fn grid(pairs: &[(&str, &[f64])]) -> Grid {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_vec())).collect()
}

pub fn default_models() -> Vec<ModelSpec> {
    vec![
        ModelSpec {
            family: Family::GradientBoosting,
            params: IndexMap::new(),
            grid: grid(&[("n_estimators", &[100.0]), ("max_depth", &[2.0, 3.0])]),
        },
        ModelSpec {
            family: Family::Bagged,
            params: IndexMap::from([("n_estimators".to_string(), 50.0)]),
            grid: grid(&[("max_depth", &[5.0, 7.0])]),
        },
        ModelSpec {
            family: Family::AdditiveBoosting,
            params: IndexMap::from([("rounds".to_string(), 100.0)]),
            grid: grid(&[("interactions", &[0.0, 1.0])]),
        },
    ]
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: None,
            synth: None,
            target: None,
            prune_threshold: DEFAULT_PRUNE_THRESHOLD,
            train_on_pruned: false,
            train_fraction: 0.8,
            models: default_models(),
            shap_bins: saleslens::attribution::DEFAULT_DISPERSION_BINS,
            cluster_mode: RedundancyMode::Supervised,
            dml: DmlConfig::default(),
            out: None,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::user(format!("{}: {e}", path.display())))
    }

    /// Output directory: config or flag, then the environment, then a fixed
    /// default.
    pub fn out_dir(&self) -> PathBuf {
        if let Some(out) = &self.out {
            return out.clone();
        }
        match std::env::var_os(OUT_ENV) {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => PathBuf::from(DEFAULT_OUT),
        }
    }

    pub fn check_source(&self) -> CliResult<()> {
        match (&self.input, &self.synth) {
            (Some(_), None) | (None, Some(_)) => Ok(()),
            (None, None) => Err(CliError::user("no data source: give --input or --synth")),
            (Some(_), Some(_)) => Err(CliError::user(
                "give either an input file or a synthetic spec, not both",
            )),
        }
    }

    /// The configuration as recorded in the run manifest. The output
    /// directory is omitted so identical runs in different places agree.
    pub fn for_manifest(&self) -> serde_json::Value {
        let mut c = self.clone();
        c.out = None;
        serde_json::to_value(c).expect("config serializes")
    }
}
