//! `saleslens`: correlation pruning, tree-ensemble regression, SHAP
//! attribution with redundancy clustering and double machine learning,
//! driven from one JSON config and one master seed.

mod commands;
mod config;
mod error;
mod run;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use saleslens::models::Family;
use saleslens::redundancy::RedundancyMode;

use config::{default_models, PipelineConfig, SynthSource, DEFAULT_SYNTH_ROWS};
use error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "saleslens", version, about = "Tabular sales-insight pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON pipeline configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Input CSV with a header row.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Built-in synthetic spec name or spec JSON path, used instead of --input.
    #[arg(long, global = true)]
    synth: Option<String>,
    /// Rows to generate with --synth.
    #[arg(long, global = true)]
    rows: Option<usize>,
    /// Target column.
    #[arg(long, global = true)]
    target: Option<String>,
    /// Output directory (default: $SALESLENS_OUT, then ./saleslens-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Correlation matrix and PCA scree.
    Inspect,
    /// Recursive removal of correlated features.
    Prune {
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Grid search over model families; writes the comparison table and the best model.
    Train {
        /// Restrict to these families (repeatable).
        #[arg(long = "family")]
        families: Vec<Family>,
    },
    /// SHAP values, importance, redundancy dendrogram and dispersion.
    Explain {
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long)]
        cluster_mode: Option<RedundancyMode>,
    },
    /// Double machine learning over confounder sets.
    Dml {
        #[arg(long)]
        treatment: Option<String>,
        /// Comma-separated confounder set (repeatable; "" is the empty set).
        #[arg(long = "confounders")]
        confounders: Vec<String>,
        #[arg(long)]
        folds: Option<usize>,
    },
    /// Write synthetic data and its spec.
    Synth,
    /// Markdown report and hash manifest over the output directory.
    Report,
    /// Check the output directory against its manifest.
    Verify,
}

fn configure(cli: &Cli) -> CliResult<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(input) = &cli.input {
        cfg.input = Some(input.clone());
        cfg.synth = None;
    }
    if let Some(spec) = &cli.synth {
        let rows = cfg.synth.as_ref().map_or(DEFAULT_SYNTH_ROWS, |s| s.rows);
        cfg.synth = Some(SynthSource {
            spec: spec.clone(),
            rows,
        });
        cfg.input = None;
    }
    if let Some(rows) = cli.rows {
        match &mut cfg.synth {
            Some(s) => s.rows = rows,
            None => return Err(CliError::user("--rows needs a synthetic spec")),
        }
    }
    if let Some(t) = &cli.target {
        cfg.target = Some(t.clone());
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    match &cli.command {
        Command::Prune { threshold: Some(t) } => cfg.prune_threshold = *t,
        Command::Train { families } if !families.is_empty() => {
            let defaults = default_models();
            cfg.models = families
                .iter()
                .map(|f| {
                    cfg.models
                        .iter()
                        .chain(&defaults)
                        .find(|m| m.family == *f)
                        .cloned()
                        .expect("defaults cover every family")
                })
                .collect();
        }
        Command::Explain { bins, cluster_mode } => {
            if let Some(b) = bins {
                cfg.shap_bins = *b;
            }
            if let Some(m) = cluster_mode {
                cfg.cluster_mode = *m;
            }
        }
        Command::Dml {
            treatment,
            confounders,
            folds,
        } => {
            if let Some(t) = treatment {
                cfg.dml.treatment = Some(t.clone());
            }
            if !confounders.is_empty() {
                cfg.dml.confounder_sets = Some(
                    confounders
                        .iter()
                        .map(|s| {
                            s.split(',')
                                .map(str::trim)
                                .filter(|c| !c.is_empty())
                                .map(String::from)
                                .collect()
                        })
                        .collect(),
                );
            }
            if let Some(k) = folds {
                cfg.dml.folds = *k;
            }
        }
        _ => {}
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> CliResult<()> {
    let cfg = configure(cli)?;
    match cli.command {
        Command::Inspect => commands::inspect(&cfg),
        Command::Prune { .. } => commands::prune(&cfg),
        Command::Train { .. } => commands::train(&cfg),
        Command::Explain { .. } => commands::explain(&cfg),
        Command::Dml { .. } => commands::dml(&cfg),
        Command::Synth => commands::synth(&cfg),
        Command::Report => commands::report(&cfg),
        Command::Verify => commands::verify(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| execute(&cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => ExitCode::from(2),
    }
}
