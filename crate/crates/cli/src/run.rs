//! Shared command plumbing: output directory and lock, data source
//! resolution, seed labels and file writers.

use std::fs;
use std::path::{Path, PathBuf};

use saleslens::frame::load_csv;
use saleslens::seed::derive_seed;
use saleslens::synth::{builtin_spec, generate, ScmSpec};
use saleslens::Frame;
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};

pub const LOCK_FILE: &str = ".saleslens.lock";
pub const MANIFEST: &str = "manifest.json";

/// Stage labels hashed with the master seed.
pub const SEED_LABELS: [&str; 6] = [
    "synth",
    "split",
    "train/gradient_boosting",
    "train/bagged",
    "train/additive_boosting",
    "dml",
];

pub fn stage_seed(cfg: &PipelineConfig, label: &str) -> u64 {
    derive_seed(cfg.seed, label)
}

/// Exclusive claim on an output directory, released on drop.
pub struct Lock {
    path: PathBuf,
}

impl Lock {
    pub fn acquire(dir: &Path) -> CliResult<Self> {
        let path = dir.join(LOCK_FILE);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Lock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(CliError::user(format!(
                "{} is in use by another run (remove {} if that run is gone)",
                dir.display(),
                path.display()
            ))),
            Err(e) => Err(CliError::io(&path, e)),
        }
    }
}

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

pub struct Workspace {
    pub out: PathBuf,
    _lock: Lock,
}

impl Workspace {
    pub fn open(cfg: &PipelineConfig) -> CliResult<Self> {
        let out = cfg.out_dir();
        fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
        let lock = Lock::acquire(&out)?;
        Ok(Workspace { out, _lock: lock })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> CliResult<()> {
        let path = self.path(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
        text.push('\n');
        self.write(name, text)
    }

    pub fn write_csv(&self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?;
        self.write(name, bytes)
    }

    pub fn read(&self, name: &str) -> CliResult<String> {
        let path = self.path(name);
        fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))
    }
}

pub struct Data {
    /// Features followed by the target.
    pub frame: Frame,
    pub target: String,
    pub spec: Option<ScmSpec>,
    pub dropped: usize,
}

impl Data {
    pub fn features(&self) -> CliResult<Frame> {
        Ok(self.frame.features_and_target(&self.target)?.0)
    }
}

pub fn resolve_spec(reference: &str) -> CliResult<ScmSpec> {
    if let Some(spec) = builtin_spec(reference) {
        return Ok(spec);
    }
    let path = Path::new(reference);
    if !path.exists() {
        return Err(CliError::user(format!(
            "{reference:?} is neither a built-in spec ({}) nor a file",
            saleslens::synth::BUILTIN_SPECS.join(", ")
        )));
    }
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(ScmSpec::from_json(&text)?)
}

/// Synthetic data for the configured spec, in spec column order.
pub fn synthesize(cfg: &PipelineConfig) -> CliResult<(ScmSpec, Frame)> {
    let source = cfg
        .synth
        .as_ref()
        .ok_or_else(|| CliError::user("no synthetic spec: give --synth"))?;
    let spec = resolve_spec(&source.spec)?;
    let frame = generate(&spec, source.rows, stage_seed(cfg, "synth"))?;
    Ok((spec, frame))
}

pub fn load_data(cfg: &PipelineConfig) -> CliResult<Data> {
    cfg.check_source()?;
    if let Some(path) = &cfg.input {
        let target = cfg
            .target
            .clone()
            .ok_or_else(|| CliError::user("no target column: give --target"))?;
        let loaded = load_csv(path, &target)?;
        if loaded.dropped > 0 {
            eprintln!("dropped {} incomplete row(s) from {}", loaded.dropped, path.display());
        }
        return Ok(Data {
            frame: loaded.frame,
            target,
            spec: None,
            dropped: loaded.dropped,
        });
    }
    let (spec, frame) = synthesize(cfg)?;
    let target = cfg.target.clone().unwrap_or_else(|| spec.outcome.clone());
    let mut names: Vec<&String> = frame.names().iter().filter(|n| **n != target).collect();
    if names.len() == frame.n_cols() {
        return Err(saleslens::Error::MissingColumn(target).into());
    }
    names.push(&target);
    let frame = frame.select_names(&names)?;
    Ok(Data {
        frame,
        target,
        spec: Some(spec),
        dropped: 0,
    })
}

/// Keeps letters, digits, `-` and `_`; anything else becomes `_`.
pub fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
