use std::collections::BTreeMap;
use std::fmt::Write;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};
use crate::run::{stage_seed, Workspace, LOCK_FILE, MANIFEST, SEED_LABELS};

const ARTIFACTS: [&str; 8] = [
    "corr.csv",
    "scree.csv",
    "prune.json",
    "fit_report.csv",
    "dispersion.json",
    "dml.json",
    "data.csv",
    "model.json",
];

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    seed: u64,
    stage_seeds: BTreeMap<String, u64>,
    config: Value,
    files: BTreeMap<String, String>,
}

fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn json(ws: &Workspace, name: &str) -> CliResult<Option<Value>> {
    if !ws.path(name).exists() {
        return Ok(None);
    }
    let text = ws.read(name)?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| CliError::user(format!("{name}: {e}")))
}

fn csv_rows(ws: &Workspace, name: &str) -> CliResult<Option<(Vec<String>, Vec<Vec<String>>)>> {
    if !ws.path(name).exists() {
        return Ok(None);
    }
    let mut rdr = csv::Reader::from_path(ws.path(name))?;
    let header = rdr.headers()?.iter().map(str::to_string).collect();
    let rows = rdr
        .records()
        .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect::<Result<_, _>>()?;
    Ok(Some((header, rows)))
}

fn table(out: &mut String, header: &[String], rows: &[Vec<String>]) {
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(out, "|{}", " --- |".repeat(header.len()));
    for row in rows {
        let _ = writeln!(out, "| {} |", row.join(" | "));
    }
    out.push('\n');
}

fn figure(out: &mut String, ws: &Workspace, file: &str, caption: &str) {
    if ws.path(file).exists() {
        let _ = writeln!(out, "![{caption}]({file})\n");
    }
}

fn short(v: &str) -> String {
    v.parse::<f64>()
        .map(|x| format!("{x:.4}"))
        .unwrap_or_else(|_| v.to_string())
}

fn not_run(out: &mut String, command: &str) {
    let _ = writeln!(out, "_Not run (`saleslens {command}`)._\n");
}

fn render(ws: &Workspace, cfg: &PipelineConfig) -> CliResult<String> {
    let mut out = String::from("# Sales insight report\n\n");
    let source = match (&cfg.input, &cfg.synth) {
        (Some(p), _) => format!("input file `{}`", p.display()),
        (None, Some(s)) => format!("synthetic spec `{}`, {} rows", s.spec, s.rows),
        (None, None) => "unspecified".into(),
    };
    let _ = writeln!(out, "Data: {source}. Master seed: {}.\n", cfg.seed);

    out.push_str("## 1. Data overview\n\n");
    if let Some((_, rows)) = csv_rows(ws, "scree.csv")? {
        figure(&mut out, ws, "corr.svg", "Correlation matrix");
        figure(&mut out, ws, "scree.svg", "Scree plot");
        let rows: Vec<Vec<String>> = rows
            .iter()
            .map(|r| vec![r[0].clone(), short(&r[1]), short(&r[2])])
            .collect();
        table(
            &mut out,
            &["component".into(), "variance".into(), "ratio".into()],
            &rows,
        );
    } else {
        not_run(&mut out, "inspect");
    }

    out.push_str("## 2. Feature pruning\n\n");
    if let Some(p) = json(ws, "prune.json")? {
        let list = |k: &str| {
            p[k].as_array()
                .map(|a| a.iter().filter_map(Value::as_str).collect::<Vec<_>>().join(", "))
                .unwrap_or_default()
        };
        let _ = writeln!(out, "Threshold |corr| > {}.\n", p["threshold"]);
        let _ = writeln!(out, "- Retained: {}", list("retained"));
        let _ = writeln!(
            out,
            "- Removed, in order: {}\n",
            if list("removed").is_empty() {
                "none".into()
            } else {
                list("removed")
            }
        );
    } else {
        not_run(&mut out, "prune");
    }

    out.push_str("## 3. Model comparison\n\n");
    if let Some((header, rows)) = csv_rows(ws, "fit_report.csv")? {
        let rows: Vec<Vec<String>> = rows
            .iter()
            .map(|r| vec![r[0].clone(), format!("`{}`", r[1]), short(&r[2]), short(&r[3])])
            .collect();
        table(&mut out, &header, &rows);
        if let Some(t) = json(ws, "train.json")? {
            let _ = writeln!(out, "Selected model: {}.\n", t["best_family"].as_str().unwrap_or("?"));
        }
    } else {
        not_run(&mut out, "train");
    }

    out.push_str("## 4. Attribution\n\n");
    if let Some(d) = json(ws, "dispersion.json")? {
        figure(
            &mut out,
            ws,
            "importance.svg",
            "Global importance and redundancy clustering",
        );
        if let Some(Value::Array(items)) = json(ws, "importance.json")? {
            let rows: Vec<Vec<String>> = items
                .iter()
                .map(|i| {
                    vec![
                        i["feature"].as_str().unwrap_or("").to_string(),
                        format!("{:.4}", i["mean_abs_shap"].as_f64().unwrap_or(f64::NAN)),
                    ]
                })
                .collect();
            table(&mut out, &["feature".into(), "mean abs SHAP".into()], &rows);
        }
        if let Some(families) = d["families"].as_object() {
            let rows: Vec<Vec<String>> = families
                .iter()
                .map(|(f, v)| vec![f.clone(), format!("{:.4}", v["aggregate"].as_f64().unwrap_or(f64::NAN))])
                .collect();
            let _ = writeln!(
                out,
                "SHAP dispersion (pooled within-bin variance, {} bins):\n",
                d["bins"]
            );
            table(&mut out, &["model".into(), "aggregate dispersion".into()], &rows);
        }
        let mut scatters: Vec<String> = fs::read_dir(&ws.out)
            .map_err(|e| CliError::io(&ws.out, e))?
            .filter_map(|e| e.ok().and_then(|e| e.file_name().into_string().ok()))
            .filter(|n| n.starts_with("shap_") && n.ends_with(".svg"))
            .collect();
        scatters.sort();
        for s in scatters {
            figure(&mut out, ws, &s, &s);
        }
    } else {
        not_run(&mut out, "explain");
    }

    out.push_str("## 5. Causal effects\n\n");
    if let Some(Value::Array(ests)) = json(ws, "dml.json")? {
        figure(&mut out, ws, "dml.svg", "Residual-on-residual fits");
        let rows: Vec<Vec<String>> = ests
            .iter()
            .map(|e| {
                let set: Vec<&str> = e["confounders"]
                    .as_array()
                    .map(|a| a.iter().filter_map(Value::as_str).collect())
                    .unwrap_or_default();
                let f = |k: &Value| format!("{:.4}", k.as_f64().unwrap_or(f64::NAN));
                vec![
                    format!("{{{}}}", set.join(", ")),
                    f(&e["theta"]),
                    f(&e["std_error"]),
                    format!("[{}, {}]", f(&e["ci95"][0]), f(&e["ci95"][1])),
                ]
            })
            .collect();
        let treatment = ests.first().and_then(|e| e["treatment"].as_str()).unwrap_or("?");
        let _ = writeln!(out, "Effect of `{treatment}` on the target by control set:\n");
        table(
            &mut out,
            &["controls".into(), "theta".into(), "std error".into(), "95% CI".into()],
            &rows,
        );
    } else {
        not_run(&mut out, "dml");
    }
    Ok(out)
}

fn hash_outputs(ws: &Workspace) -> CliResult<BTreeMap<String, String>> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(&ws.out).map_err(|e| CliError::io(&ws.out, e))? {
        let entry = entry.map_err(|e| CliError::io(&ws.out, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name == MANIFEST || name == LOCK_FILE || !entry.path().is_file() {
            continue;
        }
        files.insert(name, sha256_file(&entry.path())?);
    }
    Ok(files)
}

/// Markdown report over whatever artifacts exist, then a manifest hashing
/// every file in the output directory.
pub fn report(cfg: &PipelineConfig) -> CliResult<()> {
    let ws = Workspace::open(cfg)?;
    if !ARTIFACTS.iter().any(|a| ws.path(a).exists()) {
        return Err(CliError::user(format!("nothing to report in {}", ws.out.display())));
    }
    ws.write("report.md", render(&ws, cfg)?)?;
    let manifest = Manifest {
        seed: cfg.seed,
        stage_seeds: SEED_LABELS
            .iter()
            .map(|l| (l.to_string(), stage_seed(cfg, l)))
            .collect(),
        config: cfg.for_manifest(),
        files: hash_outputs(&ws)?,
    };
    ws.write_json(MANIFEST, &manifest)?;
    println!(
        "wrote report.md and manifest.json ({} files hashed)",
        manifest.files.len()
    );
    Ok(())
}

/// Re-hashes every file listed in the manifest.
pub fn verify(cfg: &PipelineConfig) -> CliResult<()> {
    let out = cfg.out_dir();
    let path = out.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| CliError::user(format!("{}: {e}", path.display())))?;
    let mut bad = 0;
    for (name, expected) in &manifest.files {
        let file = out.join(name);
        if !file.exists() {
            println!("MISSING  {name}");
            bad += 1;
        } else if sha256_file(&file)? != *expected {
            println!("MISMATCH {name}");
            bad += 1;
        }
    }
    if bad > 0 {
        return Err(CliError::user(format!(
            "{bad} of {} artifact(s) failed verification",
            manifest.files.len()
        )));
    }
    println!("verified {} artifact(s)", manifest.files.len());
    Ok(())
}
