use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn saleslens(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_saleslens"))
        .args(args)
        .current_dir(dir)
        .env_remove("SALESLENS_OUT")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = saleslens(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn read_json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

#[test]
fn inspect_two_columns_gives_two_by_two_matrix() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "d.csv", "a,Y\n1,2\n2,3.5\n3,4\n4,8\n");
    ok(
        tmp.path(),
        &["inspect", "--input", "d.csv", "--target", "Y", "--out", "o"],
    );
    let corr = fs::read_to_string(tmp.path().join("o/corr.csv")).unwrap();
    let lines: Vec<&str> = corr.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines.iter().all(|l| l.split(',').count() == 3));
    for f in ["corr.svg", "scree.svg"] {
        assert!(tmp.path().join("o").join(f).exists());
    }
}

#[test]
fn scree_ratios_sum_to_one() {
    let tmp = TempDir::new().unwrap();
    ok(
        tmp.path(),
        &["inspect", "--synth", "paper-analog", "--rows", "500", "--out", "o"],
    );
    let text = fs::read_to_string(tmp.path().join("o/scree.csv")).unwrap();
    let total: f64 = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn missing_input_is_a_user_error() {
    let tmp = TempDir::new().unwrap();
    let out = saleslens(
        tmp.path(),
        &["inspect", "--input", "nope.csv", "--target", "Y", "--out", "o"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.csv"));
    assert!(out.stdout.is_empty());

    let out = saleslens(tmp.path(), &["inspect", "--out", "o"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn train_table_and_reproducible_model() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "one.json",
        r#"{"synth": {"spec": "additive", "rows": 400},
            "models": [{"family": "gradient_boosting", "params": {"n_estimators": 20}}]}"#,
    );
    ok(tmp.path(), &["train", "--config", "one.json", "--out", "a"]);
    ok(tmp.path(), &["train", "--config", "one.json", "--out", "b"]);
    let table = fs::read_to_string(tmp.path().join("a/fit_report.csv")).unwrap();
    assert_eq!(table.lines().count(), 2);
    assert_eq!(table.lines().next().unwrap(), "model,params,train_msae,validation_msae");
    assert_eq!(
        fs::read(tmp.path().join("a/model.json")).unwrap(),
        fs::read(tmp.path().join("b/model.json")).unwrap()
    );

    write(
        tmp.path(),
        "two.json",
        r#"{"synth": {"spec": "additive", "rows": 400},
            "models": [{"family": "bagged", "params": {"n_estimators": 5}, "grid": {"max_depth": [2, 6]}},
                       {"family": "additive_boosting", "params": {"rounds": 30}, "grid": {"interactions": [0, 1]}}]}"#,
    );
    ok(tmp.path(), &["train", "--config", "two.json", "--out", "c"]);
    let table = fs::read_to_string(tmp.path().join("c/fit_report.csv")).unwrap();
    let scores: Vec<f64> = table
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(scores.len(), 4);
    assert!(scores.windows(2).all(|w| w[0] <= w[1]));
    let families: Vec<&str> = table.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert!(families.contains(&"bagged") && families.contains(&"additive_boosting"));
}

#[test]
fn explain_writes_one_scatter_per_feature() {
    let tmp = TempDir::new().unwrap();
    let args = ["--synth", "retail", "--rows", "300", "--out", "o"];
    ok(
        tmp.path(),
        &[&["train", "--family", "gradient_boosting"][..], &args[..]].concat(),
    );
    ok(tmp.path(), &[&["explain"][..], &args[..]].concat());
    let o = tmp.path().join("o");
    for j in 1..=7 {
        assert!(o.join(format!("shap_F{j}.svg")).exists());
    }
    assert!(o.join("importance.svg").exists());
    let dg = read_json(o.join("dendrogram.json"));
    assert_eq!(dg["dendrogram"]["merges"].as_array().unwrap().len(), 6);
    let imp = read_json(o.join("importance.json"));
    let v: Vec<f64> = imp
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["mean_abs_shap"].as_f64().unwrap())
        .collect();
    assert!(v.windows(2).all(|w| w[0] >= w[1]));
    let shap = fs::read_to_string(o.join("shap.csv")).unwrap();
    assert_eq!(shap.lines().count(), 1 + 300 * 7);
}

#[test]
fn explain_needs_a_trained_model() {
    let tmp = TempDir::new().unwrap();
    let out = saleslens(tmp.path(), &["explain", "--synth", "retail", "--out", "o"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("train"));
}

#[test]
fn duplicated_feature_gets_an_empty_bar() {
    let tmp = TempDir::new().unwrap();
    let mut csv = String::from("x,copy,z,Y\n");
    for i in 0..200 {
        let x = (i as f64 * 0.37).sin();
        let z = ((i * 7919) % 101) as f64 / 101.0;
        csv.push_str(&format!("{x},{x},{z},{}\n", 5.0 + 2.0 * x + z));
    }
    write(tmp.path(), "d.csv", &csv);
    let args = ["--input", "d.csv", "--target", "Y", "--out", "o"];
    ok(
        tmp.path(),
        &[&["train", "--family", "gradient_boosting"][..], &args[..]].concat(),
    );
    ok(tmp.path(), &[&["explain"][..], &args[..]].concat());
    let imp = read_json(tmp.path().join("o/importance.json"));
    let last = imp.as_array().unwrap().last().unwrap();
    assert_eq!(last["feature"], "copy");
    assert_eq!(last["mean_abs_shap"].as_f64().unwrap(), 0.0);
    let svg = fs::read_to_string(tmp.path().join("o/importance.svg")).unwrap();
    assert!(svg.contains("width=\"0.00\""));
}

#[test]
fn additive_fit_reports_near_zero_dispersion() {
    let tmp = TempDir::new().unwrap();
    let mut csv = String::from("a,b,Y\n");
    for i in 0..400 {
        let a = (i % 5) as f64;
        let b = ((i * 13) % 7) as f64;
        csv.push_str(&format!(
            "{a},{b},{}\n",
            3.0 + a.sqrt() + 0.5 * b + ((i * 31) % 11) as f64 / 50.0
        ));
    }
    write(tmp.path(), "d.csv", &csv);
    write(
        tmp.path(),
        "c.json",
        r#"{"input": "d.csv", "target": "Y",
            "models": [{"family": "additive_boosting", "params": {"rounds": 50, "interactions": 0}}]}"#,
    );
    ok(tmp.path(), &["train", "--config", "c.json", "--out", "o"]);
    ok(tmp.path(), &["explain", "--config", "c.json", "--out", "o"]);
    let d = read_json(tmp.path().join("o/dispersion.json"));
    for f in d["dispersion"]["per_feature"].as_array().unwrap() {
        assert!(f["dispersion"].as_f64().unwrap().abs() < 1e-6);
    }
}

#[test]
fn dml_sweep_flips_sign_on_the_analog_spec() {
    let tmp = TempDir::new().unwrap();
    let out = ok(
        tmp.path(),
        &[
            "dml",
            "--synth",
            "paper-analog",
            "--rows",
            "4000",
            "--out",
            "o",
            "--confounders",
            "F5",
            "--confounders",
            "F2,F4,F5",
            "--confounders",
            "",
            "--confounders",
            "F5",
        ],
    );
    assert_eq!(out.lines().count(), 4);
    let o = tmp.path().join("o");
    let theta = |k: usize| read_json(o.join(format!("dml_{k}.json")))["theta"].as_f64().unwrap();
    assert!(theta(0) > 0.0);
    assert!(theta(1) < 0.0);
    assert_eq!(
        fs::read(o.join("dml_0.json")).unwrap(),
        fs::read(o.join("dml_3.json")).unwrap()
    );

    let est = read_json(o.join("dml_2.json"));
    assert_eq!(est["confounders"].as_array().unwrap().len(), 0);
    for key in ["treatment", "outcome", "theta", "std_error", "ci95", "n", "folds"] {
        assert!(est.get(key).is_some());
    }
    let resid = fs::read_to_string(o.join("residuals_2.csv")).unwrap();
    assert_eq!(resid.lines().count(), 4001);
    assert!(o.join("dml.svg").exists());
}

#[test]
fn report_sections_and_tamper_detection() {
    let tmp = TempDir::new().unwrap();
    let out = saleslens(tmp.path(), &["report", "--out", "empty"]);
    assert_eq!(out.status.code(), Some(1));

    let args = ["--synth", "linear-confounded", "--rows", "400", "--out", "o"];
    for cmd in ["inspect", "report"] {
        ok(tmp.path(), &[&[cmd][..], &args[..]].concat());
    }
    let report = fs::read_to_string(tmp.path().join("o/report.md")).unwrap();
    assert_eq!(report.lines().filter(|l| l.starts_with("## ")).count(), 5);
    for target in report.split("](").skip(1).map(|s| s.split(')').next().unwrap()) {
        assert!(tmp.path().join("o").join(target).exists(), "{target}");
    }
    ok(tmp.path(), &["verify", "--out", "o"]);

    fs::write(tmp.path().join("o/corr.csv"), "tampered\n").unwrap();
    let out = saleslens(tmp.path(), &["verify", "--out", "o"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("MISMATCH corr.csv"));
}

#[test]
fn output_root_from_environment_and_lock() {
    let tmp = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_saleslens"))
        .args(["synth", "--synth", "additive", "--rows", "20"])
        .current_dir(tmp.path())
        .env("SALESLENS_OUT", "from-env")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(tmp.path().join("from-env/data.csv").exists());
    assert!(!tmp.path().join("from-env/.saleslens.lock").exists());

    fs::write(tmp.path().join("from-env/.saleslens.lock"), "").unwrap();
    let out = saleslens(tmp.path(), &["synth", "--synth", "additive", "--out", "from-env"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("in use"));
}

#[test]
fn config_and_flags_must_name_one_source() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "both.json",
        r#"{"input": "x.csv", "synth": {"spec": "retail"}}"#,
    );
    let out = saleslens(tmp.path(), &["inspect", "--config", "both.json", "--out", "o"]);
    assert_eq!(out.status.code(), Some(1));
    write(tmp.path(), "bad.json", r#"{"colour": 1}"#);
    let out = saleslens(tmp.path(), &["inspect", "--config", "bad.json", "--out", "o"]);
    assert_eq!(out.status.code(), Some(1));
}
