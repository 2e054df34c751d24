mod common;

use common::*;
use saleslens::attribution::{base_value, global_importance, shap_all, shap_dispersion, shap_exact, tree_shap_fast};
use saleslens::models::{
    fit_bagged, fit_gam_boost, fit_gbt, BaggedParams, Family, GamParams, GbtParams, TreeEnsemble, TreeNode,
};
use saleslens::synth::{generate, retail_spec};

#[test]
fn fast_recursion_matches_enumeration() {
    let mut rng = seeded(21);
    for case in 0..40 {
        let d = 1 + case % 10;
        let depth = 1 + case % 4;
        let model = random_ensemble(&mut rng, 1 + case % 12, depth, d);
        for _ in 0..5 {
            let x = normals(&mut rng, d);
            let fast = tree_shap_fast(&model, &x);
            let exact = shap_exact(&model, &x).unwrap();
            for j in 0..d {
                assert!((fast[j] - exact[j]).abs() < 1e-8, "case {case} feature {j}");
            }
        }
    }
}

#[test]
fn efficiency_for_every_family() {
    let data = generate(&retail_spec(), 400, 2).unwrap();
    let gbt = fit_gbt(
        &data,
        "Y",
        &GbtParams {
            n_estimators: 40,
            ..Default::default()
        },
        1,
    )
    .unwrap()
    .0;
    let bag = fit_bagged(
        &data,
        "Y",
        &BaggedParams {
            n_estimators: 20,
            max_depth: 5,
            feature_subsample: 0.6,
            ..Default::default()
        },
        1,
    )
    .unwrap()
    .0;
    let gam = fit_gam_boost(
        &data,
        "Y",
        &GamParams {
            rounds: 20,
            ..Default::default()
        },
    )
    .unwrap()
    .0;
    for model in [gbt, bag, gam] {
        let shap = shap_all(&model, &data).unwrap();
        let pred = model.predict_frame(&data).unwrap();
        for r in 0..shap.n_rows() {
            assert!((shap.row_total(r) - pred[r]).abs() < 1e-6, "{}", model.family);
        }
    }
}

#[test]
fn untouched_feature_gets_exactly_zero() {
    let mut rng = seeded(4);
    let mut model = random_ensemble(&mut rng, 10, 3, 3);
    model.feature_names.push("unused".into());
    for _ in 0..20 {
        let x = normals(&mut rng, 4);
        assert_eq!(tree_shap_fast(&model, &x)[3], 0.0);
        assert_eq!(shap_exact(&model, &x).unwrap()[3], 0.0);
    }
}

#[test]
fn symmetric_trees_give_swapped_attributions() {
    let tree = |a: usize, b: usize| {
        TreeNode::split(
            a,
            0.0,
            TreeNode::split(b, 0.0, TreeNode::leaf(0.0, 3), TreeNode::leaf(1.0, 2)),
            TreeNode::split(b, 0.0, TreeNode::leaf(1.0, 2), TreeNode::leaf(2.0, 3)),
        )
    };
    let mut model = TreeEnsemble::new(Family::GradientBoosting, vec!["x0".into(), "x1".into()], 0.0);
    model.push(0.5, vec![0, 1], tree(0, 1));
    model.push(0.5, vec![0, 1], tree(1, 0));
    let mut rng = seeded(6);
    for _ in 0..20 {
        let x = normals(&mut rng, 2);
        let phi = shap_exact(&model, &x).unwrap();
        let swapped = shap_exact(&model, &[x[1], x[0]]).unwrap();
        assert!((phi[0] - swapped[1]).abs() < 1e-8);
        assert!((phi[1] - swapped[0]).abs() < 1e-8);
    }
}

#[test]
fn attributions_are_linear_under_concatenation() {
    let mut rng = seeded(12);
    let a = random_ensemble(&mut rng, 6, 3, 5);
    let b = random_ensemble(&mut rng, 4, 2, 5);
    let ab = a.concat(&b).unwrap();
    assert!((base_value(&ab).unwrap() - (base_value(&a).unwrap() + base_value(&b).unwrap())).abs() < 1e-12);
    for _ in 0..20 {
        let x = normals(&mut rng, 5);
        let (pa, pb, pab) = (tree_shap_fast(&a, &x), tree_shap_fast(&b, &x), tree_shap_fast(&ab, &x));
        let (ea, eb, eab) = (
            shap_exact(&a, &x).unwrap(),
            shap_exact(&b, &x).unwrap(),
            shap_exact(&ab, &x).unwrap(),
        );
        for j in 0..5 {
            assert!((pab[j] - (pa[j] + pb[j])).abs() < 1e-12);
            assert!((eab[j] - (ea[j] + eb[j])).abs() < 1e-12);
        }
    }
}

#[test]
fn importance_tracks_linear_slopes() {
    let mut rng = seeded(30);
    let n = 2000;
    let x1 = normals(&mut rng, n);
    let x2 = normals(&mut rng, n);
    let noise = normals(&mut rng, n);
    let y: Vec<f64> = (0..n).map(|i| 3.0 * x1[i] + x2[i] + 0.1 * noise[i]).collect();
    let data = frame(vec![("x1", x1), ("x2", x2), ("y", y)]);
    let model = fit_gbt(
        &data,
        "y",
        &GbtParams {
            n_estimators: 200,
            ..Default::default()
        },
        0,
    )
    .unwrap()
    .0;
    let imp = global_importance(&shap_all(&model, &data).unwrap());
    assert_eq!(imp[0].feature, "x1");
    let ratio = imp[0].mean_abs_shap / imp[1].mean_abs_shap;
    assert!((ratio - 3.0).abs() <= 0.6, "{ratio}");
}

#[test]
fn additive_fit_has_zero_dispersion_on_discrete_inputs() {
    let mut rng = seeded(14);
    let n = 600;
    let x1: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, 0..5) as f64).collect();
    let x2: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, 0..7) as f64).collect();
    let noise = normals(&mut rng, n);
    let y: Vec<f64> = (0..n)
        .map(|i| 5.0 + x1[i].sqrt() + 0.3 * x2[i] + 0.2 * noise[i])
        .collect();
    let data = frame(vec![("x1", x1), ("x2", x2), ("y", y)]);
    let model = fit_gam_boost(
        &data,
        "y",
        &GamParams {
            rounds: 50,
            interactions: 0,
            ..Default::default()
        },
    )
    .unwrap()
    .0;
    let disp = shap_dispersion(&shap_all(&model, &data).unwrap(), &data, 16).unwrap();
    for f in &disp.per_feature {
        assert!(f.dispersion.abs() < 1e-6, "{}: {}", f.feature, f.dispersion);
    }
}

#[test]
fn interaction_raises_dispersion_over_additive_fit() {
    let mut rng = seeded(15);
    let n = 2000;
    let x1 = normals(&mut rng, n);
    let x2 = normals(&mut rng, n);
    let noise = normals(&mut rng, n);
    let y: Vec<f64> = (0..n)
        .map(|i| 10.0 + 2.0 * x1[i] * x2[i] + x1[i] + 0.1 * noise[i])
        .collect();
    let data = frame(vec![("x1", x1), ("x2", x2), ("y", y)]);
    let gbt = fit_gbt(
        &data,
        "y",
        &GbtParams {
            n_estimators: 150,
            ..Default::default()
        },
        0,
    )
    .unwrap()
    .0;
    let gam = fit_gam_boost(
        &data,
        "y",
        &GamParams {
            rounds: 100,
            interactions: 0,
            ..Default::default()
        },
    )
    .unwrap()
    .0;
    let dg = shap_dispersion(&shap_all(&gbt, &data).unwrap(), &data, 16).unwrap();
    let da = shap_dispersion(&shap_all(&gam, &data).unwrap(), &data, 16).unwrap();
    assert!(dg.per_feature[0].dispersion > da.per_feature[0].dispersion);
}

#[test]
fn constant_model_has_no_dispersion() {
    let data = frame(vec![("x", (0..50).map(f64::from).collect()), ("y", vec![2.0; 50])]);
    let model = fit_gbt(&data, "y", &GbtParams::default(), 0).unwrap().0;
    let disp = shap_dispersion(&shap_all(&model, &data).unwrap(), &data, 16).unwrap();
    assert_eq!(disp.aggregate, 0.0);
}
