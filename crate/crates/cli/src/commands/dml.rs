use saleslens::causal::confounder_sweep;

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};
use crate::run::{load_data, stage_seed, Workspace};
use crate::svg::{self, Svg};

fn set_label(set: &[String]) -> String {
    if set.is_empty() {
        "no controls".into()
    } else {
        format!("controls {{{}}}", set.join(", "))
    }
}

/// One estimate per confounder set, each with its residual pairs, plus a
/// side-by-side residual plot.
pub fn dml(cfg: &PipelineConfig) -> CliResult<()> {
    let data = load_data(cfg)?;
    let treatment = cfg
        .dml
        .treatment
        .clone()
        .or_else(|| data.spec.as_ref().map(|s| s.treatment.clone()))
        .ok_or_else(|| CliError::user("no treatment column: give --treatment"))?;
    if treatment == data.target {
        return Err(CliError::user("the treatment cannot be the target"));
    }
    let sets = match &cfg.dml.confounder_sets {
        Some(sets) if !sets.is_empty() => sets.clone(),
        Some(_) => return Err(CliError::user("confounder_sets is empty")),
        None => {
            let others: Vec<String> = data
                .frame
                .names()
                .iter()
                .filter(|n| **n != treatment && **n != data.target)
                .cloned()
                .collect();
            vec![Vec::new(), others]
        }
    };
    let ws = Workspace::open(cfg)?;
    let results = confounder_sweep(
        &data.frame,
        &treatment,
        &data.target,
        &sets,
        &cfg.dml.nuisance,
        cfg.dml.folds,
        stage_seed(cfg, "dml"),
    )?;

    let mut plot = Svg::new(svg::PANEL_WIDTH * results.len() as f64, svg::PANEL_HEIGHT + 30.0);
    let mut summary = Vec::with_capacity(results.len());
    for (k, (set, est)) in results.iter().enumerate() {
        let orth = est.orthogonality_residual();
        if orth.abs() > 1e-6 * est.n as f64 {
            return Err(CliError::Internal(format!("residual orthogonality violated: {orth}")));
        }
        ws.write(&format!("dml_{k}.json"), format!("{}\n", est.to_json()))?;
        ws.write_csv(
            &format!("residuals_{k}.csv"),
            &["row", "treatment_residual", "outcome_residual"],
            est.residual_pairs
                .iter()
                .enumerate()
                .map(|(r, (t, y))| vec![r.to_string(), t.to_string(), y.to_string()]),
        )?;
        let left = svg::PANEL_WIDTH * k as f64;
        let title = set_label(set);
        let xl = format!("{treatment} residual");
        let yl = format!("{} residual", data.target);
        svg::scatter_panel(
            &mut plot,
            left,
            0.0,
            &est.residual_pairs,
            Some((0.0, est.theta)),
            (&title, &xl, &yl),
        );
        plot.text(
            left + 260.0,
            svg::PANEL_HEIGHT + 18.0,
            &format!(
                "slope {:.3}, 95% CI [{:.3}, {:.3}]",
                est.theta, est.ci95[0], est.ci95[1]
            ),
            12.0,
            "middle",
        );
        println!("{title}: theta = {:.4} (se {:.4})", est.theta, est.std_error);
        summary.push(est);
    }
    ws.write("dml.svg", plot.finish())?;
    ws.write_json("dml.json", &summary)?;
    Ok(())
}
