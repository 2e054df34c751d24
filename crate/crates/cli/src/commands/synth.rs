use crate::config::PipelineConfig;
use crate::error::CliResult;
use crate::run::{synthesize, Workspace};

pub fn synth(cfg: &PipelineConfig) -> CliResult<()> {
    let (spec, frame) = synthesize(cfg)?;
    let ws = Workspace::open(cfg)?;
    frame.write_csv(&ws.path("data.csv"))?;
    let mut text = spec.to_json();
    text.push('\n');
    ws.write("spec.json", text)?;
    println!(
        "generated {} rows of {} variables; wrote data.csv, spec.json",
        frame.n_rows(),
        frame.n_cols()
    );
    Ok(())
}
