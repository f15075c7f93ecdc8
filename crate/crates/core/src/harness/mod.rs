//! Experiment orchestration: configuration, dispatch, reporting, persistence.

pub mod config;
mod experiments;
pub mod output;
pub mod report;
pub mod result;

use std::path::PathBuf;
use std::time::Instant;

pub use config::{ConventionChoice, Experiment, ExperimentConfig, StateKind};
pub use output::{
    atomic_write, emit_flow_data, landmarks_csv, parse_landmarks_csv, parse_trajectory_csv, trajectory_csv, Landmark,
    OutputFile,
};
pub use report::{core_entries, discrepancy_report};
pub use result::{
    CheckOutcome, Claim, DiscrepancyEntry, ExperimentResult, MeanStd, ProtocolRow, Status, TrajectoryRecord,
};

use crate::error::{Error, Result};

pub const WORKERS_ENV: &str = "ENTSHAPE_WORKERS";

/// Worker count: `ENTSHAPE_WORKERS` if set, else the config value, else all cores.
pub fn resolve_workers(cfg: &ExperimentConfig) -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Error::Config(format!(
                "{WORKERS_ENV} = `{v}` is not a positive integer"
            ))),
        },
        Err(_) => Ok(cfg.workers),
    }
}

/// Result plus the side files (CSV) the experiment produced.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub result: ExperimentResult,
    pub files: Vec<OutputFile>,
}

/// Validates, then runs the experiment inside a dedicated worker pool.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let workers = resolve_workers(config)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let start = Instant::now();
    let mut out = pool.install(|| dispatch(config))?;
    out.result.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(out)
}

fn dispatch(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let mut result = ExperimentResult::new(cfg);
    let mut files = Vec::new();
    match cfg.experiment {
        Experiment::Table1 => experiments::table1(cfg, &mut result)?,
        Experiment::Table2 => experiments::table2(cfg, &mut result)?,
        Experiment::Flow => files = experiments::flow(cfg, &mut result)?,
        Experiment::Sweep => files = experiments::sweep(cfg, &mut result)?,
        Experiment::ErSingle => experiments::er_single(cfg, &mut result)?,
        Experiment::Selfcheck => experiments::selfcheck(cfg, &mut result)?,
    }
    Ok(RunOutput { result, files })
}

/// Writes `<name>.json`, `<name>_timing.json`, `<name>_discrepancies.md` and
/// any side files into `config.out_dir`. Returns the paths written.
pub fn write_outputs(out: &RunOutput) -> Result<Vec<PathBuf>> {
    let dir = &out.result.config.out_dir;
    let name = &out.result.experiment;
    let mut written = Vec::new();
    let mut put = |file: String, contents: String| -> Result<()> {
        let path = dir.join(file);
        atomic_write(&path, contents.as_bytes())?;
        written.push(path);
        Ok(())
    };
    put(format!("{name}.json"), output::to_json_pretty(&out.result)?)?;
    put(
        format!("{name}_timing.json"),
        output::to_json_pretty(&serde_json::json!({
            "experiment": name,
            "wall_clock_seconds": out.result.wall_clock_seconds,
        }))?,
    )?;
    put(
        format!("{name}_discrepancies.md"),
        discrepancy_report(std::slice::from_ref(&out.result))?,
    )?;
    for f in &out.files {
        put(f.name.clone(), f.contents.clone())?;
    }
    Ok(written)
}
