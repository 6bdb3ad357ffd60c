//! Parameter sweeps: one JSON file per grid point, named by the SHA-256 of
//! the point's canonical JSON, so reruns skip finished points. The
//! aggregate CSV follows the config's point order and does not depend on
//! the degree of parallelism.

use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::commands::{modes_csv, run_point, write_file};
use crate::config::{ExperimentConfig, Point};
use crate::error::{CliError, EXIT_FAILURE};
use crate::json::{format_f64, render, to_value};

pub const AGGREGATE_HEADER: &str =
    "key,lambda,p,j,theta,half_width,beta_hat,threshold_7beta,threshold_2beta,median_rate,selected_modes,in_regime,pass,status";

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    /// Experiment definition (TOML)
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides output.dir)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Points run concurrently (overrides run.parallelism)
    #[arg(long)]
    pub parallelism: Option<usize>,
}

pub fn point_key(pt: &Point) -> String {
    let digest = Sha256::digest(render(&to_value(pt)).as_bytes());
    hex::encode(digest)[..16].to_string()
}

enum PointState {
    Done(Value),
    Skipped(Value),
    Failed(CliError),
}

fn aggregate_row(key: &str, pt: &Point, state: &PointState) -> String {
    let v = match state {
        PointState::Done(v) | PointState::Skipped(v) => v,
        PointState::Failed(_) => {
            return format!("{key},{},{},{},,{},,,,,,,,failed\n", format_f64(pt.lambda), pt.p, pt.j, pt.half_width);
        }
    };
    let verdict = &v["verdict"];
    let f = |x: &Value| x.as_f64().map(format_f64).unwrap_or_default();
    let pass = match verdict["pass"].as_bool() {
        Some(b) => b.to_string(),
        None => String::new(),
    };
    format!(
        "{key},{},{},{},{},{},{},{},{},{},{},{},{pass},ok\n",
        format_f64(pt.lambda),
        pt.p,
        pt.j,
        f(&v["phase"]["theta"]),
        pt.half_width,
        f(&verdict["beta_hat"]),
        f(&verdict["threshold_7beta"]),
        f(&verdict["threshold_2beta"]),
        f(&verdict["measured_rates"]["median"]),
        v["selected_modes"],
        verdict["in_regime"],
    )
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<crate::commands::Outcome, CliError> {
    let cfg = ExperimentConfig::load(&a.config)?;
    let out = a.out.clone().or(cfg.output.dir.clone()).ok_or_else(|| CliError::usage("no output directory (--out or output.dir)"))?;
    let threads = a.parallelism.unwrap_or(cfg.run.parallelism);
    if !(1..=crate::config::MAX_PARALLELISM).contains(&threads) {
        return Err(CliError::usage("parallelism out of range"));
    }
    let points = cfg.points();
    let dir = out.join("points");
    std::fs::create_dir_all(&dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::failure(e.to_string()))?;
    let states: Vec<(String, PointState)> = pool.install(|| {
        points
            .par_iter()
            .map(|pt| {
                let key = point_key(pt);
                let path = dir.join(format!("{key}.json"));
                if let Some(v) = std::fs::read_to_string(&path)
                    .ok()
                    .and_then(|t| serde_json::from_str::<Value>(&t).ok())
                    .filter(|v| v["point"] == to_value(pt))
                {
                    return (key, PointState::Skipped(v));
                }
                let state = match run_point(pt) {
                    Ok((v, run)) => {
                        let written = write_file(&path, &render(&v))
                            .and_then(|_| write_file(&dir.join(format!("{key}.modes.csv")), &modes_csv(&run)));
                        match written {
                            Ok(()) => PointState::Done(v),
                            Err(e) => PointState::Failed(e),
                        }
                    }
                    Err(e) => PointState::Failed(e),
                };
                (key, state)
            })
            .collect()
    });

    let mut aggregate = String::from(AGGREGATE_HEADER);
    aggregate.push('\n');
    let mut failures = Vec::new();
    let (mut done, mut skipped) = (0, 0);
    for ((key, state), pt) in states.iter().zip(&points) {
        aggregate.push_str(&aggregate_row(key, pt, state));
        match state {
            PointState::Done(_) => done += 1,
            PointState::Skipped(_) => skipped += 1,
            PointState::Failed(e) => failures.push(json!({"key": key, "point": to_value(pt), "error": to_value(e)})),
        }
    }
    let aggregate_path = out.join("aggregate.csv");
    let manifest_path = out.join("failures.json");
    write_file(&aggregate_path, &aggregate)?;
    write_file(&manifest_path, &render(&Value::Array(failures.clone())))?;
    let result = json!({
        "points": points.len(),
        "computed": done,
        "skipped": skipped,
        "failed": failures.len(),
        "aggregate": aggregate_path.display().to_string(),
        "failure_manifest": manifest_path.display().to_string(),
    });
    let code = if failures.is_empty() { 0 } else { EXIT_FAILURE };
    Ok(crate::commands::Outcome { result, code })
}
