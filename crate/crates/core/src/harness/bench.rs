//! Benchmark runs over a directory of scenario files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::astar::grid_astar_oracle;
use super::generators::parse_instance_name;
use super::HarnessError;
use crate::planner::{plan_static, PlanError, PlannerConfig};
use crate::scenario::Scenario;

pub const TIMING_RUNS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub instance: String,
    pub env: String,
    pub num_b: usize,
    pub astar_km: Option<f64>,
    pub tangent_km: Option<f64>,
    pub cpu_s: f64,
    pub iterations: usize,
    pub status: String,
    pub seed: Option<u64>,
}

pub fn status_label(result: &Result<impl Sized, PlanError>) -> &'static str {
    match result {
        Ok(_) => "ok",
        Err(PlanError::InvalidScenario(_)) => "invalid_scenario",
        Err(PlanError::PlanningFailed { .. }) => "planning_failed",
        Err(PlanError::DegenerateTangency { .. }) => "degenerate_tangency",
        Err(PlanError::DeadEnd { .. }) => "dead_end",
    }
}

/// Median wall-clock time of `runs` planner calls and the last result.
pub fn timed_plan(
    scenario: &Scenario,
    config: &PlannerConfig,
    runs: usize,
) -> (f64, Result<crate::planner::PathPlan, PlanError>) {
    let mut times = Vec::with_capacity(runs);
    let mut result = None;
    for _ in 0..runs.max(1) {
        let clock = Instant::now();
        let r = plan_static(scenario, config);
        times.push(clock.elapsed().as_secs_f64());
        result = Some(r);
    }
    times.sort_by(f64::total_cmp);
    (times[times.len() / 2], result.expect("at least one run"))
}

pub fn bench_scenario(scenario: &Scenario, cell: f64, config: &PlannerConfig) -> BenchmarkRow {
    let (cpu_s, result) = timed_plan(scenario, config, TIMING_RUNS);
    let (env, seed) = parse_instance_name(&scenario.name);
    BenchmarkRow {
        instance: scenario.name.clone(),
        env: env.unwrap_or_default(),
        num_b: scenario.obstacles.len(),
        astar_km: grid_astar_oracle(scenario, cell),
        tangent_km: result.as_ref().ok().map(|p| p.length),
        cpu_s,
        iterations: match &result {
            Ok(p) => p.iterations,
            Err(PlanError::PlanningFailed { iterations, .. }) => *iterations,
            Err(_) => 0,
        },
        status: status_label(&result).to_string(),
        seed,
    }
}

/// Scenario files (`*.json`) in `dir`, sorted by name.
pub fn suite_files(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

/// Benchmarks every scenario file in `dir`, in file-name order.
pub fn run_suite(dir: &Path, cell: f64, config: &PlannerConfig) -> Result<Vec<BenchmarkRow>, HarnessError> {
    let scenarios = suite_files(dir)?
        .iter()
        .map(Scenario::load)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(scenarios.par_iter().map(|s| bench_scenario(s, cell, config)).collect())
}

pub fn write_csv(rows: &[BenchmarkRow], path: &Path) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
