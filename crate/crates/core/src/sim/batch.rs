use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{BaseMode, ScenarioConfig};
use super::metrics::{RunMetrics, RunOutcome};
use super::runner::{run_scenario_with, RunOptions};
use super::SimError;
use crate::task::FireMode;

/// Aggregate of the runs of one (base, fire) cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BatchCell {
    pub base: BaseMode,
    pub fire: FireMode,
    pub runs: usize,
    pub successes: usize,
    pub diverged: usize,
    pub success_rate: f64,
    /// Mean time from VisualServo entry to ignition over successful runs, s.
    pub mean_time_to_light: Option<f64>,
    /// Per-run metrics in seed order.
    pub results: Vec<RunMetrics>,
}

impl BatchCell {
    fn from_results(base: BaseMode, fire: FireMode, results: Vec<RunMetrics>) -> Self {
        let successes = results.iter().filter(|m| m.success).count();
        let diverged = results.iter().filter(|m| m.outcome == RunOutcome::Diverged).count();
        let times: Vec<f64> = results.iter().filter_map(|m| m.time_to_light.filter(|_| m.success)).collect();
        let mean_time_to_light =
            (!times.is_empty()).then(|| times.iter().sum::<f64>() / times.len() as f64);
        Self {
            base,
            fire,
            runs: results.len(),
            successes,
            diverged,
            success_rate: successes as f64 / results.len() as f64,
            mean_time_to_light,
            results,
        }
    }
}

/// Success rates over the fixed/floating x get/make grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BatchTable {
    pub n_runs: usize,
    pub seed_base: u64,
    pub cells: Vec<BatchCell>,
}

impl BatchTable {
    pub fn cell(&self, base: BaseMode, fire: FireMode) -> &BatchCell {
        self.cells.iter().find(|c| c.base == base && c.fire == fire).expect("all four cells present")
    }
}

impl fmt::Display for BatchTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10} {:<10} {:>12} {:>10} {:>16}", "base", "mode", "success", "rate", "mean time (s)")?;
        for c in &self.cells {
            let base = match c.base {
                BaseMode::Fixed => "fixed",
                BaseMode::Floating => "floating",
            };
            let fire = match c.fire {
                FireMode::GetFire => "get fire",
                FireMode::MakeFire => "make fire",
            };
            let time = c.mean_time_to_light.map_or("-".to_string(), |t| format!("{t:.2}"));
            writeln!(
                f,
                "{base:<10} {fire:<10} {:>12} {:>9.1}% {time:>16}",
                format!("{}/{}", c.successes, c.runs),
                c.success_rate * 100.0
            )?;
        }
        Ok(())
    }
}

/// Runs `n_runs` seeds (`seed_base`, `seed_base + 1`, ...) in each of the
/// four mode cells. Runs execute in parallel; results are ordered by seed.
pub fn run_batch(config: &ScenarioConfig, n_runs: usize, seed_base: u64) -> Result<BatchTable, SimError> {
    if n_runs == 0 {
        return Err(SimError::ConfigInvalid("batch needs at least one run".into()));
    }
    let modes = [
        (BaseMode::Fixed, FireMode::GetFire),
        (BaseMode::Fixed, FireMode::MakeFire),
        (BaseMode::Floating, FireMode::GetFire),
        (BaseMode::Floating, FireMode::MakeFire),
    ];
    let mut jobs = Vec::new();
    for (cell, &(base, fire)) in modes.iter().enumerate() {
        let cfg = ScenarioConfig { base, fire, ..config.clone() };
        cfg.resolve()?;
        for i in 0..n_runs as u64 {
            jobs.push((cell, ScenarioConfig { seed: seed_base + i, ..cfg.clone() }));
        }
    }
    let quiet = RunOptions { record_every: 0 };
    let results: Vec<(usize, RunMetrics)> = jobs
        .par_iter()
        .map(|(cell, cfg)| run_scenario_with(cfg, &quiet).map(|out| (*cell, out.metrics)))
        .collect::<Result<_, _>>()?;
    let cells = modes
        .iter()
        .enumerate()
        .map(|(i, &(base, fire))| {
            let mut runs: Vec<RunMetrics> =
                results.iter().filter(|(c, _)| *c == i).map(|(_, m)| m.clone()).collect();
            runs.sort_by_key(|m| m.seed);
            BatchCell::from_results(base, fire, runs)
        })
        .collect();
    Ok(BatchTable { n_runs, seed_base, cells })
}
