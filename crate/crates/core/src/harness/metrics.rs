use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::replay::{ReplayError, ReplayRecorder};
use crate::adapters::{native_to_unified, unified_to_native};
use crate::baselines::{make_policy, PolicyId};
use crate::dynamics::{ActionMode, ActionSpec};
use crate::env::EnvState;
use crate::scenario::{lookup_scenario, ScenarioConfig};
use crate::sensing::scenario_unified_spaces;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub scenario: String,
    pub seed: u64,
    pub team_return: f64,
    pub reaches: u64,
    pub retrieves: u64,
    pub collision_steps: u64,
    pub oob_steps: u64,
    pub wall_time_s: f64,
}

impl EpisodeMetrics {
    /// Team return rebuilt from the event counts.
    pub fn accounted_return(&self) -> f64 {
        10.0 * self.reaches as f64 + 25.0 * self.retrieves as f64
            - 20.0 * self.collision_steps as f64
            - 20.0 * self.oob_steps as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub episodes: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1).
    pub std: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Mean, sample std and the normal-approximation 95% interval.
pub fn summarize(returns: &[f64]) -> BatchSummary {
    let n = returns.len();
    let mean = if n == 0 { 0.0 } else { returns.iter().sum::<f64>() / n as f64 };
    let std = if n < 2 {
        0.0
    } else {
        (returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    let half = if n == 0 { 0.0 } else { 1.96 * std / (n as f64).sqrt() };
    BatchSummary { episodes: n, mean, std, ci_low: mean - half, ci_high: mean + half }
}

#[derive(Debug, Clone)]
pub struct BatchOptions {
    pub mode: ActionMode,
    /// Route actions through the unified (padded) action space.
    pub padded: bool,
    /// Write one replay per episode into this directory.
    pub record_dir: Option<PathBuf>,
    pub parallel: bool,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self { mode: ActionMode::Discrete, padded: false, record_dir: None, parallel: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub rows: Vec<EpisodeMetrics>,
    pub summary: BatchSummary,
}

/// Plays one full episode with `policy` and returns its metrics.
pub fn run_episode(
    scenario: &ScenarioConfig,
    policy: PolicyId,
    seed: u64,
    opts: &BatchOptions,
    mut recorder: Option<ReplayRecorder>,
) -> Result<EpisodeMetrics, ReplayError> {
    let start = Instant::now();
    let mut env = EnvState::reset_with(scenario.clone(), seed);
    let mut agent_policy = make_policy(policy, seed, opts.mode);
    let unified = scenario_unified_spaces(scenario);
    let specs: Vec<ActionSpec> = env.metadata().into_iter().map(|m| m.action_spec).collect();

    while !env.is_done() {
        let agent = env.current_agent();
        let mut action = agent_policy.act(&env, agent);
        if opts.padded {
            let spec = &specs[agent];
            action = unified_to_native(spec, &unified, &native_to_unified(spec, &unified, &action));
        }
        let cycle = env.world_step;
        let outcome = env.step(&action).expect("episode not finished");
        if let Some(rec) = recorder.as_mut() {
            rec.record(&env, cycle, agent, &action, &outcome)?;
        }
    }
    if let Some(rec) = recorder {
        rec.finish(&env)?;
    }
    let c = &env.counters;
    Ok(EpisodeMetrics {
        scenario: scenario.id.clone(),
        seed,
        team_return: env.cumulative_return,
        reaches: c.reaches,
        retrieves: c.retrieves,
        collision_steps: c.collision_steps,
        oob_steps: c.oob_steps,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Episodes `base_seed + k` for `k in 0..episodes`, rows sorted by seed.
pub fn run_batch(
    scenario_id: &str,
    policy: PolicyId,
    episodes: usize,
    base_seed: u64,
    opts: &BatchOptions,
) -> Result<BatchReport, ReplayError> {
    let scenario = lookup_scenario(scenario_id)?;
    if let Some(dir) = &opts.record_dir {
        std::fs::create_dir_all(dir)?;
    }
    let one = |k: usize| -> Result<EpisodeMetrics, ReplayError> {
        let seed = base_seed.wrapping_add(k as u64);
        match &opts.record_dir {
            Some(dir) => {
                let path = dir.join(format!("{}_{seed}.replay", scenario.id));
                let rec = ReplayRecorder::create(&path, &scenario.id, seed)?;
                run_episode(&scenario, policy, seed, opts, Some(rec))
            }
            None => run_episode(&scenario, policy, seed, opts, None),
        }
    };
    let mut rows: Vec<EpisodeMetrics> = if opts.parallel {
        (0..episodes).into_par_iter().map(one).collect::<Result<_, _>>()?
    } else {
        (0..episodes).map(one).collect::<Result<_, _>>()?
    };
    rows.sort_by_key(|r| r.seed);
    let returns: Vec<f64> = rows.iter().map(|r| r.team_return).collect();
    Ok(BatchReport { summary: summarize(&returns), rows })
}

pub const CSV_HEADER: [&str; 8] = [
    "scenario",
    "seed",
    "team_return",
    "reaches",
    "retrieves",
    "collision_steps",
    "oob_steps",
    "wall_time_s",
];

/// Writes metric rows. Wall time is written as 0 unless `timing` is set, so
/// identical invocations produce identical bytes.
pub fn write_csv<W: Write>(rows: &[EpisodeMetrics], out: W, timing: bool) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        let wall = if timing { format!("{:.6}", r.wall_time_s) } else { "0".to_string() };
        w.write_record([
            r.scenario.clone(),
            r.seed.to_string(),
            r.team_return.to_string(),
            r.reaches.to_string(),
            r.retrieves.to_string(),
            r.collision_steps.to_string(),
            r.oob_steps.to_string(),
            wall,
        ])?;
    }
    w.flush()?;
    Ok(())
}
