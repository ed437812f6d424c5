//! Line-oriented replay logs.
//!
//! Line 1 is a header object, then one record per agent turn, then a footer
//! with the episode total. Every record carries a running SHA-256 digest
//! over the record contents and, at world-step boundaries, a fingerprint of
//! the world state. Verification re-executes the episode and compares
//! rewards, digests and the final return exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::baselines::PolicyId;
use crate::dynamics::{Action, ActionMode};
use crate::env::{EnvState, StepOutcome};
use crate::error::EnvError;
use crate::scenario::lookup_scenario;
use crate::world::AgentState;
use crate::ENGINE_VERSION;

pub const REPLAY_FORMAT_VERSION: u32 = 1;
const REPLAY_FORMAT: &str = "hemac-replay";

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt replay: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Env(#[from] EnvError),
}

fn corrupt(msg: impl Into<String>) -> ReplayError {
    ReplayError::Corrupt(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayHeader {
    pub format: String,
    pub format_version: u32,
    pub scenario: String,
    pub seed: u64,
    pub engine: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayRecord {
    pub cycle: u64,
    pub agent: String,
    #[serde(flatten)]
    pub action: Action,
    /// Reward paid to the acting agent by this turn.
    pub reward: f64,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayFooter {
    pub end: bool,
    pub world_steps: u64,
    pub team_return: f64,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayLog {
    pub header: ReplayHeader,
    pub records: Vec<ReplayRecord>,
    pub footer: ReplayFooter,
}

/// Hash of the dynamic world state: agents, targets and the RNG stream.
pub fn world_fingerprint(env: &EnvState) -> [u8; 32] {
    let mut h = Sha256::new();
    let mut put = |v: f64| h.update(v.to_bits().to_le_bytes());
    for a in &env.world.agents {
        match a {
            AgentState::Quad(q) => {
                put(q.pos.x);
                put(q.pos.y);
                put(q.vel.x);
                put(q.vel.y);
                put(q.battery);
                put(q.carrying as u8 as f64);
                put(q.disabled as u8 as f64);
            }
            AgentState::Observer(o) => {
                put(o.pos.x);
                put(o.pos.y);
                put(o.heading);
            }
            AgentState::Provisioner(p) => {
                put(p.edge as f64);
                put(p.progress);
                put(p.direction as f64);
                put(p.moving as u8 as f64);
            }
        }
    }
    for t in &env.world.targets {
        put(t.id as f64);
        put(t.pos.x);
        put(t.pos.y);
        put(t.heading);
    }
    put(env.cumulative_return);
    for w in env.rng.state() {
        h.update(w.to_le_bytes());
    }
    h.finalize().into()
}

fn chain(prev: &str, cycle: u64, agent: &str, action: &Action, reward: f64, world: Option<[u8; 32]>) -> String {
    let mut h = Sha256::new();
    h.update(prev.as_bytes());
    h.update(cycle.to_le_bytes());
    h.update(agent.as_bytes());
    match action {
        Action::Discrete(i) => {
            h.update([0u8]);
            h.update(i.to_le_bytes());
        }
        Action::Continuous(v) => {
            h.update([1u8]);
            h.update((v.len() as u64).to_le_bytes());
            for x in v {
                h.update(x.to_bits().to_le_bytes());
            }
        }
    }
    h.update(reward.to_bits().to_le_bytes());
    if let Some(fp) = world {
        h.update(fp);
    }
    hex::encode(&h.finalize()[..16])
}

fn footer_digest(prev: &str, world_steps: u64, team_return: f64) -> String {
    let mut h = Sha256::new();
    h.update(prev.as_bytes());
    h.update(world_steps.to_le_bytes());
    h.update(team_return.to_bits().to_le_bytes());
    hex::encode(&h.finalize()[..16])
}

/// Streams records to a file while an episode runs.
pub struct ReplayRecorder {
    out: BufWriter<File>,
    digest: String,
}

impl ReplayRecorder {
    pub fn create(path: &Path, scenario: &str, seed: u64) -> Result<Self, ReplayError> {
        let mut out = BufWriter::new(File::create(path)?);
        let header = ReplayHeader {
            format: REPLAY_FORMAT.to_string(),
            format_version: REPLAY_FORMAT_VERSION,
            scenario: scenario.to_string(),
            seed,
            engine: ENGINE_VERSION.to_string(),
        };
        serde_json::to_writer(&mut out, &header).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
        Ok(Self { out, digest: String::new() })
    }

    /// Appends the turn just taken; `env` is the state after the step.
    pub fn record(
        &mut self,
        env: &EnvState,
        cycle: u64,
        agent: usize,
        action: &Action,
        outcome: &StepOutcome,
    ) -> Result<(), ReplayError> {
        let id = env.world.agent_id(agent);
        let reward = outcome.rewards[agent];
        let fp = outcome.info.world_advanced.then(|| world_fingerprint(env));
        self.digest = chain(&self.digest, cycle, &id, action, reward, fp);
        let rec = ReplayRecord { cycle, agent: id, action: action.clone(), reward, digest: self.digest.clone() };
        serde_json::to_writer(&mut self.out, &rec).map_err(std::io::Error::from)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn finish(mut self, env: &EnvState) -> Result<(), ReplayError> {
        let footer = ReplayFooter {
            end: true,
            world_steps: env.world_step,
            team_return: env.cumulative_return,
            digest: footer_digest(&self.digest, env.world_step, env.cumulative_return),
        };
        serde_json::to_writer(&mut self.out, &footer).map_err(std::io::Error::from)?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        Ok(())
    }
}

/// Plays one episode with `policy` and writes its replay to `path`.
pub fn record_replay(
    scenario: &str,
    policy: PolicyId,
    mode: ActionMode,
    seed: u64,
    path: &Path,
) -> Result<super::EpisodeMetrics, ReplayError> {
    let cfg = lookup_scenario(scenario)?;
    let rec = ReplayRecorder::create(path, scenario, seed)?;
    let opts = super::BatchOptions { mode, ..Default::default() };
    super::run_episode(&cfg, policy, seed, &opts, Some(rec))
}

/// Parses and structurally validates a replay file.
pub fn read_replay(path: &Path) -> Result<ReplayLog, ReplayError> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let first = lines.next().ok_or_else(|| corrupt("empty file"))??;
    let header: ReplayHeader =
        serde_json::from_str(&first).map_err(|e| corrupt(format!("bad header: {e}")))?;
    if header.format != REPLAY_FORMAT || header.format_version != REPLAY_FORMAT_VERSION {
        return Err(corrupt(format!(
            "unsupported format {} v{}",
            header.format, header.format_version
        )));
    }
    if header.engine != ENGINE_VERSION {
        return Err(corrupt(format!("recorded with {}, this is {ENGINE_VERSION}", header.engine)));
    }
    let scenario = lookup_scenario(&header.scenario)?;

    let mut records = Vec::new();
    let mut footer = None;
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if footer.is_some() {
            return Err(corrupt(format!("data after footer at line {}", n + 2)));
        }
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| corrupt(format!("line {}: {e}", n + 2)))?;
        if value.get("end").is_some() {
            footer = Some(
                serde_json::from_value::<ReplayFooter>(value)
                    .map_err(|e| corrupt(format!("bad footer: {e}")))?,
            );
        } else {
            records.push(
                serde_json::from_value::<ReplayRecord>(value)
                    .map_err(|e| corrupt(format!("line {}: {e}", n + 2)))?,
            );
        }
    }
    let footer = footer.ok_or_else(|| corrupt("truncated: missing footer"))?;
    let expected = scenario.horizon as usize * scenario.n_agents();
    if records.len() != expected {
        return Err(corrupt(format!("expected {expected} records, found {}", records.len())));
    }
    Ok(ReplayLog { header, records, footer })
}

/// Re-executes a replay; true iff every reward, digest and the final
/// return match the recorded values exactly.
pub fn replay_verify(path: &Path) -> Result<bool, ReplayError> {
    let log = read_replay(path)?;
    Ok(verify_log(&log)?)
}

pub(crate) fn verify_log(log: &ReplayLog) -> Result<bool, EnvError> {
    let mut env = EnvState::reset(&log.header.scenario, log.header.seed)?;
    let mut digest = String::new();
    for rec in &log.records {
        if env.is_done() || rec.cycle != env.world_step || rec.agent != env.current_agent_id() {
            return Ok(false);
        }
        let agent = env.current_agent();
        let outcome = env.step(&rec.action)?;
        let reward = outcome.rewards[agent];
        if reward.to_bits() != rec.reward.to_bits() {
            return Ok(false);
        }
        let fp = outcome.info.world_advanced.then(|| world_fingerprint(&env));
        digest = chain(&digest, rec.cycle, &rec.agent, &rec.action, reward, fp);
        if digest != rec.digest {
            return Ok(false);
        }
    }
    Ok(env.is_done()
        && log.footer.world_steps == env.world_step
        && log.footer.team_return.to_bits() == env.cumulative_return.to_bits()
        && log.footer.digest == footer_digest(&digest, env.world_step, env.cumulative_return))
}
