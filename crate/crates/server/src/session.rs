//! Per-connection request handling.

use hemac_core::adapters::{pad_observation, unified_to_native, UnifiedSpaces};
use hemac_core::env::agent_metadata;
use hemac_core::sensing::scenario_unified_spaces;
use hemac_core::scenario::lookup_scenario;
use hemac_core::{Action, EnvError, EnvState, ENGINE_VERSION};
use serde::Deserialize;
use serde_json::{json, Map, Value};

pub const PROTOCOL_VERSION: u32 = 1;

/// What the connection loop should do after answering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Close,
}

#[derive(Debug)]
struct Reject {
    code: &'static str,
    message: String,
}

fn reject(code: &'static str, message: impl Into<String>) -> Reject {
    Reject { code, message: message.into() }
}

impl From<EnvError> for Reject {
    fn from(e: EnvError) -> Self {
        let code = match e {
            EnvError::UnknownScenario(_) => "unknown_scenario",
            EnvError::SteppedAfterEnd => "episode_over",
        };
        reject(code, e.to_string())
    }
}

pub fn error_response(code: &str, message: &str) -> Value {
    json!({ "ok": false, "error": code, "message": message })
}

#[derive(Deserialize)]
struct HelloArgs {
    #[serde(default)]
    padded: Option<bool>,
}

#[derive(Deserialize)]
struct ResetArgs {
    scenario: String,
    #[serde(default)]
    seed: u64,
}

#[derive(Deserialize)]
struct StepArgs {
    agent: String,
    action: Action,
}

#[derive(Deserialize)]
struct AgentArg {
    #[serde(default)]
    agent: Option<String>,
}

#[derive(Deserialize)]
struct SpecArgs {
    #[serde(default)]
    scenario: Option<String>,
}

fn args<T: for<'de> Deserialize<'de>>(req: &Value) -> Result<T, Reject> {
    serde_json::from_value(req.clone()).map_err(|e| reject("bad_request", e.to_string()))
}

struct Episode {
    env: EnvState,
    unified: UnifiedSpaces,
}

/// One client's state: at most one live episode and the padding choice.
pub struct Session {
    padded: bool,
    episode: Option<Episode>,
}

impl Session {
    pub fn new(padded: bool) -> Self {
        Self { padded, episode: None }
    }

    pub fn padded(&self) -> bool {
        self.padded
    }

    /// Answers one decoded request object.
    pub fn handle(&mut self, req: &Value) -> (Value, Flow) {
        let Some(op) = req.get("op").and_then(Value::as_str) else {
            return (error_response("bad_request", "missing string field `op`"), Flow::Continue);
        };
        let result = match op {
            "hello" => self.hello(req),
            "reset" => self.reset(req),
            "step" => self.step(req),
            "observe" => self.observe(req),
            "state" => self.state(),
            "spec" => self.spec(req),
            "close" => return (json!({ "ok": true }), Flow::Close),
            other => Err(reject("unknown_op", format!("unknown op `{other}`"))),
        };
        match result {
            Ok(Value::Object(mut body)) => {
                body.insert("ok".into(), Value::Bool(true));
                (Value::Object(body), Flow::Continue)
            }
            Ok(other) => (other, Flow::Continue),
            Err(r) => (error_response(r.code, &r.message), Flow::Continue),
        }
    }

    fn live(&self) -> Result<&Episode, Reject> {
        self.episode.as_ref().ok_or_else(|| reject("no_episode", "reset an episode first"))
    }

    fn obs_for(&self, ep: &Episode, agent: usize) -> Vec<f64> {
        let obs = ep.env.observe(agent);
        if self.padded {
            pad_observation(&obs, &ep.unified)
        } else {
            obs
        }
    }

    fn hello(&mut self, req: &Value) -> Result<Value, Reject> {
        let a: HelloArgs = args(req)?;
        if let Some(p) = a.padded {
            self.padded = p;
        }
        Ok(json!({ "protocol": PROTOCOL_VERSION, "engine": ENGINE_VERSION, "padded": self.padded }))
    }

    fn reset(&mut self, req: &Value) -> Result<Value, Reject> {
        let a: ResetArgs = args(req)?;
        let env = EnvState::reset(&a.scenario, a.seed)?;
        let unified = scenario_unified_spaces(env.scenario());
        let ep = Episode { env, unified };
        let body = json!({
            "agents": ep.env.agent_ids(),
            "current": ep.env.current_agent_id(),
            "obs": self.obs_for(&ep, ep.env.current_agent()),
        });
        self.episode = Some(ep);
        Ok(body)
    }

    fn step(&mut self, req: &Value) -> Result<Value, Reject> {
        let a: StepArgs = args(req)?;
        let padded = self.padded;
        let ep = self.episode.as_mut().ok_or_else(|| reject("no_episode", "reset an episode first"))?;
        if ep.env.is_done() {
            return Err(reject("episode_over", "episode already truncated"));
        }
        let expected = ep.env.current_agent_id();
        if a.agent != expected {
            return Err(reject("wrong_agent", format!("it is {expected}'s turn, not {}", a.agent)));
        }
        let agent = ep.env.current_agent();
        let action = if padded {
            let spec = hemac_core::ActionSpec::for_type(ep.env.world.agent_type(agent));
            unified_to_native(&spec, &ep.unified, &a.action)
        } else {
            a.action
        };
        let outcome = ep.env.step(&action)?;
        let ids = ep.env.agent_ids();
        let rewards: Map<String, Value> =
            ids.iter().cloned().zip(outcome.rewards.iter().map(|&r| json!(r))).collect();
        let done = ep.env.is_done();
        let ep = self.live()?;
        let (next, obs) = if done {
            (Value::Null, Value::Null)
        } else {
            let next = ep.env.current_agent();
            (json!(ids[next]), json!(self.obs_for(ep, next)))
        };
        Ok(json!({
            "reward": outcome.rewards[agent],
            "rewards": rewards,
            "team_reward": outcome.team_reward,
            "terminated": outcome.terminated,
            "truncated": outcome.truncated,
            "next_agent": next,
            "obs": obs,
            "world_step": ep.env.world_step,
            "team_return": ep.env.cumulative_return,
            "info": outcome.info,
        }))
    }

    fn observe(&self, req: &Value) -> Result<Value, Reject> {
        let a: AgentArg = args(req)?;
        let ep = self.live()?;
        let agent = match a.agent {
            Some(id) => ep
                .env
                .agent_index(&id)
                .ok_or_else(|| reject("unknown_agent", format!("no agent `{id}` in this episode")))?,
            None => ep.env.current_agent(),
        };
        Ok(json!({ "agent": ep.env.world.agent_id(agent), "obs": self.obs_for(ep, agent) }))
    }

    fn state(&self) -> Result<Value, Reject> {
        let g = self.live()?.env.global_state();
        Ok(json!({ "layout": g.layout, "state": g.data }))
    }

    fn spec(&self, req: &Value) -> Result<Value, Reject> {
        let a: SpecArgs = args(req)?;
        let scenario = match (a.scenario, &self.episode) {
            (Some(id), _) => lookup_scenario(&id)?,
            (None, Some(ep)) => ep.env.scenario().clone(),
            (None, None) => return Err(reject("no_episode", "name a scenario or reset first")),
        };
        let mut body = json!({
            "scenario": scenario.id,
            "horizon": scenario.horizon,
            "agents": agent_metadata(&scenario),
            "padded": self.padded,
        });
        if self.padded {
            body["unified"] = json!(scenario_unified_spaces(&scenario));
        }
        Ok(body)
    }
}
