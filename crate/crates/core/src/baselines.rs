//! Rule-based baselines (one rule per agent type) and a uniform random
//! policy. Heuristics read privileged structured state rather than the flat
//! observation vectors.

use serde::{Deserialize, Serialize};

use crate::dynamics::{Action, ActionMode, ActionSpec, AgentType, ControlInput, ObserverState, ProvisionerState, QuadcopterState};
use crate::env::EnvState;
use crate::geometry::{wrap_angle, Aabb, Vec2};
use crate::map::{RoadGraph, ScenarioMap};
use crate::rng::RngStream;
use crate::scenario::Challenge;
use crate::sensing::{sense, Detection, DetectionKind};
use crate::world::{AgentState, CommMessage};

pub const APF_ATTRACTION_GAIN: f64 = 1.0;
pub const APF_REPULSION_GAIN: f64 = 200.0;
pub const APF_INFLUENCE_DISTANCE: f64 = 30.0;
pub const APF_DISTANCE_FLOOR: f64 = 0.5;

pub const LOW_BATTERY: f64 = 30.0;
pub const PATROL_RADIUS: f64 = 350.0;
pub const PATROL_BAND: f64 = 50.0;
pub const PATROL_HEADING_GAIN: f64 = 3.0;
/// Provisioners stop for low-battery quadcopters within this distance.
pub const ASSIST_RADIUS: f64 = 15.0;

/// Salt mixed into the episode seed for the policy-owned stream.
const POLICY_SEED_SALT: u64 = 0x5EED_0FA1_1CE5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyId {
    Heuristic,
    Random,
}

impl std::str::FromStr for PolicyId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "heuristic" => Ok(PolicyId::Heuristic),
            "random" => Ok(PolicyId::Random),
            other => Err(format!("unknown policy `{other}` (expected heuristic or random)")),
        }
    }
}

impl std::fmt::Display for PolicyId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PolicyId::Heuristic => "heuristic",
            PolicyId::Random => "random",
        })
    }
}

/// Artificial potential field: unit attraction toward `goal` plus
/// inverse-square repulsion from every obstacle closer than the influence
/// distance.
pub fn apf_force(pos: Vec2, goal: Vec2, obstacles: &[Aabb]) -> Vec2 {
    let to_goal = goal - pos;
    let dist = to_goal.norm();
    let mut force = if dist < 1e-6 {
        Vec2::ZERO
    } else {
        to_goal * (APF_ATTRACTION_GAIN / dist)
    };
    for b in obstacles {
        let cp = b.closest_point(pos);
        let away = pos - cp;
        let raw = away.norm();
        if raw >= APF_INFLUENCE_DISTANCE || raw == 0.0 {
            continue;
        }
        let d = raw.max(APF_DISTANCE_FLOOR);
        let magnitude = APF_REPULSION_GAIN * (1.0 / d - 1.0 / APF_INFLUENCE_DISTANCE) / (d * d);
        force += away * (magnitude / raw);
    }
    force
}

/// What a quadcopter heuristic may look at.
#[derive(Debug, Clone, Copy)]
pub struct QuadView<'a> {
    pub state: &'a QuadcopterState,
    pub message: Option<CommMessage>,
    pub detections: &'a [Detection],
    pub challenge: Challenge,
}

fn nearest_of(view: &QuadView<'_>, kind: DetectionKind, meta: u8) -> Option<Vec2> {
    view.detections
        .iter()
        .find(|d| d.kind == kind && d.meta == meta)
        .map(|d| view.state.pos + d.rel)
}

/// Recharge point: nearest detected provisioner, else the base.
fn service_point(view: &QuadView<'_>, map: &ScenarioMap) -> Option<Vec2> {
    nearest_of(view, DetectionKind::Agent, AgentType::Provisioner.code()).or(map.base.map(|b| b.center))
}

pub fn quadcopter_goal(view: &QuadView<'_>, map: &ScenarioMap) -> Option<Vec2> {
    if view.challenge.has_energy() && view.state.battery < LOW_BATTERY {
        return service_point(view, map);
    }
    if view.challenge == Challenge::ComplexFleet && view.state.carrying {
        return service_point(view, map);
    }
    nearest_of(view, DetectionKind::Target, 0)
        .or_else(|| view.message.filter(CommMessage::is_fresh).map(|m| m.target_pos))
}

/// Velocity command toward the current goal with obstacle repulsion.
pub fn quadcopter_heuristic(view: &QuadView<'_>, map: &ScenarioMap) -> ControlInput {
    match quadcopter_goal(view, map) {
        Some(goal) => ControlInput::Quad(apf_force(view.state.pos, goal, &map.obstacles).clamp_to_unit_disc()),
        None => ControlInput::Quad(Vec2::ZERO),
    }
}

/// Counter-clockwise patrol of a circle around the arena center.
pub fn observer_heuristic(state: &ObserverState, map: &ScenarioMap) -> ControlInput {
    let center = map.arena.center();
    let radial = state.pos - center;
    let r = radial.norm();
    let desired = if (r - PATROL_RADIUS).abs() <= PATROL_BAND {
        wrap_angle(radial.bearing() + std::f64::consts::FRAC_PI_2)
    } else if r > PATROL_RADIUS {
        (-radial).bearing()
    } else {
        radial.bearing()
    };
    let steer = (PATROL_HEADING_GAIN * wrap_angle(desired - state.heading)).clamp(-1.0, 1.0);
    ControlInput::Observer { steer }
}

/// Stops for a nearby low-battery quadcopter; otherwise drives with a fresh
/// random branch chosen once per edge.
///
/// `nearest_quad` is the distance and battery of the nearest detected
/// quadcopter.
pub fn provisioner_heuristic(
    state: &ProvisionerState,
    roads: &RoadGraph,
    nearest_quad: Option<(f64, f64)>,
    rng: &mut RngStream,
) -> ControlInput {
    if let Some((dist, battery)) = nearest_quad {
        if dist <= ASSIST_RADIUS && battery < LOW_BATTERY {
            return ControlInput::Provisioner { throttle: 0.0, branch: None };
        }
    }
    let branch = match state.pending_branch {
        Some(_) => None,
        None => {
            let degree = roads.degree(state.node_ahead(roads)).max(1);
            Some(rng.below(degree as u64) as u8)
        }
    };
    ControlInput::Provisioner { throttle: 1.0, branch }
}

pub fn random_policy(spec: &ActionSpec, mode: ActionMode, rng: &mut RngStream) -> Action {
    match mode {
        ActionMode::Discrete => Action::Discrete(rng.below(spec.discrete_cardinality as u64) as i64),
        ActionMode::Continuous => Action::Continuous(
            spec.continuous_bounds.iter().map(|&(lo, hi)| rng.uniform_range(lo, hi)).collect(),
        ),
    }
}

/// Raw action reproducing a heuristic control exactly.
pub fn control_to_action(ctrl: &ControlInput) -> Action {
    match *ctrl {
        ControlInput::Quad(v) => Action::Continuous(vec![v.x, v.y]),
        ControlInput::Observer { steer } => Action::Continuous(vec![steer]),
        ControlInput::Provisioner { throttle, branch } => {
            if throttle <= 0.0 {
                Action::Discrete(0)
            } else {
                match branch {
                    Some(b) => Action::Discrete(2 + b as i64),
                    None => Action::Discrete(1),
                }
            }
        }
    }
}

/// Something that picks the cursor agent's raw action.
pub trait Policy {
    fn act(&mut self, env: &EnvState, agent: usize) -> Action;
}

pub struct HeuristicPolicy {
    rng: RngStream,
}

impl HeuristicPolicy {
    pub fn new(episode_seed: u64) -> Self {
        Self { rng: RngStream::seed(episode_seed ^ POLICY_SEED_SALT) }
    }

    pub fn control(&mut self, env: &EnvState, agent: usize) -> ControlInput {
        let world = &env.world;
        let detections = sense(world, agent);
        match &world.agents[agent] {
            AgentState::Quad(q) => {
                let view = QuadView {
                    state: q,
                    message: world.inboxes[agent],
                    detections: &detections,
                    challenge: world.scenario.challenge,
                };
                quadcopter_heuristic(&view, &world.map)
            }
            AgentState::Observer(o) => observer_heuristic(o, &world.map),
            AgentState::Provisioner(p) => {
                let roads = world.map.roads.as_ref().expect("provisioner without roads");
                let nearest_quad = detections
                    .iter()
                    .find(|d| d.kind == DetectionKind::Agent && d.meta == AgentType::Quadcopter.code())
                    .and_then(|d| world.quad(d.index).map(|q| (d.rel.norm(), q.battery)));
                provisioner_heuristic(p, roads, nearest_quad, &mut self.rng)
            }
        }
    }
}

impl Policy for HeuristicPolicy {
    fn act(&mut self, env: &EnvState, agent: usize) -> Action {
        control_to_action(&self.control(env, agent))
    }
}

pub struct RandomPolicy {
    rng: RngStream,
    mode: ActionMode,
}

impl RandomPolicy {
    pub fn new(episode_seed: u64, mode: ActionMode) -> Self {
        Self { rng: RngStream::seed(episode_seed ^ POLICY_SEED_SALT), mode }
    }
}

impl Policy for RandomPolicy {
    fn act(&mut self, env: &EnvState, agent: usize) -> Action {
        random_policy(&ActionSpec::for_type(env.world.agent_type(agent)), self.mode, &mut self.rng)
    }
}

pub fn make_policy(id: PolicyId, episode_seed: u64, mode: ActionMode) -> Box<dyn Policy + Send> {
    match id {
        PolicyId::Heuristic => Box::new(HeuristicPolicy::new(episode_seed)),
        PolicyId::Random => Box::new(RandomPolicy::new(episode_seed, mode)),
    }
}
