//! Agent archetypes, action decoding and per-agent transition functions.
//!
//! All transitions are pure: the same `(state, control, map)` always gives
//! the same successor. Randomness lives only in map generation and target
//! motion.

use serde::{Deserialize, Serialize};

use crate::error::BadAction;
use crate::geometry::{wrap_angle, Aabb, Vec2};
use crate::map::{RoadGraph, ScenarioMap};
use crate::scenario::Challenge;

/// World step duration in seconds.
pub const DT: f64 = 0.1;

pub const QUAD_MAX_SPEED: f64 = 10.0;
pub const QUAD_RADIUS: f64 = 1.5;
pub const CONTACT_BISECTION_STEPS: usize = 10;
pub const BATTERY_MAX: f64 = 100.0;
pub const BATTERY_REST_DRAIN: f64 = 0.02;
pub const BATTERY_MOTION_DRAIN: f64 = 0.03;
pub const BATTERY_RECHARGE: f64 = 2.0;
/// Quadcopters within this distance of a stopped provisioner recharge.
pub const PROVISIONER_RECHARGE_RADIUS: f64 = 10.0;

pub const OBSERVER_SPEED: f64 = 25.0;
pub const OBSERVER_TURN_RATE: f64 = 0.15;
pub const OUT_OF_BOUNDS_MARGIN: f64 = 50.0;

pub const PROVISIONER_SPEED: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentType {
    Quadcopter,
    Observer,
    Provisioner,
}

impl AgentType {
    pub const ALL: [AgentType; 3] = [AgentType::Quadcopter, AgentType::Observer, AgentType::Provisioner];

    pub fn id_prefix(self) -> &'static str {
        match self {
            AgentType::Quadcopter => "quad",
            AgentType::Observer => "obs",
            AgentType::Provisioner => "prov",
        }
    }

    /// Non-zero type code used in detections.
    pub fn code(self) -> u8 {
        match self {
            AgentType::Quadcopter => 1,
            AgentType::Observer => 2,
            AgentType::Provisioner => 3,
        }
    }

    pub fn index(self) -> usize {
        self.code() as usize - 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSpec {
    pub agent_type: AgentType,
    pub discrete_cardinality: usize,
    pub continuous_dims: usize,
    pub continuous_bounds: Vec<(f64, f64)>,
}

impl ActionSpec {
    pub fn for_type(agent_type: AgentType) -> Self {
        let (discrete_cardinality, continuous_dims) = match agent_type {
            AgentType::Quadcopter => (9, 2),
            AgentType::Observer => (3, 1),
            AgentType::Provisioner => (6, 2),
        };
        Self {
            agent_type,
            discrete_cardinality,
            continuous_dims,
            continuous_bounds: vec![(-1.0, 1.0); continuous_dims],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionMode {
    Discrete,
    Continuous,
}

/// A raw action as submitted by a learner, in either mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "snake_case")]
pub enum Action {
    Discrete(i64),
    Continuous(Vec<f64>),
}

impl Action {
    pub fn mode(&self) -> ActionMode {
        match self {
            Action::Discrete(_) => ActionMode::Discrete,
            Action::Continuous(_) => ActionMode::Continuous,
        }
    }
}

/// Normalized control decoded from a raw action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ControlInput {
    /// Velocity command inside the unit disc.
    Quad(Vec2),
    Observer { steer: f64 },
    Provisioner { throttle: f64, branch: Option<u8> },
}

impl ControlInput {
    /// The do-nothing control for each type: hover, fly straight, stop.
    pub fn noop(agent_type: AgentType) -> Self {
        match agent_type {
            AgentType::Quadcopter => ControlInput::Quad(Vec2::ZERO),
            AgentType::Observer => ControlInput::Observer { steer: 0.0 },
            AgentType::Provisioner => ControlInput::Provisioner { throttle: 0.0, branch: None },
        }
    }
}

const DIAG: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// No-op then compass directions N, NE, E, SE, S, SW, W, NW.
const QUAD_DISCRETE: [Vec2; 9] = [
    Vec2::new(0.0, 0.0),
    Vec2::new(0.0, 1.0),
    Vec2::new(DIAG, DIAG),
    Vec2::new(1.0, 0.0),
    Vec2::new(DIAG, -DIAG),
    Vec2::new(0.0, -1.0),
    Vec2::new(-DIAG, -DIAG),
    Vec2::new(-1.0, 0.0),
    Vec2::new(-DIAG, DIAG),
];

fn decode_discrete(agent_type: AgentType, index: usize) -> ControlInput {
    match agent_type {
        AgentType::Quadcopter => ControlInput::Quad(QUAD_DISCRETE[index]),
        AgentType::Observer => ControlInput::Observer { steer: index as f64 - 1.0 },
        AgentType::Provisioner => match index {
            0 => ControlInput::Provisioner { throttle: 0.0, branch: None },
            1 => ControlInput::Provisioner { throttle: 1.0, branch: None },
            b => ControlInput::Provisioner { throttle: 1.0, branch: Some((b - 2) as u8) },
        },
    }
}

pub fn decode_action(spec: &ActionSpec, action: &Action) -> Result<ControlInput, BadAction> {
    match action {
        Action::Discrete(i) => {
            if *i < 0 || *i as usize >= spec.discrete_cardinality {
                return Err(BadAction(format!(
                    "discrete index {i} outside 0..{} for {:?}",
                    spec.discrete_cardinality, spec.agent_type
                )));
            }
            Ok(decode_discrete(spec.agent_type, *i as usize))
        }
        Action::Continuous(raw) => {
            if raw.len() != spec.continuous_dims {
                return Err(BadAction(format!(
                    "expected {} continuous values for {:?}, got {}",
                    spec.continuous_dims,
                    spec.agent_type,
                    raw.len()
                )));
            }
            if raw.iter().any(|v| !v.is_finite()) {
                return Err(BadAction("non-finite continuous value".into()));
            }
            let c: Vec<f64> = raw
                .iter()
                .zip(&spec.continuous_bounds)
                .map(|(v, &(lo, hi))| v.clamp(lo, hi))
                .collect();
            Ok(match spec.agent_type {
                AgentType::Quadcopter => ControlInput::Quad(Vec2::new(c[0], c[1]).clamp_to_unit_disc()),
                AgentType::Observer => ControlInput::Observer { steer: c[0] },
                AgentType::Provisioner => {
                    let throttle = (c[0] + 1.0) / 2.0;
                    let branch = (((c[1] + 1.0) / 2.0 * 4.0).floor() as i64).clamp(0, 3) as u8;
                    ControlInput::Provisioner { throttle, branch: Some(branch) }
                }
            })
        }
    }
}

/// Inverse of discrete decoding; `None` when `ctrl` is not one of the
/// discrete controls of `agent_type`.
pub fn encode_discrete(agent_type: AgentType, ctrl: &ControlInput) -> Option<usize> {
    let n = ActionSpec::for_type(agent_type).discrete_cardinality;
    (0..n).find(|&i| decode_discrete(agent_type, i) == *ctrl)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DynamicsEvent {
    Collision,
    OutOfBounds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadcopterState {
    pub pos: Vec2,
    pub vel: Vec2,
    pub battery: f64,
    pub carrying: bool,
    pub disabled: bool,
}

impl QuadcopterState {
    pub fn new(pos: Vec2) -> Self {
        Self { pos, vel: Vec2::ZERO, battery: BATTERY_MAX, carrying: false, disabled: false }
    }
}

fn body_blocked(p: Vec2, obstacles: &[Aabb]) -> bool {
    obstacles.iter().any(|b| b.distance_to_point(p) < QUAD_RADIUS)
}

/// Holonomic move with clip-to-contact against obstacles and battery drain.
///
/// Recharging is resolved separately by [`recharge_quadcopter`] once all
/// agents have moved.
pub fn step_quadcopter(
    state: &QuadcopterState,
    ctrl: Vec2,
    map: &ScenarioMap,
    challenge: Challenge,
) -> (QuadcopterState, Option<DynamicsEvent>) {
    let mut next = state.clone();
    if state.disabled {
        next.vel = Vec2::ZERO;
        return (next, None);
    }
    let ctrl = ctrl.clamp_to_unit_disc();
    let desired = ctrl * QUAD_MAX_SPEED;
    let candidate = map.arena.closest_point(state.pos + desired * DT);

    let mut event = None;
    if body_blocked(candidate, &map.obstacles) {
        // state.pos is free, candidate is blocked: bisect toward the contact.
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..CONTACT_BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if body_blocked(state.pos.lerp(candidate, mid), &map.obstacles) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        next.pos = state.pos.lerp(candidate, lo);
        next.vel = Vec2::ZERO;
        event = Some(DynamicsEvent::Collision);
    } else {
        next.pos = candidate;
        next.vel = (candidate - state.pos) * (1.0 / DT);
    }

    if challenge.has_energy() {
        let drain = BATTERY_REST_DRAIN + BATTERY_MOTION_DRAIN * ctrl.norm();
        next.battery = (next.battery - drain).max(0.0);
        if next.battery <= 0.0 {
            next.battery = 0.0;
            next.disabled = true;
            next.vel = Vec2::ZERO;
        }
    }
    (next, event)
}

/// Adds one recharge increment if the quadcopter is alive and in a zone.
pub fn recharge_quadcopter(state: &mut QuadcopterState, in_zone: bool) {
    if in_zone && !state.disabled {
        state.battery = (state.battery + BATTERY_RECHARGE).min(BATTERY_MAX);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverState {
    pub pos: Vec2,
    pub heading: f64,
}

/// Constant-speed fixed-wing motion; obstacles are ignored.
pub fn step_observer(state: &ObserverState, steer: f64, arena: &Aabb) -> (ObserverState, Option<DynamicsEvent>) {
    let heading = wrap_angle(state.heading + steer.clamp(-1.0, 1.0) * OBSERVER_TURN_RATE);
    let pos = state.pos + Vec2::from_angle(heading) * (OBSERVER_SPEED * DT);
    let event = (!arena.dilate(OUT_OF_BOUNDS_MARGIN).contains(pos)).then_some(DynamicsEvent::OutOfBounds);
    (ObserverState { pos, heading }, event)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvisionerState {
    pub edge: usize,
    /// Fraction along the edge measured from its `a` end.
    pub progress: f64,
    /// +1 travels toward `b`, -1 toward `a`.
    pub direction: i8,
    pub moving: bool,
    pub pending_branch: Option<u8>,
    pub retrieved_count: u32,
}

impl ProvisionerState {
    /// Parked at `node`, facing along its first bearing-sorted edge.
    pub fn at_node(roads: &RoadGraph, node: usize) -> Self {
        let edge = roads.adjacency[node][0];
        let (progress, direction) = if roads.edges[edge].a == node { (0.0, 1) } else { (1.0, -1) };
        Self { edge, progress, direction, moving: false, pending_branch: None, retrieved_count: 0 }
    }

    pub fn position(&self, roads: &RoadGraph) -> Vec2 {
        roads.point_on_edge(self.edge, self.progress)
    }

    /// Node the provisioner is heading toward.
    pub fn node_ahead(&self, roads: &RoadGraph) -> usize {
        let e = &roads.edges[self.edge];
        if self.direction > 0 {
            e.b
        } else {
            e.a
        }
    }

    /// Unit vector of the current direction of travel.
    pub fn travel_direction(&self, roads: &RoadGraph) -> Vec2 {
        let e = &roads.edges[self.edge];
        let d = (roads.nodes[e.b] - roads.nodes[e.a]) * (1.0 / e.length);
        if self.direction > 0 {
            d
        } else {
            -d
        }
    }
}

/// Edge to take on arriving at `node` via `arrival_edge`.
fn choose_next_edge(roads: &RoadGraph, node: usize, arrival_edge: usize, branch: Option<u8>) -> usize {
    let adj = &roads.adjacency[node];
    if let Some(b) = branch {
        return adj[b as usize % adj.len()];
    }
    let prev = roads.other_end(arrival_edge, node);
    let arrival_bearing = (roads.nodes[node] - roads.nodes[prev]).bearing();
    let mut best = adj[0];
    let mut best_diff = f64::INFINITY;
    for &e in adj {
        let diff = wrap_angle(roads.outgoing_bearing(node, e) - arrival_bearing).abs();
        if diff < best_diff || (diff == best_diff && e < best) {
            best = e;
            best_diff = diff;
        }
    }
    best
}

/// Road-constrained motion with branch selection at nodes.
pub fn step_provisioner(state: &ProvisionerState, throttle: f64, branch: Option<u8>, roads: &RoadGraph) -> ProvisionerState {
    let mut next = state.clone();
    let throttle = throttle.clamp(0.0, 1.0);
    if throttle <= 0.0 {
        next.moving = false;
        return next;
    }
    next.moving = true;
    if branch.is_some() {
        next.pending_branch = branch;
    }
    let mut remaining = PROVISIONER_SPEED * DT * throttle;
    // Edges are never zero-length, so this terminates; the bound guards
    // hand-built degenerate graphs.
    for _ in 0..64 {
        let len = roads.edges[next.edge].length;
        let to_node = if next.direction > 0 { 1.0 - next.progress } else { next.progress } * len;
        if remaining < to_node {
            next.progress += next.direction as f64 * remaining / len;
            break;
        }
        remaining -= to_node;
        let node = next.node_ahead(roads);
        let edge = choose_next_edge(roads, node, next.edge, next.pending_branch.take());
        next.edge = edge;
        if roads.edges[edge].a == node {
            next.progress = 0.0;
            next.direction = 1;
        } else {
            next.progress = 1.0;
            next.direction = -1;
        }
        if remaining <= 0.0 {
            break;
        }
    }
    next
}
