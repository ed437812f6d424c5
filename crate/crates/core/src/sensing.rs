//! Field-of-view sensing, per-type observation vectors, the building-gated
//! observer channel and the centralized global state.
//!
//! Observation layouts (all entries clamped to [-1, 1], absent slots zero):
//!
//! * quadcopter, 31: pos/1000 (2), vel/v_max (2), battery/100, carrying,
//!   3 target slots (rel/range x2, valid), 2 obstacle slots, 2 agent slots,
//!   comm (rel/1000 x2, age/255, valid)
//! * observer, 26: pos/1000 (2), cos/sin heading, gate open flag,
//!   5 target slots, 2 agent slots
//! * provisioner, 29: pos/1000 (2), travel direction (2), progress,
//!   node-ahead rel/1000 (2), node-ahead degree/4, 4 outgoing bearing unit
//!   vectors (8), 2 target slots, base rel/1000 (2), moving flag,
//!   nearest quadcopter (rel/1000 x2, battery/100, valid)

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::adapters::{encode_action, unify_types, UnifiedSpaces};
use crate::dynamics::{AgentType, QUAD_MAX_SPEED};
use crate::geometry::{in_sector, SectorFov, Vec2};
use crate::map::{ARENA_SIZE, MAX_ROAD_EDGES, MAX_ROAD_NODES};
use crate::scenario::{Challenge, ScenarioConfig};
use crate::world::{AgentState, CommMessage, TargetPhase, World};

pub const QUAD_FOV: SectorFov = SectorFov::circle(60.0);
pub const OBSERVER_FOV: SectorFov = SectorFov { range: 250.0, half_angle: PI / 6.0 };
pub const PROVISIONER_FOV: SectorFov = SectorFov::circle(80.0);
/// Observers transmit only within this distance of a building.
pub const COMM_GATE_RANGE: f64 = 150.0;

pub const QUAD_OBS_LEN: usize = 31;
pub const OBSERVER_OBS_LEN: usize = 26;
pub const PROVISIONER_OBS_LEN: usize = 29;

pub fn observation_len(agent_type: AgentType) -> usize {
    match agent_type {
        AgentType::Quadcopter => QUAD_OBS_LEN,
        AgentType::Observer => OBSERVER_OBS_LEN,
        AgentType::Provisioner => PROVISIONER_OBS_LEN,
    }
}

pub fn fov_for(agent_type: AgentType) -> SectorFov {
    match agent_type {
        AgentType::Quadcopter => QUAD_FOV,
        AgentType::Observer => OBSERVER_FOV,
        AgentType::Provisioner => PROVISIONER_FOV,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DetectionKind {
    Target,
    Obstacle,
    Agent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub kind: DetectionKind,
    /// Offset from the sensing agent.
    pub rel: Vec2,
    /// Agent type code for agent detections, otherwise 0.
    pub meta: u8,
    /// Index of the detected target, obstacle or agent in the world.
    pub index: usize,
}

fn sensor_heading(world: &World, agent: usize) -> f64 {
    match &world.agents[agent] {
        AgentState::Observer(o) => o.heading,
        _ => 0.0,
    }
}

/// Everything inside the agent's field of view, nearest first. Obstacles
/// are detected through their closest point and never occlude.
pub fn sense(world: &World, agent: usize) -> Vec<Detection> {
    let origin = world.agent_pos(agent);
    let heading = sensor_heading(world, agent);
    let fov = fov_for(world.agent_type(agent));
    let mut out = Vec::new();

    for (i, t) in world.targets.iter().enumerate() {
        if t.phase == TargetPhase::Field && in_sector(origin, heading, fov, t.pos) {
            out.push(Detection { kind: DetectionKind::Target, rel: t.pos - origin, meta: 0, index: i });
        }
    }
    for (i, b) in world.map.obstacles.iter().enumerate() {
        let cp = b.closest_point(origin);
        if in_sector(origin, heading, fov, cp) {
            out.push(Detection { kind: DetectionKind::Obstacle, rel: cp - origin, meta: 0, index: i });
        }
    }
    for j in 0..world.agents.len() {
        if j == agent {
            continue;
        }
        let p = world.agent_pos(j);
        if in_sector(origin, heading, fov, p) {
            out.push(Detection {
                kind: DetectionKind::Agent,
                rel: p - origin,
                meta: world.agent_type(j).code(),
                index: j,
            });
        }
    }
    out.sort_by(|a, b| a.rel.norm().total_cmp(&b.rel.norm()));
    out
}

/// Whether an observer at `pos` may transmit.
pub fn comm_gate_open(world: &World, pos: Vec2) -> bool {
    match world.scenario.challenge {
        Challenge::SimpleFleet => true,
        _ => world.map.nearest_obstacle_distance(pos) <= COMM_GATE_RANGE,
    }
}

/// Messages an observer emits this step: one per detected target, only
/// while the gate is open.
pub fn comm_transmit(world: &World, observer: usize, detections: &[Detection]) -> Vec<CommMessage> {
    let pos = world.agent_pos(observer);
    if !comm_gate_open(world, pos) {
        return Vec::new();
    }
    detections
        .iter()
        .filter(|d| d.kind == DetectionKind::Target)
        .map(|d| CommMessage { target_pos: pos + d.rel, age: 0 })
        .collect()
}

struct Writer {
    buf: Vec<f64>,
}

impl Writer {
    fn with_capacity(n: usize) -> Self {
        Self { buf: Vec::with_capacity(n) }
    }

    fn push(&mut self, v: f64) {
        self.buf.push(v.clamp(-1.0, 1.0));
    }

    fn push_vec(&mut self, v: Vec2, scale: f64) {
        self.push(v.x / scale);
        self.push(v.y / scale);
    }

    fn push_flag(&mut self, b: bool) {
        self.push(if b { 1.0 } else { 0.0 });
    }

    /// `slots` relative-position slots of `kind`, nearest first.
    fn push_slots(&mut self, detections: &[Detection], kind: DetectionKind, slots: usize, scale: f64) {
        let mut it = detections.iter().filter(|d| d.kind == kind);
        for _ in 0..slots {
            match it.next() {
                Some(d) => {
                    self.push_vec(d.rel, scale);
                    self.push(1.0);
                }
                None => self.buf.extend_from_slice(&[0.0; 3]),
            }
        }
    }

    fn pad(&mut self, n: usize) {
        self.buf.extend(std::iter::repeat_n(0.0, n));
    }
}

pub fn build_observation(world: &World, agent: usize, detections: &[Detection]) -> Vec<f64> {
    let pos = world.agent_pos(agent);
    let agent_type = world.agent_type(agent);
    let mut w = Writer::with_capacity(observation_len(agent_type));
    w.push_vec(pos, ARENA_SIZE);
    match &world.agents[agent] {
        AgentState::Quad(q) => {
            let range = QUAD_FOV.range;
            w.push_vec(q.vel, QUAD_MAX_SPEED);
            w.push(q.battery / 100.0);
            w.push_flag(q.carrying);
            w.push_slots(detections, DetectionKind::Target, 3, range);
            w.push_slots(detections, DetectionKind::Obstacle, 2, range);
            w.push_slots(detections, DetectionKind::Agent, 2, range);
            match world.inboxes[agent].filter(CommMessage::is_fresh) {
                Some(m) => {
                    w.push_vec(m.target_pos - pos, ARENA_SIZE);
                    w.push(m.age as f64 / 255.0);
                    w.push(1.0);
                }
                None => w.pad(4),
            }
        }
        AgentState::Observer(o) => {
            let range = OBSERVER_FOV.range;
            w.push(o.heading.cos());
            w.push(o.heading.sin());
            w.push_flag(comm_gate_open(world, pos));
            w.push_slots(detections, DetectionKind::Target, 5, range);
            w.push_slots(detections, DetectionKind::Agent, 2, range);
        }
        AgentState::Provisioner(p) => {
            let roads = world.map.roads.as_ref().expect("provisioner without roads");
            w.push_vec(p.travel_direction(roads), 1.0);
            w.push(p.progress);
            let ahead = p.node_ahead(roads);
            w.push_vec(roads.nodes[ahead] - pos, ARENA_SIZE);
            w.push(roads.degree(ahead) as f64 / 4.0);
            for k in 0..4 {
                match roads.adjacency[ahead].get(k) {
                    Some(&e) => w.push_vec(Vec2::from_angle(roads.outgoing_bearing(ahead, e)), 1.0),
                    None => w.pad(2),
                }
            }
            w.push_slots(detections, DetectionKind::Target, 2, PROVISIONER_FOV.range);
            match world.map.base {
                Some(b) => w.push_vec(b.center - pos, ARENA_SIZE),
                None => w.pad(2),
            }
            w.push_flag(p.moving);
            let nearest_quad = detections
                .iter()
                .find(|d| d.kind == DetectionKind::Agent && d.meta == AgentType::Quadcopter.code());
            match nearest_quad.and_then(|d| world.quad(d.index).map(|q| (d.rel, q.battery))) {
                Some((rel, battery)) => {
                    w.push_vec(rel, ARENA_SIZE);
                    w.push(battery / 100.0);
                    w.push(1.0);
                }
                None => w.pad(4),
            }
        }
    }
    debug_assert_eq!(w.buf.len(), observation_len(agent_type));
    w.buf
}

/// Section sizes of the flattened global state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalLayout {
    pub n_agents: usize,
    /// pos (2) + type one-hot (3) + encoded last action.
    pub per_agent: usize,
    pub n_targets: usize,
    /// pos (2) + carried flag.
    pub per_target: usize,
    pub max_nodes: usize,
    pub max_edges: usize,
}

impl GlobalLayout {
    pub fn for_scenario(scenario: &ScenarioConfig) -> Self {
        let unified = scenario_unified_spaces(scenario);
        Self {
            n_agents: scenario.n_agents(),
            per_agent: 5 + unified.discrete_cardinality + unified.continuous_dims,
            n_targets: scenario.target_count,
            per_target: 3,
            max_nodes: MAX_ROAD_NODES,
            max_edges: MAX_ROAD_EDGES,
        }
    }

    /// agents | targets | obstacle count | base pos | node xy | node mask |
    /// edge endpoints | edge mask
    pub fn len(&self) -> usize {
        self.n_agents * self.per_agent
            + self.n_targets * self.per_target
            + 1
            + 2
            + self.max_nodes * 3
            + self.max_edges * 3
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalState {
    pub layout: GlobalLayout,
    pub data: Vec<f64>,
}

pub fn scenario_agent_types(scenario: &ScenarioConfig) -> Vec<AgentType> {
    (0..scenario.n_agents())
        .map(|i| crate::world::agent_type_at(scenario, i).0)
        .collect()
}

pub fn scenario_unified_spaces(scenario: &ScenarioConfig) -> UnifiedSpaces {
    unify_types(&scenario_agent_types(scenario))
}

/// Centralized state for training. Positions are absolute (origin at the
/// arena's lower-left corner) scaled by the arena size.
pub fn build_global_state(world: &World) -> GlobalState {
    let layout = GlobalLayout::for_scenario(&world.scenario);
    let unified = scenario_unified_spaces(&world.scenario);
    let mut d = Vec::with_capacity(layout.len());

    for i in 0..world.agents.len() {
        let p = world.agent_pos(i);
        d.push(p.x / ARENA_SIZE);
        d.push(p.y / ARENA_SIZE);
        let mut one_hot = [0.0; 3];
        one_hot[world.agent_type(i).index()] = 1.0;
        d.extend_from_slice(&one_hot);
        d.extend(encode_action(world.last_actions[i].as_ref(), &unified));
    }

    for k in 0..layout.n_targets {
        match world.targets.get(k) {
            Some(t) => {
                let (pos, carried) = match t.phase {
                    TargetPhase::Carried(by) => (world.agent_pos(by), 1.0),
                    _ => (t.pos, 0.0),
                };
                d.extend_from_slice(&[pos.x / ARENA_SIZE, pos.y / ARENA_SIZE, carried]);
            }
            None => d.extend_from_slice(&[0.0; 3]),
        }
    }

    d.push(world.map.obstacles.len() as f64);
    match world.map.base {
        Some(b) => d.extend_from_slice(&[b.center.x / ARENA_SIZE, b.center.y / ARENA_SIZE]),
        None => d.extend_from_slice(&[0.0; 2]),
    }

    let roads = world.map.roads.as_ref();
    let n_nodes = roads.map_or(0, |r| r.nodes.len());
    let n_edges = roads.map_or(0, |r| r.edges.len());
    for k in 0..layout.max_nodes {
        match roads.and_then(|r| r.nodes.get(k)) {
            Some(n) => d.extend_from_slice(&[n.x / ARENA_SIZE, n.y / ARENA_SIZE]),
            None => d.extend_from_slice(&[0.0; 2]),
        }
    }
    d.extend((0..layout.max_nodes).map(|k| if k < n_nodes { 1.0 } else { 0.0 }));
    for k in 0..layout.max_edges {
        match roads.and_then(|r| r.edges.get(k)) {
            Some(e) => d.extend_from_slice(&[e.a as f64, e.b as f64]),
            None => d.extend_from_slice(&[0.0; 2]),
        }
    }
    d.extend((0..layout.max_edges).map(|k| if k < n_edges { 1.0 } else { 0.0 }));

    debug_assert_eq!(d.len(), layout.len());
    GlobalState { layout, data: d }
}
