//! The turn-based environment: reset, per-agent `step` under the
//! agent-environment cycle, target lifecycle, interactions and rewards.
//!
//! Actions are buffered for the whole cycle and applied together when the
//! last agent acts, which advances the world by exactly one step. Rewards of
//! that world step are attached to the final `step` call of the cycle.

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    decode_action, recharge_quadcopter, step_observer, step_provisioner, step_quadcopter, Action,
    ActionSpec, AgentType, ControlInput, DynamicsEvent, ObserverState, ProvisionerState,
    QuadcopterState, PROVISIONER_RECHARGE_RADIUS,
};
use crate::error::EnvError;
use crate::geometry::{wrap_angle, Vec2};
use crate::map::{generate_map, spawn_target, ScenarioMap};
use crate::rng::RngStream;
use crate::scenario::{lookup_scenario, Challenge, ScenarioConfig};
use crate::sensing::{
    build_global_state, build_observation, comm_transmit, observation_len, sense, GlobalState,
};
use crate::world::{agent_index, AgentState, CommMessage, TargetPhase, TargetState, World};

pub const REACH_REWARD: f64 = 10.0;
pub const RETRIEVE_REWARD: f64 = 25.0;
pub const COLLISION_PENALTY: f64 = -20.0;
pub const OUT_OF_BOUNDS_PENALTY: f64 = -20.0;

pub const REACH_RADIUS: f64 = 4.0;
pub const DEPOSIT_RADIUS: f64 = 8.0;
pub const TARGET_SPEED: f64 = 3.0;
pub const TARGET_TURN_JITTER: f64 = 0.3;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeCounters {
    pub reaches: u64,
    pub retrieves: u64,
    pub collision_steps: u64,
    pub oob_steps: u64,
    pub bad_actions: u64,
    /// Target spawns that ran out of rejection attempts.
    pub spawn_fallbacks: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub bad_action: bool,
    pub world_advanced: bool,
    /// Quadcopter indices in contact with an obstacle this world step.
    pub collisions: Vec<usize>,
    /// Observer indices beyond the out-of-bounds margin this world step.
    pub out_of_bounds: Vec<usize>,
    /// Agent index credited with each reach event.
    pub reach_agents: Vec<usize>,
    pub reaches: u32,
    pub retrieves: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    /// Reward per agent for this call; zero except on the cycle's last call.
    pub rewards: Vec<f64>,
    /// Shared reward for this call, counted once.
    pub shared_reward: f64,
    /// Shared reward plus every individual penalty for this call.
    pub team_reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub info: StepInfo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentMeta {
    pub id: String,
    pub agent_type: AgentType,
    pub obs_len: usize,
    pub action_spec: ActionSpec,
}

pub fn agent_metadata(scenario: &ScenarioConfig) -> Vec<AgentMeta> {
    (0..scenario.n_agents())
        .map(|i| {
            let (t, _) = crate::world::agent_type_at(scenario, i);
            AgentMeta {
                id: crate::world::agent_id(scenario, i),
                agent_type: t,
                obs_len: observation_len(t),
                action_spec: ActionSpec::for_type(t),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub seed: u64,
    pub world: World,
    /// Index of the agent whose turn it is.
    pub cursor: usize,
    /// Decoded controls of agents that already acted this cycle.
    pub pending: Vec<Option<ControlInput>>,
    pub world_step: u64,
    pub rng: RngStream,
    pub cumulative_return: f64,
    pub counters: EpisodeCounters,
    pub truncated: bool,
}

fn spawn_field_target(rng: &mut RngStream, map: &ScenarioMap, id: u64, counters: &mut EpisodeCounters) -> TargetState {
    let (pos, accepted) = spawn_target(rng, map);
    if !accepted {
        counters.spawn_fallbacks += 1;
    }
    let heading = wrap_angle(rng.uniform_range(-std::f64::consts::PI, std::f64::consts::PI));
    TargetState { id, pos, heading, phase: TargetPhase::Field }
}

fn target_blocked(p: Vec2, map: &ScenarioMap) -> bool {
    !map.arena.contains(p) || map.obstacles.iter().any(|b| b.contains(p))
}

/// Random-walk step with a given heading perturbation. On hitting a wall
/// or obstacle face, the heading component normal to that face is negated
/// and the move retried once; if still blocked the target stays put.
pub fn advance_target(target: &TargetState, perturbation: f64, map: &ScenarioMap) -> TargetState {
    let mut next = target.clone();
    if target.phase != TargetPhase::Field {
        return next;
    }
    let heading = wrap_angle(target.heading + perturbation);
    let step = TARGET_SPEED * crate::dynamics::DT;
    let mut dir = Vec2::from_angle(heading);
    let candidate = target.pos + dir * step;
    next.heading = heading;
    if !target_blocked(candidate, map) {
        next.pos = candidate;
        return next;
    }

    let arena = &map.arena;
    let mut flip_x = candidate.x < arena.min.x || candidate.x > arena.max.x;
    let mut flip_y = candidate.y < arena.min.y || candidate.y > arena.max.y;
    for b in map.obstacles.iter().filter(|b| b.contains(candidate)) {
        if target.pos.x < b.min.x || target.pos.x > b.max.x {
            flip_x = true;
        } else {
            flip_y = true;
        }
    }
    if flip_x {
        dir.x = -dir.x;
    }
    if flip_y {
        dir.y = -dir.y;
    }
    next.heading = dir.bearing();
    let retry = target.pos + dir * step;
    if !target_blocked(retry, map) {
        next.pos = retry;
    }
    next
}

/// Draws the heading perturbation from `rng` and advances a Field target.
pub fn target_step(target: &TargetState, rng: &mut RngStream, map: &ScenarioMap) -> TargetState {
    let perturbation = rng.uniform_range(-TARGET_TURN_JITTER, TARGET_TURN_JITTER);
    advance_target(target, perturbation, map)
}

/// Per-agent rewards for one world step. The shared part (+10 per reach,
/// +25 per retrieve in Complex Fleet) goes to every agent; collision and
/// out-of-bounds penalties only to the offender.
pub fn compute_rewards(info: &StepInfo, challenge: Challenge, n_agents: usize) -> (Vec<f64>, f64) {
    let retrieves = if challenge == Challenge::ComplexFleet { info.retrieves } else { 0 };
    let shared = REACH_REWARD * info.reaches as f64 + RETRIEVE_REWARD * retrieves as f64;
    let mut rewards = vec![shared; n_agents];
    for &q in &info.collisions {
        rewards[q] += COLLISION_PENALTY;
    }
    for &o in &info.out_of_bounds {
        rewards[o] += OUT_OF_BOUNDS_PENALTY;
    }
    (rewards, shared)
}

impl EnvState {
    pub fn reset(scenario_id: &str, seed: u64) -> Result<Self, EnvError> {
        let scenario = lookup_scenario(scenario_id)?;
        Ok(Self::reset_with(scenario, seed))
    }

    pub fn reset_with(scenario: ScenarioConfig, seed: u64) -> Self {
        let mut rng = RngStream::seed(seed);
        let map = generate_map(&mut rng, &scenario);
        let mut counters = EpisodeCounters::default();

        let mut agents = Vec::with_capacity(scenario.n_agents());
        for _ in 0..scenario.n_quad {
            let pos = match map.base {
                Some(b) => Vec2::new(
                    rng.uniform_range(b.center.x - b.half_extent, b.center.x + b.half_extent),
                    rng.uniform_range(b.center.y - b.half_extent, b.center.y + b.half_extent),
                ),
                None => Vec2::new(
                    rng.uniform_range(map.arena.min.x, map.arena.max.x),
                    rng.uniform_range(map.arena.min.y, map.arena.max.y),
                ),
            };
            agents.push(AgentState::Quad(QuadcopterState::new(pos)));
        }
        for _ in 0..scenario.n_obs {
            let pos = Vec2::new(
                rng.uniform_range(map.arena.min.x, map.arena.max.x),
                rng.uniform_range(map.arena.min.y, map.arena.max.y),
            );
            let heading = wrap_angle(rng.uniform_range(-std::f64::consts::PI, std::f64::consts::PI));
            agents.push(AgentState::Observer(ObserverState { pos, heading }));
        }
        if scenario.n_prov > 0 {
            let roads = map.roads.as_ref().expect("provisioners require a road network");
            let mut used = Vec::with_capacity(scenario.n_prov);
            for _ in 0..scenario.n_prov {
                let node = loop {
                    let n = rng.below(roads.nodes.len() as u64) as usize;
                    if !used.contains(&n) {
                        break n;
                    }
                };
                used.push(node);
                agents.push(AgentState::Provisioner(ProvisionerState::at_node(roads, node)));
            }
        }

        let targets = (0..scenario.target_count as u64)
            .map(|id| spawn_field_target(&mut rng, &map, id, &mut counters))
            .collect();

        let n = scenario.n_agents();
        let mut world = World {
            next_target_id: scenario.target_count as u64,
            scenario,
            map,
            agents,
            targets,
            inboxes: vec![None; n],
            outbox: Vec::new(),
            last_actions: vec![None; n],
        };
        world.outbox = emit_messages(&world);

        Self {
            seed,
            world,
            cursor: 0,
            pending: vec![None; n],
            world_step: 0,
            rng,
            cumulative_return: 0.0,
            counters,
            truncated: false,
        }
    }

    pub fn scenario(&self) -> &ScenarioConfig {
        &self.world.scenario
    }

    pub fn n_agents(&self) -> usize {
        self.world.agents.len()
    }

    pub fn current_agent(&self) -> usize {
        self.cursor
    }

    pub fn current_agent_id(&self) -> String {
        self.world.agent_id(self.cursor)
    }

    pub fn agent_ids(&self) -> Vec<String> {
        (0..self.n_agents()).map(|i| self.world.agent_id(i)).collect()
    }

    pub fn agent_index(&self, id: &str) -> Option<usize> {
        agent_index(&self.world.scenario, id)
    }

    pub fn metadata(&self) -> Vec<AgentMeta> {
        agent_metadata(&self.world.scenario)
    }

    pub fn is_done(&self) -> bool {
        self.truncated
    }

    pub fn observe(&self, agent: usize) -> Vec<f64> {
        build_observation(&self.world, agent, &sense(&self.world, agent))
    }

    pub fn global_state(&self) -> GlobalState {
        build_global_state(&self.world)
    }

    /// Acts for the cursor agent and moves the cursor on.
    pub fn step(&mut self, action: &Action) -> Result<StepOutcome, EnvError> {
        if self.truncated {
            return Err(EnvError::SteppedAfterEnd);
        }
        let agent = self.cursor;
        let agent_type = self.world.agent_type(agent);
        let (ctrl, bad) = match decode_action(&ActionSpec::for_type(agent_type), action) {
            Ok(c) => (c, false),
            Err(_) => (ControlInput::noop(agent_type), true),
        };
        if bad {
            self.counters.bad_actions += 1;
        }
        self.pending[agent] = Some(ctrl);
        self.world.last_actions[agent] = Some(action.clone());

        let mut outcome = if agent + 1 == self.n_agents() {
            self.cursor = 0;
            self.advance_world()
        } else {
            self.cursor += 1;
            StepOutcome {
                rewards: vec![0.0; self.n_agents()],
                shared_reward: 0.0,
                team_reward: 0.0,
                terminated: false,
                truncated: false,
                info: StepInfo::default(),
            }
        };
        outcome.info.bad_action = bad;
        Ok(outcome)
    }

    fn advance_world(&mut self) -> StepOutcome {
        let challenge = self.world.scenario.challenge;
        let controls: Vec<ControlInput> = self
            .pending
            .iter_mut()
            .enumerate()
            .map(|(i, c)| c.take().unwrap_or_else(|| ControlInput::noop(self.world.agent_type(i))))
            .collect();
        let mut info = StepInfo { world_advanced: true, ..StepInfo::default() };

        // (1) agent transitions, all from the pre-step snapshot
        let world = &mut self.world;
        for (i, ctrl) in controls.iter().enumerate() {
            let next = match (&world.agents[i], ctrl) {
                (AgentState::Quad(q), ControlInput::Quad(v)) => {
                    let (n, ev) = step_quadcopter(q, *v, &world.map, challenge);
                    if ev == Some(DynamicsEvent::Collision) {
                        info.collisions.push(i);
                    }
                    AgentState::Quad(n)
                }
                (AgentState::Observer(o), ControlInput::Observer { steer }) => {
                    let (n, ev) = step_observer(o, *steer, &world.map.arena);
                    if ev == Some(DynamicsEvent::OutOfBounds) {
                        info.out_of_bounds.push(i);
                    }
                    AgentState::Observer(n)
                }
                (AgentState::Provisioner(p), ControlInput::Provisioner { throttle, branch }) => {
                    let roads = world.map.roads.as_ref().expect("provisioner without roads");
                    AgentState::Provisioner(step_provisioner(p, *throttle, *branch, roads))
                }
                (state, _) => unreachable!("control does not match agent {:?}", state.agent_type()),
            };
            world.agents[i] = next;
        }
        for t in 0..world.targets.len() {
            if let TargetPhase::Carried(by) = world.targets[t].phase {
                world.targets[t].pos = world.agent_pos(by);
            }
        }

        // (2) target motion
        for t in world.targets.iter_mut() {
            if t.phase == TargetPhase::Field {
                *t = target_step(t, &mut self.rng, &world.map);
            }
        }

        // (3) interactions: reach, deposit, retrieve, recharge
        self.resolve_interactions(&mut info);

        // (4) message delivery and emission
        let world = &mut self.world;
        for m in world.inboxes.iter_mut().flatten() {
            m.age = m.age.saturating_add(1);
        }
        if !world.outbox.is_empty() {
            for i in 0..world.agents.len() {
                if let Some(q) = world.quad(i) {
                    let nearest = world
                        .outbox
                        .iter()
                        .min_by(|a, b| {
                            a.target_pos.distance(q.pos).total_cmp(&b.target_pos.distance(q.pos))
                        })
                        .copied();
                    if let Some(m) = nearest {
                        world.inboxes[i] = Some(CommMessage { age: 1, ..m });
                    }
                }
            }
        }
        world.outbox = emit_messages(world);

        // (5) clock
        self.world_step += 1;
        self.truncated = self.world_step >= self.world.scenario.horizon;

        let (rewards, shared) = compute_rewards(&info, challenge, self.n_agents());
        let team_reward = shared
            + COLLISION_PENALTY * info.collisions.len() as f64
            + OUT_OF_BOUNDS_PENALTY * info.out_of_bounds.len() as f64;
        self.counters.reaches += info.reaches as u64;
        self.counters.retrieves += info.retrieves as u64;
        self.counters.collision_steps += info.collisions.len() as u64;
        self.counters.oob_steps += info.out_of_bounds.len() as u64;
        self.cumulative_return += team_reward;

        StepOutcome {
            rewards,
            shared_reward: shared,
            team_reward,
            terminated: false,
            truncated: self.truncated,
            info,
        }
    }

    fn resolve_interactions(&mut self, info: &mut StepInfo) {
        let challenge = self.world.scenario.challenge;
        let world = &mut self.world;
        let mut consumed = 0usize;

        // reach: only live quadcopters
        for qi in 0..world.agents.len() {
            let (pos, carrying) = match &world.agents[qi] {
                AgentState::Quad(q) if !q.disabled => (q.pos, q.carrying),
                _ => continue,
            };
            match challenge {
                Challenge::SimpleFleet | Challenge::Fleet => {
                    for t in world.targets.iter_mut() {
                        if t.phase == TargetPhase::Field && t.pos.distance(pos) <= REACH_RADIUS {
                            t.phase = TargetPhase::Retrieved;
                            info.reaches += 1;
                            info.reach_agents.push(qi);
                            consumed += 1;
                        }
                    }
                }
                Challenge::ComplexFleet => {
                    if carrying {
                        continue;
                    }
                    let nearest = world
                        .targets
                        .iter()
                        .enumerate()
                        .filter(|(_, t)| t.phase == TargetPhase::Field && t.pos.distance(pos) <= REACH_RADIUS)
                        .min_by(|a, b| a.1.pos.distance(pos).total_cmp(&b.1.pos.distance(pos)))
                        .map(|(k, _)| k);
                    if let Some(k) = nearest {
                        world.targets[k].phase = TargetPhase::Carried(qi);
                        world.targets[k].pos = pos;
                        if let AgentState::Quad(q) = &mut world.agents[qi] {
                            q.carrying = true;
                        }
                        info.reaches += 1;
                        info.reach_agents.push(qi);
                    }
                }
            }
        }

        if challenge == Challenge::ComplexFleet {
            let roads = world.map.roads.as_ref().expect("complex fleet without roads");
            let provisioners: Vec<(usize, Vec2)> = world
                .agents
                .iter()
                .enumerate()
                .filter_map(|(i, a)| match a {
                    AgentState::Provisioner(p) => Some((i, p.position(roads))),
                    _ => None,
                })
                .collect();

            // deposit carried targets at the base or a nearby provisioner
            for k in 0..world.targets.len() {
                let TargetPhase::Carried(by) = world.targets[k].phase else { continue };
                let pos = world.agent_pos(by);
                let at_base = world.map.base.is_some_and(|b| b.contains(pos));
                let receiver = provisioners
                    .iter()
                    .filter(|(_, p)| p.distance(pos) <= DEPOSIT_RADIUS)
                    .min_by(|a, b| a.1.distance(pos).total_cmp(&b.1.distance(pos)))
                    .map(|&(i, _)| i);
                if !at_base && receiver.is_none() {
                    continue;
                }
                world.targets[k].phase = TargetPhase::Retrieved;
                if let AgentState::Quad(q) = &mut world.agents[by] {
                    q.carrying = false;
                }
                if let (false, Some(r)) = (at_base, receiver) {
                    if let AgentState::Provisioner(p) = &mut world.agents[r] {
                        p.retrieved_count += 1;
                    }
                }
                info.retrieves += 1;
                consumed += 1;
            }

            // provisioners pick up Field targets directly: reach and retrieve at once
            for &(pi, ppos) in &provisioners {
                for t in world.targets.iter_mut() {
                    if t.phase == TargetPhase::Field && t.pos.distance(ppos) <= DEPOSIT_RADIUS {
                        t.phase = TargetPhase::Retrieved;
                        info.reaches += 1;
                        info.retrieves += 1;
                        info.reach_agents.push(pi);
                        consumed += 1;
                        if let AgentState::Provisioner(p) = &mut world.agents[pi] {
                            p.retrieved_count += 1;
                        }
                    }
                }
            }
        }

        world.targets.retain(|t| t.phase != TargetPhase::Retrieved);
        for _ in 0..consumed {
            let id = world.next_target_id;
            world.next_target_id += 1;
            let t = spawn_field_target(&mut self.rng, &world.map, id, &mut self.counters);
            world.targets.push(t);
        }

        if challenge.has_energy() {
            let stopped = world.stopped_provisioners();
            let base = world.map.base;
            for a in world.agents.iter_mut() {
                if let AgentState::Quad(q) = a {
                    let in_zone = base.is_some_and(|b| b.contains(q.pos))
                        || stopped.iter().any(|p| p.distance(q.pos) <= PROVISIONER_RECHARGE_RADIUS);
                    recharge_quadcopter(q, in_zone);
                }
            }
        }
    }
}

/// Messages observers emit from the current world.
fn emit_messages(world: &World) -> Vec<CommMessage> {
    let mut out = Vec::new();
    for i in 0..world.agents.len() {
        if world.agent_type(i) == AgentType::Observer {
            out.extend(comm_transmit(world, i, &sense(world, i)));
        }
    }
    out
}

/// Convenience form of reset: state, first agent id and its observation.
pub fn reset(scenario_id: &str, seed: u64) -> Result<(EnvState, String, Vec<f64>), EnvError> {
    let env = EnvState::reset(scenario_id, seed)?;
    let id = env.current_agent_id();
    let obs = env.observe(env.current_agent());
    Ok((env, id, obs))
}
