//! World snapshot shared by sensing, dynamics orchestration and policies.

use serde::{Deserialize, Serialize};

use crate::dynamics::{Action, AgentType, ObserverState, ProvisionerState, QuadcopterState};
use crate::geometry::Vec2;
use crate::map::ScenarioMap;
use crate::scenario::ScenarioConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AgentState {
    Quad(QuadcopterState),
    Observer(ObserverState),
    Provisioner(ProvisionerState),
}

impl AgentState {
    pub fn agent_type(&self) -> AgentType {
        match self {
            AgentState::Quad(_) => AgentType::Quadcopter,
            AgentState::Observer(_) => AgentType::Observer,
            AgentState::Provisioner(_) => AgentType::Provisioner,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetPhase {
    Field,
    /// Held by the quadcopter at this agent index.
    Carried(usize),
    Retrieved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetState {
    /// Spawn sequence number within the episode.
    pub id: u64,
    pub pos: Vec2,
    pub heading: f64,
    pub phase: TargetPhase,
}

/// Broadcast target report from an observer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommMessage {
    pub target_pos: Vec2,
    /// World steps since emission, saturating at 255.
    pub age: u8,
}

impl CommMessage {
    pub fn is_fresh(&self) -> bool {
        self.age < u8::MAX
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub scenario: ScenarioConfig,
    pub map: ScenarioMap,
    /// Canonical order: quadcopters, observers, provisioners.
    pub agents: Vec<AgentState>,
    /// Active targets in spawn order.
    pub targets: Vec<TargetState>,
    /// Latest message held by each agent (only quadcopters receive).
    pub inboxes: Vec<Option<CommMessage>>,
    /// Messages emitted this world step, delivered at the next one.
    pub outbox: Vec<CommMessage>,
    /// Most recent raw action per agent.
    pub last_actions: Vec<Option<Action>>,
    pub next_target_id: u64,
}

impl World {
    pub fn agent_type(&self, index: usize) -> AgentType {
        self.agents[index].agent_type()
    }

    pub fn agent_id(&self, index: usize) -> String {
        agent_id(&self.scenario, index)
    }

    pub fn agent_pos(&self, index: usize) -> Vec2 {
        match &self.agents[index] {
            AgentState::Quad(q) => q.pos,
            AgentState::Observer(o) => o.pos,
            AgentState::Provisioner(p) => {
                p.position(self.map.roads.as_ref().expect("provisioner without roads"))
            }
        }
    }

    pub fn quad(&self, index: usize) -> Option<&QuadcopterState> {
        match &self.agents[index] {
            AgentState::Quad(q) => Some(q),
            _ => None,
        }
    }

    /// Positions of provisioners that are currently stopped.
    pub fn stopped_provisioners(&self) -> Vec<Vec2> {
        let roads = match self.map.roads.as_ref() {
            Some(r) => r,
            None => return Vec::new(),
        };
        self.agents
            .iter()
            .filter_map(|a| match a {
                AgentState::Provisioner(p) if !p.moving => Some(p.position(roads)),
                _ => None,
            })
            .collect()
    }
}

/// `quad_0`, `obs_1`, ... for the agent at canonical `index`.
pub fn agent_id(scenario: &ScenarioConfig, index: usize) -> String {
    let (t, k) = agent_type_at(scenario, index);
    format!("{}_{k}", t.id_prefix())
}

/// Type and within-type ordinal of the agent at canonical `index`.
pub fn agent_type_at(scenario: &ScenarioConfig, index: usize) -> (AgentType, usize) {
    if index < scenario.n_quad {
        (AgentType::Quadcopter, index)
    } else if index < scenario.n_quad + scenario.n_obs {
        (AgentType::Observer, index - scenario.n_quad)
    } else {
        (AgentType::Provisioner, index - scenario.n_quad - scenario.n_obs)
    }
}

pub fn agent_index(scenario: &ScenarioConfig, id: &str) -> Option<usize> {
    (0..scenario.n_agents()).find(|&i| agent_id(scenario, i) == id)
}
