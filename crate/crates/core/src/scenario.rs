//! The fixed scenario registry.

use serde::{Deserialize, Serialize};

use crate::error::EnvError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Challenge {
    SimpleFleet,
    Fleet,
    ComplexFleet,
}

impl Challenge {
    pub fn has_base(self) -> bool {
        !matches!(self, Challenge::SimpleFleet)
    }

    pub fn has_obstacles(self) -> bool {
        !matches!(self, Challenge::SimpleFleet)
    }

    pub fn has_roads(self) -> bool {
        matches!(self, Challenge::ComplexFleet)
    }

    /// Battery drain and recharge are simulated.
    pub fn has_energy(self) -> bool {
        !matches!(self, Challenge::SimpleFleet)
    }

    pub fn horizon(self) -> u64 {
        match self {
            Challenge::SimpleFleet => 2000,
            Challenge::Fleet => 3000,
            Challenge::ComplexFleet => 4000,
        }
    }

    pub fn obstacle_count(self) -> usize {
        match self {
            Challenge::SimpleFleet => 0,
            Challenge::Fleet => 8,
            Challenge::ComplexFleet => 15,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Challenge::SimpleFleet => "simple_fleet",
            Challenge::Fleet => "fleet",
            Challenge::ComplexFleet => "complex_fleet",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub id: String,
    pub challenge: Challenge,
    pub n_quad: usize,
    pub n_obs: usize,
    pub n_prov: usize,
    pub horizon: u64,
    pub target_count: usize,
}

impl ScenarioConfig {
    fn new(challenge: Challenge, n_quad: usize, n_obs: usize, n_prov: usize) -> Self {
        let code = if n_prov > 0 {
            format!("{n_quad}q{n_obs}o{n_prov}p")
        } else {
            format!("{n_quad}q{n_obs}o")
        };
        let target_count = match challenge {
            Challenge::SimpleFleet => 1,
            _ => n_quad,
        };
        Self {
            id: format!("{}_{code}", challenge.name()),
            challenge,
            n_quad,
            n_obs,
            n_prov,
            horizon: challenge.horizon(),
            target_count,
        }
    }

    pub fn n_agents(&self) -> usize {
        self.n_quad + self.n_obs + self.n_prov
    }
}

const REGISTRY: [(Challenge, usize, usize, usize); 11] = [
    (Challenge::SimpleFleet, 1, 1, 0),
    (Challenge::SimpleFleet, 3, 1, 0),
    (Challenge::SimpleFleet, 5, 2, 0),
    (Challenge::Fleet, 3, 1, 0),
    (Challenge::Fleet, 10, 3, 0),
    (Challenge::Fleet, 20, 5, 0),
    (Challenge::ComplexFleet, 3, 1, 1),
    (Challenge::ComplexFleet, 5, 2, 1),
    (Challenge::ComplexFleet, 5, 1, 2),
    (Challenge::ComplexFleet, 10, 2, 2),
    (Challenge::ComplexFleet, 20, 3, 5),
];

pub fn scenario_registry() -> Vec<ScenarioConfig> {
    REGISTRY
        .iter()
        .map(|&(c, q, o, p)| ScenarioConfig::new(c, q, o, p))
        .collect()
}

pub fn lookup_scenario(id: &str) -> Result<ScenarioConfig, EnvError> {
    scenario_registry()
        .into_iter()
        .find(|s| s.id == id)
        .ok_or_else(|| EnvError::UnknownScenario(id.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_ids_and_counts() {
        let ids: Vec<String> = scenario_registry().into_iter().map(|s| s.id).collect();
        assert_eq!(
            ids,
            [
                "simple_fleet_1q1o",
                "simple_fleet_3q1o",
                "simple_fleet_5q2o",
                "fleet_3q1o",
                "fleet_10q3o",
                "fleet_20q5o",
                "complex_fleet_3q1o1p",
                "complex_fleet_5q2o1p",
                "complex_fleet_5q1o2p",
                "complex_fleet_10q2o2p",
                "complex_fleet_20q3o5p",
            ]
        );
        let s = lookup_scenario("simple_fleet_1q1o").unwrap();
        assert_eq!((s.n_quad, s.n_obs, s.n_prov, s.target_count), (1, 1, 0, 1));
        let c = lookup_scenario("complex_fleet_20q3o5p").unwrap();
        assert_eq!((c.n_quad, c.n_obs, c.n_prov, c.horizon), (20, 3, 5, 4000));
        assert_eq!(lookup_scenario("fleet_10q3o").unwrap().target_count, 10);
        assert!(matches!(lookup_scenario("fleet_2q2o"), Err(EnvError::UnknownScenario(_))));
    }
}
