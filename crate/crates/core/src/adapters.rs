//! Homogenization for learners that need one observation and action shape
//! across heterogeneous agents: zero-padded observations and a unified
//! discrete/continuous action space with per-agent validity masks.

use serde::{Deserialize, Serialize};

use crate::dynamics::{Action, ActionSpec, AgentType};
use crate::sensing::observation_len;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnifiedSpaces {
    pub obs_dim: usize,
    pub discrete_cardinality: usize,
    pub continuous_dims: usize,
    /// One mask per agent over the unified discrete indices.
    pub action_masks: Vec<Vec<bool>>,
}

impl UnifiedSpaces {
    pub fn mask(&self, agent: usize) -> &[bool] {
        &self.action_masks[agent]
    }
}

/// Unified spaces for agents with the given specs, in agent order.
pub fn unify_discrete(specs: &[ActionSpec]) -> UnifiedSpaces {
    assert!(!specs.is_empty(), "at least one action spec is required");
    let discrete_cardinality = specs.iter().map(|s| s.discrete_cardinality).max().unwrap_or(0);
    let continuous_dims = specs.iter().map(|s| s.continuous_dims).max().unwrap_or(0);
    let obs_dim = specs.iter().map(|s| observation_len(s.agent_type)).max().unwrap_or(0);
    let action_masks = specs
        .iter()
        .map(|s| (0..discrete_cardinality).map(|i| i < s.discrete_cardinality).collect())
        .collect();
    UnifiedSpaces { obs_dim, discrete_cardinality, continuous_dims, action_masks }
}

pub fn unify_types(types: &[AgentType]) -> UnifiedSpaces {
    let specs: Vec<ActionSpec> = types.iter().map(|&t| ActionSpec::for_type(t)).collect();
    unify_discrete(&specs)
}

/// Copies the native entries and zero-fills up to `unified.obs_dim`.
pub fn pad_observation(obs: &[f64], unified: &UnifiedSpaces) -> Vec<f64> {
    let mut out = vec![0.0; unified.obs_dim.max(obs.len())];
    out[..obs.len()].copy_from_slice(obs);
    out
}

/// Maps a unified-space action onto the native action of `spec`.
///
/// Masked-invalid discrete indices (valid in the unified space but beyond
/// the native cardinality) become [`Action::Discrete`] of the native no-op
/// so they never raise a bad-action flag. Indices outside the unified space
/// pass through unchanged and are rejected by the environment. Continuous
/// vectors are truncated to the native dimensionality.
pub fn unified_to_native(spec: &ActionSpec, unified: &UnifiedSpaces, action: &Action) -> Action {
    match action {
        Action::Discrete(i) => {
            let native = spec.discrete_cardinality as i64;
            if *i >= native && *i < unified.discrete_cardinality as i64 {
                Action::Discrete(native_noop_index(spec.agent_type))
            } else {
                Action::Discrete(*i)
            }
        }
        Action::Continuous(raw) => {
            if raw.len() == unified.continuous_dims {
                Action::Continuous(raw[..spec.continuous_dims].to_vec())
            } else {
                Action::Continuous(raw.clone())
            }
        }
    }
}

/// Native action re-expressed in the unified space.
pub fn native_to_unified(spec: &ActionSpec, unified: &UnifiedSpaces, action: &Action) -> Action {
    match action {
        Action::Discrete(i) => Action::Discrete(*i),
        Action::Continuous(raw) => {
            let mut out = vec![0.0; unified.continuous_dims.max(spec.continuous_dims)];
            let n = raw.len().min(out.len());
            out[..n].copy_from_slice(&raw[..n]);
            Action::Continuous(out)
        }
    }
}

/// Discrete index of the hover / fly-straight / stop control.
pub fn native_noop_index(agent_type: AgentType) -> i64 {
    match agent_type {
        AgentType::Quadcopter => 0,
        AgentType::Observer => 1,
        AgentType::Provisioner => 0,
    }
}

/// Argmax over the first `discrete_cardinality` entries; ties go to the
/// lowest index.
pub fn embed_discrete_in_continuous(spec: &ActionSpec, raw: &[f64]) -> usize {
    let n = spec.discrete_cardinality.min(raw.len());
    let mut best = 0;
    for i in 1..n {
        if raw[i] > raw[best] {
            best = i;
        }
    }
    best
}

/// Fixed-size encoding of a last action: one-hot over the unified discrete
/// indices followed by the unified continuous values.
pub fn encode_action(action: Option<&Action>, unified: &UnifiedSpaces) -> Vec<f64> {
    let mut out = vec![0.0; unified.discrete_cardinality + unified.continuous_dims];
    match action {
        Some(Action::Discrete(i)) if *i >= 0 && (*i as usize) < unified.discrete_cardinality => {
            out[*i as usize] = 1.0;
        }
        Some(Action::Continuous(raw)) => {
            for (slot, v) in out[unified.discrete_cardinality..].iter_mut().zip(raw) {
                *slot = if v.is_finite() { v.clamp(-1.0, 1.0) } else { 0.0 };
            }
        }
        _ => {}
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{decode_action, ControlInput};
    use proptest::prelude::*;

    #[test]
    fn unify_examples() {
        let u = unify_types(&[AgentType::Quadcopter, AgentType::Observer]);
        assert_eq!((u.obs_dim, u.discrete_cardinality, u.continuous_dims), (31, 9, 2));
        assert_eq!(u.mask(1), &[true, true, true, false, false, false, false, false, false]);
        assert!(u.mask(0).iter().all(|&m| m));

        let single = unify_types(&[AgentType::Observer, AgentType::Observer]);
        assert_eq!(single.discrete_cardinality, 3);
        assert!(single.action_masks.iter().flatten().all(|&m| m));
    }

    #[test]
    fn masked_invalid_is_noop() {
        let u = unify_types(&[AgentType::Quadcopter, AgentType::Observer]);
        let spec = ActionSpec::for_type(AgentType::Observer);
        let native = unified_to_native(&spec, &u, &Action::Discrete(7));
        assert_eq!(decode_action(&spec, &native).unwrap(), ControlInput::Observer { steer: 0.0 });
        // outside the unified space is still a bad action
        let bad = unified_to_native(&spec, &u, &Action::Discrete(9));
        assert!(decode_action(&spec, &bad).is_err());
    }

    #[test]
    fn padding_examples() {
        let u = unify_types(&[AgentType::Quadcopter, AgentType::Observer]);
        let obs: Vec<f64> = (0..26).map(|i| i as f64 / 30.0).collect();
        let padded = pad_observation(&obs, &u);
        assert_eq!(padded.len(), 31);
        assert_eq!(&padded[..26], &obs[..]);
        assert!(padded[26..].iter().all(|&v| v == 0.0));
        let quad = vec![0.5; 31];
        assert_eq!(pad_observation(&quad, &u), quad);
        assert!(pad_observation(&[0.0; 29], &u).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn argmax_embedding() {
        let s = ActionSpec::for_type(AgentType::Observer);
        assert_eq!(embed_discrete_in_continuous(&s, &[0.0, 0.0, 1.0]), 2);
        assert_eq!(embed_discrete_in_continuous(&s, &[0.4, 0.4, 0.4]), 0);
        assert_eq!(embed_discrete_in_continuous(&s, &[0.1, 0.9, 0.3]), 1);
        // entries beyond the native cardinality are ignored
        assert_eq!(embed_discrete_in_continuous(&s, &[0.1, 0.2, 0.3, 0.9]), 2);
    }

    #[test]
    fn unified_round_trip_every_native_action() {
        let types = [AgentType::Quadcopter, AgentType::Observer, AgentType::Provisioner];
        let u = unify_types(&types);
        let mut n = 0;
        for t in types {
            let spec = ActionSpec::for_type(t);
            for i in 0..spec.discrete_cardinality as i64 {
                let native = Action::Discrete(i);
                let back = unified_to_native(&spec, &u, &native_to_unified(&spec, &u, &native));
                assert_eq!(back, native);
                n += 1;
            }
        }
        assert_eq!(n, 18);
    }

    #[test]
    fn encode_last_action() {
        let u = unify_types(&[AgentType::Quadcopter, AgentType::Observer]);
        assert!(encode_action(None, &u).iter().all(|&v| v == 0.0));
        let e = encode_action(Some(&Action::Discrete(3)), &u);
        assert_eq!(e.len(), 11);
        assert_eq!(e[3], 1.0);
        assert_eq!(e.iter().sum::<f64>(), 1.0);
        let c = encode_action(Some(&Action::Continuous(vec![0.25])), &u);
        assert_eq!(&c[9..], &[0.25, 0.0]);
    }

    proptest! {
        #[test]
        fn padding_preserves_prefix(obs in proptest::collection::vec(-1.0..1.0f64, 0..31)) {
            let u = unify_types(&[AgentType::Quadcopter, AgentType::Provisioner]);
            let p = pad_observation(&obs, &u);
            prop_assert_eq!(p.len(), 31);
            prop_assert_eq!(&p[..obs.len()], &obs[..]);
            prop_assert!(p[obs.len()..].iter().all(|&v| v == 0.0));
        }

        #[test]
        fn continuous_truncation_matches_native(a in -1.0..1.0f64, b in -1.0..1.0f64) {
            let u = unify_types(&[AgentType::Quadcopter, AgentType::Observer]);
            let spec = ActionSpec::for_type(AgentType::Observer);
            let native = unified_to_native(&spec, &u, &Action::Continuous(vec![a, b]));
            prop_assert_eq!(native, Action::Continuous(vec![a]));
        }
    }
}
