//! Deterministic 2D simulator for cooperative heterogeneous fleets:
//! quadcopters, observers and road-bound provisioners searching for moving
//! targets under partial observability.
//!
//! The environment follows the agent-environment cycle: agents act one at a
//! time in a fixed order and the world advances once per full cycle. See
//! [`env::EnvState`] for the entry point.

pub mod adapters;
pub mod baselines;
pub mod dynamics;
pub mod env;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod map;
pub mod rng;
pub mod scenario;
pub mod sensing;
pub mod world;

pub use dynamics::{Action, ActionMode, ActionSpec, AgentType};
pub use env::{EnvState, StepOutcome};
pub use error::{BadAction, EnvError};
pub use geometry::Vec2;
pub use rng::RngStream;
pub use scenario::{scenario_registry, Challenge, ScenarioConfig};

/// Version string reported in replay headers and the server handshake.
pub const ENGINE_VERSION: &str = concat!("hemac-core/", env!("CARGO_PKG_VERSION"));
