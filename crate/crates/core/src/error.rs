use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("episode already ended; reset before stepping")]
    SteppedAfterEnd,
}

/// An action that cannot be decoded for the acting agent. The environment
/// substitutes a no-op and flags the step's info.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("bad action: {0}")]
pub struct BadAction(pub String);
