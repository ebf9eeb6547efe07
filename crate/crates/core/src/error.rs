use thiserror::Error;

/// Errors raised by the library. Every variant is a domain error: the caller
/// supplied something outside an operation's precondition.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("agent count {0} outside 1..={max}", max = crate::game::MAX_AGENTS)]
    AgentCount(usize),

    #[error("coalition mask {mask} out of range for {agents} agents")]
    MaskOutOfRange { mask: u32, agents: usize },

    #[error("coalition is empty")]
    EmptyCoalition,

    #[error("coalitions overlap on agents mask {shared}")]
    Overlap { shared: u32 },

    #[error("structure is not exhaustive, missing agents mask {missing}")]
    NonExhaustive { missing: u32 },

    #[error("structure built for {found} agents, game has {expected}")]
    AgentMismatch { expected: usize, found: usize },

    #[error("value table length {found}, expected {expected}")]
    TableLength { expected: usize, found: usize },

    #[error("value for mask {mask} is not finite")]
    NonFinite { mask: u32 },

    #[error("value for mask {mask} is negative ({value}); shift the table first")]
    Negative { mask: u32, value: f64 },

    #[error("level {level} outside 1..={agents}")]
    LevelOutOfRange { level: usize, agents: usize },

    #[error("a singleton coalition cannot be split")]
    SingletonSplit,

    #[error("the grand coalition structure has no mergers")]
    NoMergers,

    #[error("{what} refused for {agents} agents (limit {limit})")]
    Refused { what: &'static str, agents: usize, limit: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
