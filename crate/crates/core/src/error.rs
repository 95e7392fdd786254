use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("profile is empty: at least one agent is required")]
    EmptyProfile,

    #[error("agent {agent} ranks room {room} more than once")]
    DuplicateEntry { agent: usize, room: usize },

    #[error("expected {expected} entries, found {found} (agent {agent})")]
    WrongLength {
        agent: usize,
        expected: usize,
        found: usize,
    },

    #[error("room id {value} is outside [0, {n})")]
    OutOfRange { value: i64, n: usize },

    #[error("rank {rank} is outside [0, {n}!)")]
    RankOutOfRange { rank: u64, n: usize },

    #[error("not a bijection: room {room} is assigned twice")]
    NotBijection { room: usize },

    #[error("size mismatch: profile has {expected} agents, allocation has {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("n = {n} exceeds the supported maximum of {max} for this operation")]
    InstanceTooLarge { n: usize, max: usize },

    #[error("fixed room set disagrees with square tags at position {position}")]
    InconsistentFixedSet { position: usize },

    #[error("start state violates the circle condition")]
    InvalidStartState,

    #[error("non-terminal inverse state has no circled room")]
    StuckState,

    #[error("allocation is not Pareto optimal (TTC from it trades)")]
    NotParetoOptimal,

    #[error("allocation already removed from scan set: equivalence classes overlap")]
    ClassOverlap,

    #[error("preimage of a TTC outcome misses the endowment that produced it")]
    IncompletePreimage,

    #[error("frontier carries no equivalence classes")]
    MissingClasses,

    #[error("frontier is empty")]
    EmptyFrontier,

    #[error("no records to summarize")]
    EmptyInput,

    #[error("methods disagree on the frontier for n = {n}, instance {instance}")]
    FrontierMismatch { n: usize, instance: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
