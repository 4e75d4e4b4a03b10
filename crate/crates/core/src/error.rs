use std::fmt;

use thiserror::Error;

/// Structural property checked on a circuit document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Property {
    References,
    Arity,
    Acyclic,
    Reachable,
    Normalized,
    Smooth,
    Decomposable,
}

impl Property {
    pub const ALL: [Property; 7] = [
        Property::References,
        Property::Arity,
        Property::Acyclic,
        Property::Reachable,
        Property::Normalized,
        Property::Smooth,
        Property::Decomposable,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::References => "references",
            Property::Arity => "arity",
            Property::Acyclic => "acyclic",
            Property::Reachable => "reachable",
            Property::Normalized => "normalized",
            Property::Smooth => "smooth",
            Property::Decomposable => "decomposable",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("{property} violated at node {node}: {detail}")]
    Validation {
        node: i64,
        property: Property,
        detail: String,
    },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("numeric overflow during linear-space evaluation")]
    NumericOverflow,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("circuit value is not positive; the evidence has probability zero")]
    NonpositiveCircuitValue,

    #[error("variable `{0}` is assigned by both evidence and query")]
    OverlappingAssignments(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("query has {m} variables, brute force is limited to {max}")]
    QueryTooLarge { m: usize, max: usize },

    #[error("evidence has probability zero")]
    ZeroEvidenceProbability,

    #[error("sampling assigned variable {var} twice")]
    ConflictingLeafAssignment { var: usize },

    #[error("invalid input: {0}")]
    InvalidSpec(String),

    #[error("forward cache does not match the current model parameters")]
    StaleCache,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("reports do not cover the same methods")]
    MethodSetMismatch,

    #[error("division by zero")]
    DivisionByZero,

    #[error("degenerate partition: {0}")]
    DegeneratePartition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
