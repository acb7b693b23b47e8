use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible assignment: {0}")]
    InfeasibleAssignment(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "bandwidth violation in round {round}: message of {bits} bits exceeds B={budget} ({fields})"
    )]
    BandwidthViolation {
        round: u64,
        bits: u64,
        budget: u64,
        fields: String,
    },

    #[error("internal invariant violated in round {round}: {detail}")]
    InternalInvariant { round: u64, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
