use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid system configuration: {0}")]
    InvalidConfig(String),

    #[error("multiplicity must be at least 1")]
    ZeroMultiplicity,

    #[error("multiplicity {m} exceeds the maximum useful multiplicity {max}")]
    MultiplicityTooLarge { m: u32, max: u32 },

    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid demand vector: {0}")]
    InvalidDemand(String),

    #[error("channel draw for block {block} stayed rank deficient after {attempts} attempts")]
    RankDeficient { block: usize, attempts: usize },

    #[error("linear program is infeasible")]
    LpInfeasible,

    #[error("linear program is unbounded")]
    LpUnbounded,

    #[error("oracle instance too large: {0}")]
    OversizedInstance(String),

    #[error("malformed scheme document: {0}")]
    Document(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
