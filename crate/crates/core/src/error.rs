use thiserror::Error;

/// Errors produced by the game engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument fell outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid user distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid mediator: {0}")]
    InvalidMediator(String),

    #[error("invalid strategy profile: {0}")]
    InvalidProfile(String),

    /// A grid enumeration would visit more profiles than allowed.
    #[error("enumeration budget exceeded: {required} profiles required, limit is {limit}")]
    BudgetExceeded { required: u128, limit: u128 },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
