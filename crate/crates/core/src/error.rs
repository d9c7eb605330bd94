use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("index {index} out of range for carrier of size {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("undefined integrand at support pair ({i}, {j})")]
    UndefinedIntegrand { i: usize, j: usize },

    #[error("integral is undefined: both +inf and -inf contributions")]
    UndefinedSum,

    #[error("lattice budget exceeded: {clauses} clauses > {budget}")]
    LatticeBudgetExceeded { clauses: usize, budget: usize },

    #[error("invalid radius: {0}")]
    InvalidRadius(String),

    #[error("annulus ratio must satisfy 0 < alpha < 1, got {0}")]
    InvalidAlpha(String),

    #[error("expected an open-ball generator")]
    NotOpenBall,

    #[error("invalid scale schedule: {0}")]
    InvalidSchedule(String),

    #[error("x outside mu-support at all scales")]
    OutsideSupport,

    #[error("cover budget exhausted before any cover was found")]
    CoverBudgetExhausted,

    #[error("integrand takes negative values; call integrability_report first")]
    NeedsIntegrabilityCheck,

    #[error("integrand is not integrable")]
    NotIntegrable,

    #[error("disintegration inconsistent: {0}")]
    DisintegrationInconsistent(String),

    #[error("function takes a negative value {value} at support pair ({i}, {j})")]
    NegativeFunction { i: usize, j: usize, value: f64 },

    #[error("transport instance is infeasible: {0}")]
    Infeasible(String),

    #[error("prices are not competitive at ({i}, {j}): phi - psi = {lhs} > c = {cost}")]
    NotCompetitive { i: usize, j: usize, lhs: f64, cost: f64 },

    #[error("invalid cost: {0}")]
    InvalidCost(String),

    #[error("io error")]
    Io(#[from] std::io::Error),

    #[error("json error")]
    Json(#[from] serde_json::Error),

    #[error("csv error")]
    Csv(#[from] csv::Error),
}
