use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("inadmissible weight: {0}")]
    InadmissibleWeight(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge for moment index {k}: {detail}")]
    Quadrature { k: f64, detail: String },

    #[error("kernel truncation inadequate: {0}; increase kmax")]
    Range(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("eigen-solver failure: {0}")]
    Eigen(String),

    #[error("config error at {field}: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
