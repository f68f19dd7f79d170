use thiserror::Error;

pub type Result<T, E = DaqcError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum DaqcError {
    #[error("invalid local dimension {0}: qudits need d >= 2")]
    InvalidDimension(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("{what} needs dimension {size}, above the cap of {cap}")]
    SizeCap { what: &'static str, size: usize, cap: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("source Hamiltonian does not couple site pairs {0:?}")]
    Incompatible(Vec<(usize, usize)>),

    #[error("problem term {0} has no matching source term, its target ratio is undefined")]
    MissingSourceTerm(String),

    #[error("no nonnegative schedule exists within word set `{policy}`")]
    Infeasible { policy: String },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
