use thiserror::Error;

use crate::model::FittedLogit;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("information matrix X'WX is singular at the rank tolerance")]
    SingularInformation,

    #[error("IRLS did not converge after {} iterations (last step {:e})", .0.iterations, .0.final_step)]
    NotConverged(Box<FittedLogit>),

    #[error("estimator {0} needs a linear restriction")]
    MissingRestriction(String),

    #[error("restriction Gram matrix H C^-1 H' is singular")]
    SingularRestrictionGram,

    #[error("all diagonal terms of T'AT vanish")]
    DegenerateTerms,

    #[error("projected coefficient vector degenerated after {0} draws")]
    DegenerateProjection(usize),

    #[error("every replication failed for {0}")]
    AllReplicationsFailed(String),

    #[error("row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("row {row}: response must be 0 or 1, got {value:?}")]
    NonBinaryResponse { row: usize, value: String },

    #[error("column {0} is constant")]
    ConstantColumn(String),

    #[error("record format: {0}")]
    Record(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
