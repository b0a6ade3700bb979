use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid data: {0}")]
    Data(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error(
        "privacy budget exhausted by `{mechanism}`: requested (rho={rho_requested}, delta={delta_requested}), \
         remaining (rho={rho_remaining}, delta={delta_remaining})"
    )]
    BudgetExhausted {
        mechanism: String,
        rho_requested: f64,
        delta_requested: f64,
        rho_remaining: f64,
        delta_remaining: f64,
    },

    #[error("leave-one-out replicates were not computed")]
    MissingLeaveOneOut,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
