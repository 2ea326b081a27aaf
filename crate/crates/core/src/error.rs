use thiserror::Error;

/// Errors surfaced by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no pairs within max_lag")]
    NoPairs,

    #[error("variogram fit did not converge after {iterations} iterations (best range {best_range}, sill {best_sill})")]
    FitNotConverged {
        iterations: usize,
        best_range: f64,
        best_sill: f64,
    },

    #[error("cholesky factorization failed even with jitter ceiling {jitter_ceiling:e}")]
    CholeskyFailed { jitter_ceiling: f64 },

    #[error("circulant embedding is not positive semi-definite (min eigenvalue {min_eigenvalue:e}, max {max_eigenvalue:e})")]
    EmbeddingNotPsd {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    #[error("spectral simulation requires a regular grid")]
    NotAGrid,

    #[error("numerical instability: KKT residual {residual:e} after {iterations} iterations")]
    NumericalInstability {
        alpha: Vec<f64>,
        residual: f64,
        iterations: usize,
    },

    #[error("fold {fold}: empty {set} set")]
    EmptyFold { fold: usize, set: &'static str },

    #[error("single-fold partition")]
    SingleFold,

    #[error("model used before training")]
    NotTrained,

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("no data rows")]
    NoDataRows,

    #[error("class `{0}` absent after filtering")]
    ClassAbsent(String),

    #[error("feature `{0}` has zero variance")]
    ZeroVariance(String),

    #[error("domain split leaves the {0} side empty")]
    EmptyDomain(&'static str),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
