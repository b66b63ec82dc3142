use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Drive strength outside the regime where the dressed picture applies.
    #[error("invalid regime: {0}")]
    InvalidRegime(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    /// The population ratio defining the inversion exponent is 0/0.
    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("singular refractive index (n = 0): group index undefined")]
    SingularIndex,

    #[error("size error: {0}")]
    Size(String),

    #[error("dimension overflow: Liouvillian would have {rows} rows (limit {limit})")]
    DimensionOverflow { rows: usize, limit: usize },

    /// The Liouvillian null space does not single out one steady state.
    #[error("degenerate steady state: null-space dimension {0}")]
    DegenerateSteadyState(usize),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unknown figure `{0}` (expected one of fig2a, fig2b, fig3a, fig3b, fig3c, fig3d)")]
    UnknownFigure(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
