use thiserror::Error;

/// Every failure the laboratory can report.
///
/// Variants are grouped by the exit-code class the CLI maps them to:
/// configuration problems (`InvalidInput`, `Parse`, `Schema`) versus
/// numerical failures (everything else).
#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("quadrature did not converge on [{a}, {b}]: estimated error {error:e} after {evaluations} evaluations")]
    Quadrature {
        a: f64,
        b: f64,
        error: f64,
        evaluations: usize,
    },

    #[error("inner maximization failed at xi = {xi}: {reason}")]
    InnerMaximization { xi: f64, reason: String },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("matrix exponential overscaled: norm {norm:e} needs 2^{squarings} squarings")]
    Overscaling { norm: f64, squarings: u32 },

    #[error("ill-conditioned eigenbasis (condition number {0:e})")]
    IllConditioned(f64),

    #[error("matrix dimension {dim} exceeds the cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("Lyapunov solution is not positive definite")]
    Indefinite,

    #[error("semigroup generated by -B is not bounded: {0}")]
    UnboundedSemigroup(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("configuration error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl LabError {
    /// True for errors caused by the caller's configuration or input files
    /// rather than the numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            LabError::InvalidInput(_)
                | LabError::InvalidSpectrum(_)
                | LabError::Schema { .. }
                | LabError::Parse(_)
                | LabError::Json(_)
                | LabError::Io(_)
                | LabError::Csv(_)
        )
    }

    /// Short machine-readable tag used in error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            LabError::InvalidInput(_) => "invalid_input",
            LabError::InvalidSpectrum(_) => "invalid_spectrum",
            LabError::Precondition(_) => "precondition",
            LabError::Quadrature { .. } => "quadrature",
            LabError::InnerMaximization { .. } => "inner_maximization",
            LabError::Singular(_) => "singular",
            LabError::Overscaling { .. } => "overscaling",
            LabError::IllConditioned(_) => "ill_conditioned",
            LabError::DimensionCap { .. } => "dimension_cap",
            LabError::Indefinite => "indefinite",
            LabError::UnboundedSemigroup(_) => "unbounded_semigroup",
            LabError::Fit(_) => "fit",
            LabError::Schema { .. } => "schema",
            LabError::Parse(_) => "parse",
            LabError::Io(_) => "io",
            LabError::Json(_) => "json",
            LabError::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
