use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates a type invariant or an operation precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An energy lies outside the domain of the requested function.
    #[error("energy {energy} outside domain: {reason}")]
    Domain { energy: f64, reason: &'static str },

    #[error("operation needs {expected} emitters, got {got}")]
    UnsupportedEmitterCount { expected: &'static str, got: usize },

    #[error("root polishing did not converge in {iterations} steps; last bracket [{lo}, {hi}]")]
    RootNotConverged { lo: f64, hi: f64, iterations: usize },

    #[error("degenerate pole at E = {energy}: |dF/dE| = {derivative:e}")]
    DegeneratePole { energy: f64, derivative: f64 },

    #[error("no eigenvector within {tolerance:e} of E = {energy}")]
    ProfileNotFound { energy: f64, tolerance: f64 },

    /// The light cone reaches the chain boundary before the last requested time.
    #[error(
        "light cone reaches the chain boundary before t = {t_max}; \
         need at least {min_cavities} cavities with emitters centred"
    )]
    ChainTooShort { t_max: f64, min_cavities: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("LAPACK unavailable: {0}")]
    LapackUnavailable(String),

    /// The eigensolver returned vectors that do not satisfy `H v = E v`.
    #[error("eigendecomposition failed its residual check: max |Hv - Ev| = {residual:e}")]
    InaccurateEigensystem { residual: f64 },

    #[error("LAPACK {routine} failed with info = {info}")]
    Lapack { routine: &'static str, info: i32 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for failures of a numerical procedure rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RootNotConverged { .. }
                | Error::DegeneratePole { .. }
                | Error::ProfileNotFound { .. }
                | Error::Lapack { .. }
                | Error::LapackUnavailable(_)
                | Error::InaccurateEigensystem { .. }
        )
    }
}
