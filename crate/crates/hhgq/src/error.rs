use thiserror::Error;

/// Errors surfaced by the numerical kernels and the CLI front end.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain an operation is defined on.
    #[error("domain error in {op}: {reason}")]
    Domain { op: &'static str, reason: String },

    /// The derivative order of the ladder functions is limited to 3.
    #[error("unsupported ladder order mu = {mu} (only mu <= 3 is available)")]
    UnsupportedOrder { mu: u32 },

    /// A truncated series did not reach the requested tail bound.
    #[error("series truncation did not converge: tail bound {tail:.3e} after {terms} terms")]
    Truncation { tail: f64, terms: usize },

    /// The analytic Bessel sum of a harmonic crosses zero, so the
    /// amplitude coefficient for that harmonic cannot be fixed.
    #[error("renormalization is singular for harmonic {harmonic}: analytic amplitude sum is {value:.3e}")]
    RenormalizationSingular { harmonic: u32, value: f64 },

    /// A moment set violates an invariant required by an observable.
    #[error("inconsistent field moments: {0}")]
    InconsistentMoments(String),

    /// Photon statistics are undefined for a field with zero mean photon number.
    #[error("second-order coherence is undefined for <a^dag a> = 0")]
    UndefinedStatistics,

    /// A configuration file could not be parsed or validated.
    #[error("config error at line {line}: {reason}")]
    Config { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(op: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            op,
            reason: reason.into(),
        }
    }

    /// Process exit code for the CLI: 1 config, 2 numerical, 3 reserved for selftest.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Io(_) => 1,
            _ => 2,
        }
    }
}
