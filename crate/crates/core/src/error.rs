use thiserror::Error;

/// Errors raised across the toolkit.
///
/// The CLI maps these onto process exit codes: precondition failures exit
/// with 2, cap violations with 3 and exhausted searches with 4.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{0} is not a prime")]
    NotPrime(u64),

    #[error("characteristic {0} is not supported (p must exceed 3)")]
    SmallCharacteristic(u64),

    #[error("extension degree must be at least 1")]
    ZeroDegree,

    #[error("zero has no multiplicative inverse")]
    ZeroInverse,

    #[error("singular curve: 4A^3 + 27B^2 = 0 over F_{p}")]
    SingularCurve { p: u64 },

    #[error("point is not on the curve")]
    PointNotOnCurve,

    #[error("level {n} is divisible by the characteristic {p}")]
    LevelNotCoprime { n: u64, p: u64 },

    #[error("{what} exceeds the configured cap ({limit})")]
    CapExceeded { what: String, limit: String },

    #[error("ambient field of degree {have} does not contain the {level}-torsion (needs a multiple of {need})")]
    AmbientTooSmall {
        have: usize,
        need: usize,
        level: u64,
    },

    #[error("kernel is not stable under Frobenius")]
    NotGaloisStable,

    #[error("curve is supersingular (p divides the trace {trace})")]
    Supersingular { trace: i64 },

    #[error("invalid discriminant {0}")]
    InvalidDiscriminant(i64),

    #[error("ideals belong to different orders ({0} and {1})")]
    MixedOrders(i64, i64),

    #[error("not an ideal of the order: {0}")]
    NotAnIdeal(String),

    #[error("missing CRT candidate for prime {0}")]
    MissingPrime(u64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("search exhausted: {0}")]
    NotFound(String),

    #[error("internal contradiction: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn cap(what: impl Into<String>, limit: impl ToString) -> Self {
        Error::CapExceeded {
            what: what.into(),
            limit: limit.to_string(),
        }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::CapExceeded { .. } | Error::AmbientTooSmall { .. } => 3,
            Error::NotFound(_) => 4,
            Error::Internal(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
