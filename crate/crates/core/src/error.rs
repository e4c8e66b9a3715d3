use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("query point {point:?} lies outside the oracle domain")]
    DomainViolation { point: Vec<f64> },

    #[error(
        "memory guard: b = {b} qubits per register with n = {n} needs 2^{} amplitudes, limit is {limit}",
        *b as usize * n
    )]
    MemoryGuard { b: u32, n: usize, limit: u64 },

    #[error("circuit too large for the gate-level simulator: {qubits} qubits (max {max})")]
    ScaleGuard { qubits: usize, max: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-convex parameterization: {0}")]
    NonConvex(String),

    #[error("round {t} out of range 1..={horizon}")]
    RoundOutOfRange { t: usize, horizon: usize },

    #[error("round {t}: {source}")]
    InRound {
        t: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("comparator solver did not converge (gradient mapping {mapping_norm:e}); best iterate {best:?}")]
    NonConvergence { best: Vec<f64>, mapping_norm: f64 },

    #[error("schedule mismatch: {0}")]
    ScheduleMismatch(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("csv parse error at line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn in_round(self, t: usize) -> Error {
        match self {
            e @ Error::InRound { .. } => e,
            e => Error::InRound { t, source: Box::new(e) },
        }
    }

    /// True for errors caused by a bad experiment description rather than
    /// by something that went wrong while running it.
    pub fn is_config_error(&self) -> bool {
        if let Error::InRound { source, .. } = self {
            return source.is_config_error();
        }
        matches!(
            self,
            Error::Config(_)
                | Error::InvalidParameter(_)
                | Error::NonConvex(_)
                | Error::ScheduleMismatch(_)
                | Error::DimensionMismatch { .. }
        )
    }
}
