use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent matrix/vector dimensions or invalid numeric inputs.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A constraint file could not be parsed.
    #[error("constraint parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Invalid or unreadable input data.
    #[error("data error: {0}")]
    Data(String),

    /// The feasible region (prior constraints intersected with the L1
    /// budget) is empty.
    #[error("infeasible constraints: {0}")]
    InfeasibleConstraints(String),

    /// The sequential-linearization loop hit its round cap without
    /// producing a feasible, stable iterate.
    #[error("linearization stalled after {rounds} rounds (max violation {violation:.3e})")]
    LinearizationStalled { rounds: usize, violation: f64 },

    /// The quadratic-program solver stopped on its iteration limit.
    #[error("solver iteration limit reached after {0} active-set changes")]
    IterationLimit(usize),

    /// Logistic fitting diverged (complete or quasi-complete separation).
    #[error("separation detected: coefficient magnitude exceeded {0}")]
    SeparationDetected(f64),

    /// An iterative fit did not converge within its iteration cap.
    #[error("no convergence after {0} iterations")]
    NonConvergence(usize),

    /// Every grid point of a tuning run failed.
    #[error("tuning failed: no valid grid point")]
    TuningFailed,

    /// Brute-force oracle guard rails.
    #[error("oracle error: {0}")]
    Oracle(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
