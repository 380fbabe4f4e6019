use num_complex::Complex64;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid user-supplied parameter or option.
    #[error("configuration error: {0}")]
    Config(String),

    /// Array lengths or operator dimensions do not agree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Requested problem exceeds a hard size or memory limit.
    #[error("problem size too large: {0}")]
    TooLarge(String),

    /// Dense or iterative eigensolver failure (LAPACK error, breakdown, non-convergence).
    #[error("eigensolver failure: {0}")]
    Solver(String),

    /// The shifted operator could not be factorized; the caller may perturb the shift.
    #[error("shifted factorization failed: {0}")]
    ShiftFactorization(String),

    /// No theta-stationary eigenvalue with positive real part was found.
    #[error("no stationary resonance found: {0}")]
    NoResonance(String),

    /// A vector or density violates its normalization contract.
    #[error("normalization error: {0}")]
    Normalization(String),

    /// Self-consistency loop ran out of iterations. Carries the (energy,
    /// density-change) record of every completed iteration.
    #[error("SCF did not converge within {iterations} iterations (last density change {last_change:.3e})")]
    ScfNotConverged {
        iterations: usize,
        last_change: f64,
        trace: Vec<(Complex64, f64)>,
    },

    /// Lifetime requested for a state with Im(E) >= 0 (bound state, infinite lifetime).
    #[error("bound state: imaginary part {0:.3e} is nonnegative, lifetime is infinite")]
    BoundState(f64),

    /// Square-root branch tracking of a complex density became ambiguous.
    #[error("square-root branch tracking failed near grid index {index}")]
    BranchTracking { index: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
