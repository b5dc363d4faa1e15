//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by forward computation, inversion, and recovery routines.
///
/// `InvalidInput` covers contract violations in user-supplied structures
/// (grids, model specs, configuration); the remaining variants are numerical
/// failure modes that carry enough context to be reported by a batch driver.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on user input does not hold.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Matrix/vector shapes do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Quadrature failed to stabilize below the doubling cap.
    #[error("quadrature did not converge below tolerance at order {max_order}")]
    QuadratureNonConvergence { max_order: usize },

    /// The discretized kernel cannot be inverted (all-zero or rank issues).
    #[error("singular kernel: {0}")]
    SingularKernel(String),

    /// A kernel row loses probability mass; the v-grid is too narrow.
    #[error("kernel row mass {mass:.6} below 0.999; widen the v grid")]
    KernelRowMass { mass: f64 },

    /// The CCP surface is degenerate (affine or exponential in z1), so the
    /// index coefficients are not identified from curvature.
    #[error("degenerate CCP surface: {0}")]
    DegenerateSurface(String),

    /// The least-squares system for the index coefficients is inconsistent.
    #[error("index identification failed: {0}")]
    IdentificationFailure(String),

    /// Sign information is insufficient to resolve the coefficient signs.
    #[error("sign resolution failed: {0}")]
    SignUnresolvable(String),

    /// A level crossing needed for threshold detection is absent.
    #[error("no level crossing found: {0}")]
    NoCrossing(String),

    /// Detected threshold geometry fits no supported solution concept.
    #[error("unclassifiable region geometry: {0}")]
    Unclassifiable(String),

    /// Monotonicity violation beyond the tolerated rearrangement budget.
    #[error("monotonicity violation {violation:.4} exceeds 0.05 along ray {ray}")]
    MonotonicityViolation { ray: String, violation: f64 },

    /// A requested variant exists in the design space but is intentionally
    /// not implemented; improvising would silently change semantics.
    #[error("not implemented: {0}")]
    Unimplemented(String),

    /// A numerical postcondition failed (conservation, positivity, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Underlying serialization error (CSV/JSON round trips).
    #[error("serialization: {0}")]
    Serialization(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
