use thiserror::Error;

/// Errors produced by the solvers, checkers and front ends of this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of a function (e.g. `r < 0`).
    #[error("domain error: {0}")]
    Domain(String),

    /// A point was passed to a graph query of an operator whose effective domain excludes it.
    #[error("point lies outside the domain of operator `{op}`")]
    OutsideDomain { op: String },

    /// An iterative solve hit its iteration cap.
    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// The operator has no solvable rule for the requested query.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Malformed numeric input (dimension mismatch, non-finite entries, bad parameters).
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A degree was requested for a map that vanishes (or nearly so) on the region boundary.
    #[error("boundary degeneracy: {0}")]
    BoundaryDegenerate(String),

    /// A zero with a singular Jacobian was found while summing orientations.
    #[error("degenerate zero at {0:?}")]
    DegenerateZero(Vec<f64>),

    /// A checker was called on an operator without the property it needs.
    #[error("usage error: {0}")]
    Usage(String),

    /// Interval multifunction with lower bound exceeding the upper bound.
    #[error("malformed multifunction: {0}")]
    MalformedMultifunction(String),

    /// Unequal degrees promised a solution in the annulus but none was located.
    #[error("annulus search failed: {0}")]
    SearchFailure(String),

    /// A problem specification violates one of the structural hypotheses.
    #[error("validation failed: {0}")]
    Validation(String),

    /// A certified degree was required but only a heuristic value is available.
    #[error("degree not certified: {0}")]
    Uncertified(String),

    /// An implicit time step did not converge.
    #[error("time step {step} failed: {reason}")]
    StepFailed { step: usize, reason: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("spec parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
