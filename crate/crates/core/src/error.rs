//! Error types shared across the crate.

use std::fmt;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("field grids differ: {expected:?} vs {got:?}")]
    GridMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("{what} must be strictly positive (min entry {min:e})")]
    NonPositive { what: String, min: f64 },
    #[error("{what} contains a non-finite entry")]
    NonFinite { what: String },
    #[error("unsupported boundary condition: {0}")]
    UnsupportedBc(String),
    #[error("right-hand side incompatible with pure-flux boundary conditions (imbalance {imbalance:e})")]
    IncompatibleRhs { imbalance: f64 },
    #[error("potential is determined only up to a constant; at least one Dirichlet segment is required")]
    NonUniquePotential,
    #[error("linear solve failed: {0}")]
    LinearSolve(Box<LinearSolveFailure>),
    #[error("zero pivot in row {row} during incomplete factorization")]
    ZeroPivot { row: usize },
    #[error(
        "Newton iteration did not converge after {iterations} iterations \
         (residual {residual:e}, target {target:e})"
    )]
    NewtonNoConvergence {
        iterations: usize,
        residual: f64,
        target: f64,
    },
    #[error("line search stalled after {halvings} halvings (residual {residual:e})")]
    LineSearchStalled { halvings: usize, residual: f64 },
    #[error("problem too large for the dense objective path: {unknowns} unknowns (limit {limit})")]
    TooLarge { unknowns: usize, limit: usize },
    #[error("candidate violates the species-{species} mass constraint (drift {drift:e})")]
    MassConstraint { species: usize, drift: f64 },
    #[error("invalid problem specification:\n  {}", .0.join("\n  "))]
    InvalidSpec(Vec<String>),
    #[error("step {step} failed")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("output sink failed: {0}")]
    Sink(String),
}

/// Diagnostics attached to a failed iterative linear solve.
#[derive(Debug)]
pub struct LinearSolveFailure {
    /// Iterations performed before giving up.
    pub iterations: usize,
    /// Best relative residual reached.
    pub residual: f64,
    /// Relative residual after each iteration.
    pub history: Vec<f64>,
    /// Best iterate reached (solver's native ordering).
    pub best: Vec<f64>,
}

impl fmt::Display for LinearSolveFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "no convergence in {} iterations (best relative residual {:e})",
            self.iterations, self.residual
        )
    }
}
