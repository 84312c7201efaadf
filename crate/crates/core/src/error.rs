use thiserror::Error;

/// Errors produced by the collocation solver and its helpers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate grid: nodes {first} and {second} coincide")]
    DegenerateGrid { first: usize, second: usize },

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("right-hand side failed at node {node}: {source}")]
    NodeEvaluation {
        node: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("diode voltage solve failed: {0}")]
    DiodeSolve(String),

    #[error("singular Jacobian at Newton iteration {iteration}")]
    SingularJacobian { iteration: usize },

    #[error("branch seed failed to converge at parameter {parameter} (residual {residual_norm:e})")]
    BranchSeed { parameter: f64, residual_norm: f64 },

    #[error("transient diverged at step {step}")]
    Divergence { step: usize },

    #[error("vector field provides no analytic Jacobian")]
    NoAnalyticJacobian,

    #[error("{0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
