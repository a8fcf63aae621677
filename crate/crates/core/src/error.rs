use thiserror::Error;

/// Errors raised while building meshes, assembling local systems, or solving.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("mesh has no boundary edges")]
    NoBoundary,

    #[error("unsupported degree {degree} (supported: 0..={max})")]
    UnsupportedDegree { degree: usize, max: usize },

    #[error("degenerate element {0} (non-positive Jacobian determinant)")]
    DegenerateElement(usize),

    #[error("Gram matrix of element {element} is not positive definite (d = {d:e})")]
    GramNotSpd { element: usize, d: f64 },

    #[error("global matrix is not symmetric positive definite")]
    NotSpd,

    #[error("conjugate gradients did not converge within {0} iterations")]
    NoConvergence(usize),

    #[error("solve residual {0:e} exceeds tolerance")]
    InaccurateSolve(f64),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("level {level}: {source}")]
    Level {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerical pipeline (as opposed to bad input).
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::GramNotSpd { .. }
            | Error::NotSpd
            | Error::NoConvergence(_)
            | Error::InaccurateSolve(_) => true,
            Error::Level { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
