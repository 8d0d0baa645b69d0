use thiserror::Error;

/// Failure categories. The CLI maps [`Error::Config`] to exit code 2 and
/// everything else to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("geometry inconsistency: {0}")]
    Geometry(String),
    #[error("structural failure: {0}")]
    Structural(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("resource guard: {0}")]
    Resource(String),
    #[error("canonical closure not reached within depth {depth}; {classes} classes discovered")]
    Closure { depth: usize, classes: usize },
    #[error("GMRES did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64, history: Vec<f64> },
    #[error("evaluation point {0:?} collides with a quadrature node")]
    Collision([f64; 2]),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
