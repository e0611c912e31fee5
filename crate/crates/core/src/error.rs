use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("constants were computed at different parameters: {0}")]
    Mismatch(String),
    #[error("regime error: {0}")]
    Regime(String),
    #[error("convergence error: {0}")]
    Convergence(String),
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("face error: {0}")]
    Face(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code: 1 for bad input, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_)
            | Error::Geometry(_)
            | Error::Validation(_)
            | Error::Parse { .. }
            | Error::Mismatch(_)
            | Error::Regime(_)
            | Error::Io(_) => 1,
            Error::Convergence(_)
            | Error::SingularSystem(_)
            | Error::Mesh(_)
            | Error::Face(_)
            | Error::Solver(_) => 2,
        }
    }
}
