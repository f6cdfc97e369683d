use thiserror::Error;

/// Error type shared by every module.
///
/// Variants split into two classes that the CLI maps onto process exit
/// codes: configuration/validation problems (exit 2) and numerical
/// failures discovered mid-computation (exit 3).
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation: {0}")]
    Validation(String),

    #[error("config: {0}")]
    Config(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian: |a - a†| = {deviation:.3e} at ({row},{col}), tolerance {tol:.1e}")]
    NotHermitian {
        deviation: f64,
        row: usize,
        col: usize,
        tol: f64,
    },

    #[error("not positive semidefinite: eigenvalue {eigenvalue:.6e}")]
    NotPsd { eigenvalue: f64 },

    #[error("singular system: pivot {pivot:.3e} below tolerance {tol:.3e}{hint}")]
    Singular { pivot: f64, tol: f64, hint: String },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off:.3e})")]
    NoConvergence { sweeps: usize, off: f64 },

    #[error("propagation failure at t = {time} ps: {check} deviates by {magnitude:.3e}")]
    Propagation {
        time: f64,
        check: &'static str,
        magnitude: f64,
    },

    #[error("trace drift {drift:.3e} exceeds 1e-6 at t = {time} ps; reduce dt (currently {dt} ps)")]
    StepSize { drift: f64, time: f64, dt: f64 },

    #[error("empty site block: trace {trace:.3e} is too small to normalize")]
    EmptySiteBlock { trace: f64 },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit code the CLI uses for this failure: 2 for validation, 3 for
    /// numerical trouble.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_)
            | Error::Config(_)
            | Error::NotSquare { .. }
            | Error::NotHermitian { .. }
            | Error::Io(_)
            | Error::Json(_) => 2,
            Error::NotPsd { .. }
            | Error::Singular { .. }
            | Error::NoConvergence { .. }
            | Error::Propagation { .. }
            | Error::StepSize { .. }
            | Error::EmptySiteBlock { .. } => 3,
        }
    }
}
