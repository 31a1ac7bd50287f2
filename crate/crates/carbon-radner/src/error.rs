use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("solver did not converge after {iterations} iterations (scaled residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("equilibrium plan lies on the box boundary; implicit-function sensitivities are unavailable")]
    BoundaryEquilibrium,

    #[error("system Hessian is singular or not positive definite")]
    SingularHessian,

    #[error("calibration bracket [{low:.6e}, {high:.6e}] does not straddle the target price {target}")]
    Bracket { low: f64, high: f64, target: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
