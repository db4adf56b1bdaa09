//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix {name} is not symmetric: relative asymmetry {asym:.3e} exceeds 1e-12")]
    NotSymmetric { name: &'static str, asym: f64 },

    #[error("matrix {name} is not positive definite: smallest eigenvalue {eig:.6e}")]
    NotPositive { name: &'static str, eig: f64 },

    #[error(
        "smallest pencil eigenvalue is not simple: lambda1 = {lambda1:.12e}, lambda2 = {lambda2:.12e}"
    )]
    DegenerateGap { lambda1: f64, lambda2: f64 },

    #[error(
        "lambda = {lambda:.6e} sits at a spectral crossing: eigenvalue {eig:.3e} within threshold {threshold:.3e} of zero"
    )]
    NearSingular { lambda: f64, eig: f64, threshold: f64 },

    #[error("lambda = {lambda:.6e} is outside the open gap ({lo:.6e}, {hi:.6e})")]
    LambdaOutOfGap { lambda: f64, lo: f64, hi: f64 },

    #[error("grid with n = {n} interior nodes is too coarse, need n >= {min}")]
    GridTooCoarse { n: usize, min: usize },

    #[error("step size underflow at t = {t:.6e}: h = {h:.3e}")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("trajectories are sampled on different time grids")]
    MisalignedGrids,

    #[error(
        "sampling stride too coarse for the energy identity: residual {residual:.3e} is within 10x the O(stride^2) truncation estimate {bound:.3e}; refine the stride"
    )]
    StrideTooCoarse { residual: f64, bound: f64 },

    #[error("horizon {got:.3e} is too short, need at least {needed:.3e}")]
    HorizonTooShort { needed: f64, got: f64 },

    #[error("solution escaped at t = {t:.6e}: |y| = {value:.3e}")]
    UnboundedSolution { t: f64, value: f64 },

    #[error("{0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
