use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("J^2 != -I (relative residual {residual:e})")]
    NotAlmostComplex { residual: f64 },
    #[error("J does not preserve the symplectic form (relative residual {residual:e})")]
    NotSymplectic { residual: f64 },
    #[error("induced metric is not positive definite")]
    NotPositive,
    #[error("not a rank-{rank} projector (residual {residual:e})")]
    NotProjector { rank: usize, residual: f64 },
    #[error("interpolation endomorphism is singular")]
    SingularInterpolation,
    #[error("determinant branch jumps by more than pi/2 even at {steps} steps")]
    BranchJump { steps: usize },
    #[error("determinant vanishes along the continuation path")]
    ZeroDeterminant,
    #[error("quadrature tail bound {bound:e} exceeds 1e-12")]
    TailBoundViolated { bound: f64 },
    #[error("no convergence: refinement changed the result by {change:e} (tolerance {tol:e})")]
    ConvergenceFailure { change: f64, tol: f64 },
    #[error("degenerate fixed point: smallest singular value of I - dphi is {sigma_min:e}")]
    DegenerateFixedPoint { sigma_min: f64 },
    #[error("restriction to the transverse subspace is degenerate ({value:e})")]
    DegenerateOnN { value: f64 },
    #[error("holomorphy residual {residual:e} exceeds tolerance")]
    HolomorphyFailure { residual: f64 },
    #[error("quasi-periodicity residual {residual:e} exceeds tolerance")]
    PeriodicityFailure { residual: f64 },
    #[error("theta series truncation K={k} too small (tail {tail:e})")]
    TruncationTooSmall { k: usize, tail: f64 },
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("lift does not preserve the connection (residual {residual:e})")]
    LiftInconsistent { residual: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
