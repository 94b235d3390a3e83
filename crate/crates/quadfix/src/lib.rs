//! Quadratic optimization over common fixed points of nonexpansive mappings.
//!
//! Implements the iteration
//! `x_{n+1} = (I - alpha_{n+1} A) T_{n+1} x_n + alpha_{n+1} u`
//! for a strongly positive self-adjoint operator `A` and a cyclic family of
//! nonexpansive maps `T_0, ..., T_{l-1}`, together with explicit rate
//! functions (asymptotic regularity, Cauchy gap, metastability) and an
//! empirical harness that validates those rates against simulated
//! trajectories and a closed-form KKT oracle.

pub mod asreg;
pub mod config;
pub mod engine;
pub mod hilbert;
pub mod meta;
pub mod nonexp;
pub mod ratekit;
pub mod report;
pub mod sched;
pub mod verify;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("non-finite coordinate in point")]
    NonFinite,
    #[error("matrix is not symmetric within tolerance")]
    NotSymmetric,
    #[error("operator is not strongly positive (certified lower bound {0})")]
    NotStronglyPositive(f64),
    #[error("alpha {alpha} outside [0, {max}]")]
    AlphaOutOfRange { alpha: f64, max: f64 },
    #[error("zero normal vector in halfspace projection")]
    ZeroNormal,
    #[error("invalid box bounds (lo > hi)")]
    InvalidBox,
    #[error("point p is not a common fixed point (residual {0})")]
    NotCommonFixedPoint(f64),
    #[error("tau modulus required for families with more than one map")]
    TauRequired,
    #[error("missing rate witness: {0}")]
    MissingWitness(&'static str),
    #[error("schedule step size out of (0,1] at n={0}")]
    AlphaRange(u64),
    #[error("schedule table exhausted at n={0}")]
    ScheduleExhausted(u64),
    #[error("embedding hypothesis violated: measured ||I-A|| = {0} >= 1")]
    EmbeddingHypothesis(f64),
    #[error("mu {0} outside (0, 2/||A||)")]
    MuOutOfRange(f64),
    #[error("gamma {0} outside (0, 1]")]
    GammaOutOfRange(f64),
    #[error("user bound {name}={given} below computed minimum {min}")]
    BoundTooSmall {
        name: &'static str,
        given: u64,
        min: u64,
    },
    #[error("simulation budget exhausted at n={0}")]
    BudgetExhausted(u64),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
