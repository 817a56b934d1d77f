//! Error type shared by every module of the crate.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("vector must have at least one element")]
    EmptyVector,

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },

    #[error("cannot project against zero direction")]
    ZeroDirection,

    #[error("zero norm in {context}")]
    ZeroNorm { context: &'static str },

    #[error("degenerate dragger direction")]
    DegenerateDraggerDirection,

    #[error("dragger construction needs dimension >= 2, got {dim}")]
    DraggerDimensionTooSmall { dim: usize },

    #[error("mini-batch not divisible by micro-batch ({mini_batch} % {micro_batch} != 0)")]
    BatchNotDivisible { mini_batch: usize, micro_batch: usize },

    #[error("empty micro-batch sequence in {context}")]
    EmptyBatch { context: &'static str },

    #[error("cannot rescale zero gradient to positive norm (rho = {rho})")]
    RescaleZeroGradient { rho: f64 },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("hypothesis violated: {inequality}")]
    HypothesisViolated { inequality: String },

    #[error("step size too large for dragger bound (eta = {eta})")]
    StepSizeTooLarge { eta: f64 },

    #[error("divergence detected at iteration {iteration}")]
    Divergence { iteration: usize },

    #[error("identity requires fixed dragger norm (ratio_low != ratio_high)")]
    RatioNotFixed,

    #[error("optimum solve did not reach gradient norm {target:e} within {max_iters} iterations")]
    OptimumSolveFailed { target: f64, max_iters: usize },

    #[error("data error: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
