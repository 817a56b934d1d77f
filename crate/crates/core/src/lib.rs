//! Desk-scale laboratory for micro-batch gradient clipping.
//!
//! The crate provides:
//!
//! * dense vector arithmetic ([`linalg`]),
//! * a synthetic per-example gradient model mixing benign noise with
//!   "dragger" gradients that are orthogonal to the true gradient
//!   ([`gradient_model`]),
//! * the micro-batch sharding / adaptive clipping / aggregation pipeline
//!   ([`clipping`]),
//! * smooth loss testbeds with certified smoothness constants ([`problems`]),
//! * seeded, bit-reproducible SGD and micro-batch clipped SGD runners
//!   ([`optimizer`]),
//! * closed-form convergence-rate and bias evaluators ([`bounds`]),
//! * Monte-Carlo verification suites for the concentration and alignment
//!   inequalities the rate analysis relies on ([`verification`]).
//!
//! All randomness flows through counter-keyed substreams ([`rng`]), so every
//! result is a pure function of explicit seeds regardless of thread count.

pub mod bounds;
pub mod clipping;
pub mod error;
pub mod gradient_model;
pub mod linalg;
pub mod optimizer;
pub mod problems;
pub mod rng;
pub mod verification;

pub use bounds::{
    baseline_rate, bias_sweep, clipped_sgd_rate, deviation_bound, dragger_sgd_rate,
    max_dragger_ratio, BiasSweep, ClippedRate, RateInputs,
};
pub use clipping::{
    adaptive_bound, aggregate_adaptive, aggregate_fixed, aggregate_normalized, clip, clip_fixed,
    microbatch_mean, shard, ClipMode, ClipSpec,
};
pub use error::CoreError;
pub use gradient_model::{
    make_dragger, per_example_variance, sample_benign, sample_per_example, DraggerSpec,
    GradientKind, GradientModelParams, LabeledGradient, RatioSchedule,
};
pub use linalg::Vector;
pub use optimizer::{
    draw_mini_batch, lr_theorem, min_grad_norm, run_mcsgd, run_sgd, IterationRecord,
    LearningRate, RunConfig, RunSummary,
};
pub use problems::{finite_diff_grad, LogisticProblem, Problem, QuadraticProblem};
pub use verification::{
    cosine_experiment, mc_deviation_bound, mc_star_nonnegativity, mc_variance_identity,
    norm_ratio_proxy, star_value, CosineStats, McReport,
};

/// Serializes a float with 17 significant digits, enough for a lossless
/// `f64` round-trip. All CSV and report emitters use this format.
pub fn float17(x: f64) -> String {
    format!("{x:.16e}")
}
