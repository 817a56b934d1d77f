//! Micro-batch sharding, adaptive clipping and aggregation.
//!
//! A mini-batch of `B` per-example gradients is sharded into `B/b` contiguous
//! micro-batches. Each micro-batch mean is clipped and the clipped vectors
//! are aggregated. Three aggregation modes exist:
//!
//! * `Adaptive` — the bound is `rho = min_j ||ghat_j||`; every micro-batch
//!   gradient is rescaled to norm exactly `rho` (the minimal one onto itself)
//!   and the clipped vectors are summed.
//! * `Fixed(rho)` — conventional clipping `min(1, rho/||ghat||) * ghat`,
//!   summed; never up-scales.
//! * `Normalized` — `(b/B) * sum_j ghat_j/||ghat_j||`, the update the
//!   clipped-rate analysis works with. Parallel to the adaptive aggregate
//!   with per-step scale `rho * B/b`.

use crate::error::{CoreError, Result};
use crate::linalg::Vector;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClipMode {
    Adaptive,
    Fixed { rho: f64 },
    Normalized,
}

impl ClipMode {
    pub fn label(&self) -> &'static str {
        match self {
            ClipMode::Adaptive => "adaptive",
            ClipMode::Fixed { .. } => "fixed",
            ClipMode::Normalized => "normalized",
        }
    }
}

/// Mini-batch size, micro-batch size and aggregation mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipSpec {
    pub mini_batch: usize,
    pub micro_batch: usize,
    pub mode: ClipMode,
}

impl ClipSpec {
    pub fn new(mini_batch: usize, micro_batch: usize, mode: ClipMode) -> Result<Self> {
        let spec = Self { mini_batch, micro_batch, mode };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mini_batch == 0 || self.micro_batch == 0 {
            return Err(CoreError::InvalidParameter {
                name: "batch sizes",
                reason: format!(
                    "must be positive, got B = {}, b = {}",
                    self.mini_batch, self.micro_batch
                ),
            });
        }
        if self.mini_batch % self.micro_batch != 0 {
            return Err(CoreError::BatchNotDivisible {
                mini_batch: self.mini_batch,
                micro_batch: self.micro_batch,
            });
        }
        if let ClipMode::Fixed { rho } = self.mode {
            if !(rho > 0.0 && rho.is_finite()) {
                return Err(CoreError::InvalidParameter {
                    name: "rho",
                    reason: format!("fixed clipping bound must be positive, got {rho}"),
                });
            }
        }
        Ok(())
    }

    pub fn micro_batch_count(&self) -> usize {
        self.mini_batch / self.micro_batch
    }
}

/// Splits `B` per-example gradients into `B/b` contiguous groups of size `b`,
/// preserving order.
pub fn shard(per_example: &[Vector], micro_batch: usize) -> Result<Vec<&[Vector]>> {
    if micro_batch == 0 || per_example.len() % micro_batch != 0 {
        return Err(CoreError::BatchNotDivisible {
            mini_batch: per_example.len(),
            micro_batch,
        });
    }
    Ok(per_example.chunks(micro_batch).collect())
}

/// Coordinate-wise arithmetic mean, accumulated in index order.
pub fn microbatch_mean(micro_batch: &[Vector]) -> Result<Vector> {
    let first = micro_batch.first().ok_or(CoreError::EmptyBatch { context: "microbatch_mean" })?;
    let mut acc = Vector::zeros(first.dim());
    for g in micro_batch {
        if g.dim() != first.dim() {
            return Err(CoreError::DimensionMismatch { left: first.dim(), right: g.dim() });
        }
        acc.axpy(1.0, g);
    }
    let mean = acc.scaled(1.0 / micro_batch.len() as f64);
    Vector::new(mean.into_vec())
}

/// The adaptive clipping bound: the minimum L2 norm among micro-batch
/// gradients.
pub fn adaptive_bound(micro_grads: &[Vector]) -> Result<f64> {
    if micro_grads.is_empty() {
        return Err(CoreError::EmptyBatch { context: "adaptive_bound" });
    }
    Ok(micro_grads.iter().map(Vector::l2_norm).fold(f64::INFINITY, f64::min))
}

/// Rescales `g_hat` to norm exactly `rho` (up or down). The zero vector is
/// only admissible with `rho = 0`.
pub fn clip(g_hat: &Vector, rho: f64) -> Result<Vector> {
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(CoreError::InvalidParameter {
            name: "rho",
            reason: format!("clip bound must be finite and >= 0, got {rho}"),
        });
    }
    let norm = g_hat.l2_norm();
    if norm == 0.0 {
        if rho == 0.0 {
            return Ok(g_hat.clone());
        }
        return Err(CoreError::RescaleZeroGradient { rho });
    }
    Ok(g_hat.scaled(rho / norm))
}

/// Conventional fixed-bound clipping `min(1, rho/||g_hat||) * g_hat`; never
/// up-scales, and the zero vector passes through unchanged.
pub fn clip_fixed(g_hat: &Vector, rho: f64) -> Vector {
    let norm = g_hat.l2_norm();
    if norm <= rho {
        g_hat.clone()
    } else {
        g_hat.scaled(rho / norm)
    }
}

/// Adaptive aggregation: clips every micro-batch gradient to the minimum
/// norm and sums the clipped vectors in index order. Returns the sum and the
/// bound. When some micro-batch gradient is zero the bound is zero and the
/// aggregate collapses to the zero vector; callers record that as a zero-rho
/// event instead of failing.
pub fn aggregate_adaptive(micro_grads: &[Vector]) -> Result<(Vector, f64)> {
    let rho = adaptive_bound(micro_grads)?;
    let mut sum = Vector::zeros(micro_grads[0].dim());
    for g in micro_grads {
        let clipped = clip(g, rho)?;
        sum.axpy(1.0, &clipped);
    }
    let sum = Vector::new(sum.into_vec())?;
    Ok((sum, rho))
}

/// Fixed-bound aggregation: sums `clip_fixed(g, rho)` in index order.
pub fn aggregate_fixed(micro_grads: &[Vector], rho: f64) -> Result<Vector> {
    if micro_grads.is_empty() {
        return Err(CoreError::EmptyBatch { context: "aggregate_fixed" });
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(CoreError::InvalidParameter {
            name: "rho",
            reason: format!("fixed clipping bound must be positive, got {rho}"),
        });
    }
    let mut sum = Vector::zeros(micro_grads[0].dim());
    for g in micro_grads {
        sum.axpy(1.0, &clip_fixed(g, rho));
    }
    Vector::new(sum.into_vec())
}

/// Normalized aggregation `(b/B) * sum_j ghat_j/||ghat_j||`. The result has
/// norm at most 1. Zero-norm micro-gradients are an error here: the
/// normalized update is undefined for them.
pub fn aggregate_normalized(micro_grads: &[Vector], micro_batch: usize, mini_batch: usize) -> Result<Vector> {
    if micro_grads.is_empty() {
        return Err(CoreError::EmptyBatch { context: "aggregate_normalized" });
    }
    let mut sum = Vector::zeros(micro_grads[0].dim());
    for g in micro_grads {
        let norm = g.l2_norm();
        if norm == 0.0 {
            return Err(CoreError::ZeroNorm { context: "aggregate_normalized" });
        }
        sum.axpy(1.0 / norm, g);
    }
    let scale = micro_batch as f64 / mini_batch as f64;
    Vector::new(sum.scaled(scale).into_vec())
}
