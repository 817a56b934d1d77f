//! Synthetic per-example gradients: a benign/dragger mixture.
//!
//! With probability `1 - epsilon` a per-example gradient is the true gradient
//! plus isotropic Gaussian noise with `E||xi||^2 = sigma^2` exactly; with
//! probability `epsilon` it is a dragger: a vector orthogonal to the true
//! gradient whose norm sits in the band `[ratio_low, ratio_high] * ||g||`.
//!
//! The noise is centrally symmetric (xi and -xi equidistributed), which the
//! half-space argument in the clipped-rate analysis requires, and isotropy
//! makes the per-example variance identity hold with equality rather than as
//! an upper bound.

use crate::error::{CoreError, Result};
use crate::linalg::{Vector, REL_TOL};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Mixture parameters: dragger probability and benign noise scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientModelParams {
    pub epsilon: f64,
    pub sigma: f64,
    pub dim: usize,
}

impl GradientModelParams {
    pub fn new(epsilon: f64, sigma: f64, dim: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) || !epsilon.is_finite() {
            return Err(CoreError::InvalidParameter {
                name: "epsilon",
                reason: format!("must be in [0, 1], got {epsilon}"),
            });
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(CoreError::InvalidParameter {
                name: "sigma",
                reason: format!("must be finite and >= 0, got {sigma}"),
            });
        }
        if dim == 0 {
            return Err(CoreError::InvalidParameter {
                name: "dim",
                reason: "must be positive".into(),
            });
        }
        Ok(Self { epsilon, sigma, dim })
    }
}

/// Maps a micro-batch size to the dragger/benign norm-ratio lower bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RatioSchedule {
    Constant { value: f64 },
    /// `scale * b^-exponent`.
    PowerDecay { scale: f64, exponent: f64 },
    /// Piecewise-linear in `ln b` through the given `(b, ratio)` control
    /// points; clamped outside their range.
    LogLinear { points: Vec<(f64, f64)> },
}

impl RatioSchedule {
    /// Illustrative calibration through the reciprocals of measured
    /// benign/dragger norm-ratio proxies at micro-batch sizes 1, 4 and 512.
    pub fn calibration_default() -> Self {
        RatioSchedule::LogLinear {
            points: vec![(1.0, 1.0 / 6.18), (4.0, 1.0 / 5.74), (512.0, 1.0 / 4.42)],
        }
    }

    pub fn ratio_at(&self, micro_batch: f64) -> f64 {
        match self {
            RatioSchedule::Constant { value } => *value,
            RatioSchedule::PowerDecay { scale, exponent } => scale * micro_batch.powf(-exponent),
            RatioSchedule::LogLinear { points } => {
                let x = micro_batch.ln();
                let first = points.first().expect("log-linear schedule needs points");
                let last = points.last().expect("log-linear schedule needs points");
                if x <= first.0.ln() {
                    return first.1;
                }
                if x >= last.0.ln() {
                    return last.1;
                }
                for pair in points.windows(2) {
                    let (b0, c0) = pair[0];
                    let (b1, c1) = pair[1];
                    let (x0, x1) = (b0.ln(), b1.ln());
                    if x <= x1 {
                        let w = (x - x0) / (x1 - x0);
                        return c0 + w * (c1 - c0);
                    }
                }
                last.1
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| CoreError::InvalidParameter { name: "ratio_schedule", reason };
        match self {
            RatioSchedule::Constant { value } => {
                if !(*value > 0.0 && value.is_finite()) {
                    return Err(bad(format!("constant ratio must be positive, got {value}")));
                }
            }
            RatioSchedule::PowerDecay { scale, exponent } => {
                if !(*scale > 0.0 && scale.is_finite() && exponent.is_finite()) {
                    return Err(bad(format!("bad power decay: scale {scale}, exponent {exponent}")));
                }
            }
            RatioSchedule::LogLinear { points } => {
                if points.is_empty() {
                    return Err(bad("log-linear schedule needs at least one point".into()));
                }
                for &(b, c) in points {
                    if !(b >= 1.0 && b.is_finite() && c > 0.0 && c.is_finite()) {
                        return Err(bad(format!("bad control point ({b}, {c})")));
                    }
                }
                if points.windows(2).any(|p| p[1].0 <= p[0].0) {
                    return Err(bad("control points must be strictly increasing in b".into()));
                }
            }
        }
        Ok(())
    }
}

/// How draggers are constructed: the seed direction for the orthogonal
/// component and the norm-ratio band `[ratio_low, ratio_high]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DraggerSpec {
    pub base_direction: Vector,
    pub ratio_low: f64,
    pub ratio_high: f64,
    pub ratio_schedule: Option<RatioSchedule>,
}

impl DraggerSpec {
    pub fn new(base_direction: Vector, ratio_low: f64, ratio_high: f64) -> Result<Self> {
        if base_direction.l2_norm() == 0.0 {
            return Err(CoreError::ZeroNorm { context: "dragger base direction" });
        }
        if !(ratio_low > 0.0 && ratio_low.is_finite() && ratio_high.is_finite() && ratio_low <= ratio_high)
        {
            return Err(CoreError::InvalidParameter {
                name: "ratio bounds",
                reason: format!("need 0 < ratio_low <= ratio_high, got [{ratio_low}, {ratio_high}]"),
            });
        }
        Ok(Self { base_direction, ratio_low, ratio_high, ratio_schedule: None })
    }

    /// Fixed-norm variant (`ratio_low == ratio_high`).
    pub fn fixed_ratio(base_direction: Vector, ratio: f64) -> Result<Self> {
        Self::new(base_direction, ratio, ratio)
    }

    pub fn with_schedule(mut self, schedule: RatioSchedule) -> Result<Self> {
        schedule.validate()?;
        self.ratio_schedule = Some(schedule);
        Ok(self)
    }

    pub fn has_fixed_ratio(&self) -> bool {
        self.ratio_low == self.ratio_high
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientKind {
    Benign,
    Dragger,
}

/// A sampled per-example gradient together with its mixture label, so the
/// harness can count draggers per batch.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledGradient {
    pub value: Vector,
    pub kind: GradientKind,
}

/// `g + xi` with isotropic Gaussian noise, per-coordinate variance
/// `sigma^2 / d`, so `E||xi||^2 = sigma^2` exactly.
pub fn sample_benign(g: &Vector, sigma: f64, rng: &mut ChaCha8Rng) -> Result<Vector> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(CoreError::InvalidParameter {
            name: "sigma",
            reason: format!("must be finite and >= 0, got {sigma}"),
        });
    }
    if sigma == 0.0 {
        return Ok(g.clone());
    }
    let scale = sigma / (g.dim() as f64).sqrt();
    let elements: Vec<f64> = g
        .as_slice()
        .iter()
        .map(|&gi| {
            let z: f64 = rng.sample(StandardNormal);
            gi + scale * z
        })
        .collect();
    Vector::new(elements)
}

/// A dragger gradient at the current true gradient `g`: the base direction
/// projected orthogonal to `g`, rescaled to `r * ||g||` with `r` drawn
/// uniformly from the ratio band (no draw when the band is degenerate).
pub fn make_dragger(g: &Vector, spec: &DraggerSpec, rng: &mut ChaCha8Rng) -> Result<Vector> {
    if g.dim() < 2 {
        return Err(CoreError::DraggerDimensionTooSmall { dim: g.dim() });
    }
    let g_norm = g.l2_norm();
    if g_norm == 0.0 {
        return Err(CoreError::ZeroNorm { context: "make_dragger gradient" });
    }
    let projected = spec.base_direction.project_orthogonal(g)?;
    let proj_norm = projected.l2_norm();
    if proj_norm <= REL_TOL * spec.base_direction.l2_norm() {
        return Err(CoreError::DegenerateDraggerDirection);
    }
    let ratio = if spec.has_fixed_ratio() {
        spec.ratio_low
    } else {
        let u: f64 = rng.random();
        spec.ratio_low + u * (spec.ratio_high - spec.ratio_low)
    };
    Ok(projected.scaled(ratio * g_norm / proj_norm))
}

/// One draw from the mixture: dragger with probability `epsilon`, benign
/// otherwise. The mixture coin is always the first value consumed from `rng`.
pub fn sample_per_example(
    g: &Vector,
    params: &GradientModelParams,
    spec: &DraggerSpec,
    rng: &mut ChaCha8Rng,
) -> Result<LabeledGradient> {
    let coin: f64 = rng.random();
    if coin < params.epsilon {
        Ok(LabeledGradient { value: make_dragger(g, spec, rng)?, kind: GradientKind::Dragger })
    } else {
        Ok(LabeledGradient {
            value: sample_benign(g, params.sigma, rng)?,
            kind: GradientKind::Benign,
        })
    }
}

/// Per-example gradient variance of the mixture with a fixed dragger:
/// `eps(1-eps)||g||^2 + eps(1-eps)||mu||^2 + (1-eps) sigma^2`.
///
/// With the isotropic noise used here this is an identity, not just an upper
/// bound.
pub fn per_example_variance(g_norm: f64, mu_norm: f64, epsilon: f64, sigma: f64) -> Result<f64> {
    for (name, v) in [("g_norm", g_norm), ("mu_norm", mu_norm), ("epsilon", epsilon), ("sigma", sigma)]
    {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(CoreError::InvalidParameter {
                name,
                reason: format!("must be finite and >= 0, got {v}"),
            });
        }
    }
    if epsilon > 1.0 {
        return Err(CoreError::InvalidParameter {
            name: "epsilon",
            reason: format!("must be <= 1, got {epsilon}"),
        });
    }
    let e = epsilon;
    Ok(e * (1.0 - e) * g_norm * g_norm + e * (1.0 - e) * mu_norm * mu_norm
        + (1.0 - e) * sigma * sigma)
}
