//! Minimal dense-vector arithmetic.
//!
//! Everything is `f64`. Summations always accumulate in index order so that
//! results are bit-reproducible across runs and thread counts.

use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};

/// Relative tolerance used for orthogonality and normalization assertions.
pub const REL_TOL: f64 = 1e-12;

/// Dense real-valued vector of fixed dimension >= 1 with finite elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector {
    elements: Vec<f64>,
}

impl Vector {
    /// Builds a vector, rejecting empty input and non-finite elements.
    pub fn new(elements: Vec<f64>) -> Result<Self> {
        if elements.is_empty() {
            return Err(CoreError::EmptyVector);
        }
        if elements.iter().any(|x| !x.is_finite()) {
            return Err(CoreError::NonFinite { context: "vector construction" });
        }
        Ok(Self { elements })
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "vector dimension must be positive");
        Self { elements: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.elements
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.elements
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(CoreError::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        Ok(())
    }

    /// Inner product, accumulated in index order.
    pub fn dot(&self, other: &Self) -> Result<f64> {
        self.check_same_dim(other)?;
        let mut acc = 0.0;
        for (a, b) in self.elements.iter().zip(&other.elements) {
            acc += a * b;
        }
        Ok(acc)
    }

    pub fn l2_norm(&self) -> f64 {
        let mut acc = 0.0;
        for x in &self.elements {
            acc += x * x;
        }
        acc.sqrt()
    }

    /// Component of `self` orthogonal to `g`: `self - (self.g / ||g||^2) g`.
    pub fn project_orthogonal(&self, g: &Self) -> Result<Self> {
        self.check_same_dim(g)?;
        let g_norm_sq = g.dot(g)?;
        if g_norm_sq == 0.0 {
            return Err(CoreError::ZeroDirection);
        }
        let coeff = self.dot(g)? / g_norm_sq;
        let elements: Vec<f64> =
            self.elements.iter().zip(&g.elements).map(|(v, gi)| v - coeff * gi).collect();
        if elements.iter().any(|x| !x.is_finite()) {
            return Err(CoreError::NonFinite { context: "project_orthogonal" });
        }
        Ok(Self { elements })
    }

    pub fn cosine_similarity(&self, other: &Self) -> Result<f64> {
        self.check_same_dim(other)?;
        let nu = self.l2_norm();
        let nv = other.l2_norm();
        if nu == 0.0 || nv == 0.0 {
            return Err(CoreError::ZeroNorm { context: "cosine_similarity" });
        }
        Ok(self.dot(other)? / (nu * nv))
    }

    // -- plumbing used by the batching and optimizer modules ----------------
    // These panic on dimension mismatch; callers validate shapes up front.

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim());
        let elements = self.elements.iter().zip(&other.elements).map(|(a, b)| a + b).collect();
        Self { elements }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim());
        let elements = self.elements.iter().zip(&other.elements).map(|(a, b)| a - b).collect();
        Self { elements }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { elements: self.elements.iter().map(|a| a * s).collect() }
    }

    /// `self += s * other`, in place.
    pub fn axpy(&mut self, s: f64, other: &Self) {
        assert_eq!(self.dim(), other.dim());
        for (a, b) in self.elements.iter_mut().zip(&other.elements) {
            *a += s * b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.elements.iter().all(|x| x.is_finite())
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.elements[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn v(xs: &[f64]) -> Vector {
        Vector::new(xs.to_vec()).unwrap()
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert_eq!(Vector::new(vec![]), Err(CoreError::EmptyVector));
        assert!(matches!(Vector::new(vec![1.0, f64::NAN]), Err(CoreError::NonFinite { .. })));
        assert!(matches!(Vector::new(vec![f64::INFINITY]), Err(CoreError::NonFinite { .. })));
    }

    #[test]
    fn dot_examples() {
        assert_eq!(v(&[1.0, 0.0]).dot(&v(&[0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(v(&[1.0, 2.0]).dot(&v(&[1.0, 2.0])).unwrap(), 5.0);
        let w = v(&[0.3, -1.7, 2.2]);
        let n = w.l2_norm();
        assert!((w.dot(&w).unwrap() - n * n).abs() <= REL_TOL * n * n);
    }

    #[test]
    fn dot_dimension_mismatch() {
        assert_eq!(
            v(&[1.0]).dot(&v(&[1.0, 2.0])),
            Err(CoreError::DimensionMismatch { left: 1, right: 2 })
        );
    }

    #[test]
    fn l2_norm_examples() {
        assert_eq!(v(&[0.0, 0.0, 0.0]).l2_norm(), 0.0);
        assert_eq!(v(&[3.0, 4.0]).l2_norm(), 5.0);
        let w = v(&[1.2, -0.4, 9.0]);
        let c = -3.5;
        let lhs = w.scaled(c).l2_norm();
        let rhs = c.abs() * w.l2_norm();
        assert!((lhs - rhs).abs() <= REL_TOL * rhs);
    }

    #[test]
    fn projection_examples() {
        let p = v(&[1.0, 1.0]).project_orthogonal(&v(&[1.0, 0.0])).unwrap();
        assert_eq!(p, v(&[0.0, 1.0]));

        // already orthogonal input is unchanged
        let q = v(&[0.0, 2.0]).project_orthogonal(&v(&[3.0, 0.0])).unwrap();
        assert_eq!(q, v(&[0.0, 2.0]));

        // full projection of a parallel vector
        let z = v(&[2.0, 4.0]).project_orthogonal(&v(&[2.0, 4.0])).unwrap();
        assert_eq!(z.l2_norm(), 0.0);

        assert_eq!(
            v(&[1.0, 1.0]).project_orthogonal(&Vector::zeros(2)),
            Err(CoreError::ZeroDirection)
        );
    }

    #[test]
    fn cosine_examples() {
        let u = v(&[0.7, -0.2, 1.4]);
        assert!((u.cosine_similarity(&u).unwrap() - 1.0).abs() <= REL_TOL);
        assert_eq!(v(&[1.0, 0.0]).cosine_similarity(&v(&[0.0, 2.0])).unwrap(), 0.0);
        let c = v(&[1.0, 0.0]).cosine_similarity(&v(&[1.0, 1.0])).unwrap();
        assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(matches!(
            v(&[1.0, 0.0]).cosine_similarity(&Vector::zeros(2)),
            Err(CoreError::ZeroNorm { .. })
        ));
    }

    /// 1e5 seeded random pairs: the projection residual along g stays within
    /// the stated 1e-12 * ||v|| * ||g|| band.
    #[test]
    fn projection_orthogonality_band() {
        let mut rng = derive_rng(7, &[0x11]);
        for i in 0..100_000u32 {
            let dim = 2 + (i % 31) as usize;
            let a: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * 20.0 - 10.0).collect();
            let g: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * 20.0 - 10.0).collect();
            let a = Vector::new(a).unwrap();
            let g = Vector::new(g).unwrap();
            if g.l2_norm() == 0.0 {
                continue;
            }
            let p = a.project_orthogonal(&g).unwrap();
            let residual = p.dot(&g).unwrap().abs();
            assert!(
                residual <= REL_TOL * a.l2_norm() * g.l2_norm(),
                "residual {residual} too large at iteration {i}"
            );
        }
    }

    proptest! {
        #[test]
        fn cauchy_schwarz(xs in proptest::collection::vec(-1e3f64..1e3, 1..24),
                          ys in proptest::collection::vec(-1e3f64..1e3, 1..24)) {
            let n = xs.len().min(ys.len());
            let u = Vector::new(xs[..n].to_vec()).unwrap();
            let w = Vector::new(ys[..n].to_vec()).unwrap();
            let lhs = u.dot(&w).unwrap().abs();
            let rhs = u.l2_norm() * w.l2_norm();
            prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-12);
        }

        #[test]
        fn triangle_inequality(xs in proptest::collection::vec(-1e3f64..1e3, 1..24),
                               ys in proptest::collection::vec(-1e3f64..1e3, 1..24)) {
            let n = xs.len().min(ys.len());
            let u = Vector::new(xs[..n].to_vec()).unwrap();
            let w = Vector::new(ys[..n].to_vec()).unwrap();
            let lhs = u.add(&w).l2_norm();
            let rhs = u.l2_norm() + w.l2_norm();
            prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-12);
        }
    }
}
