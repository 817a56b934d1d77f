//! Smooth loss testbeds with certified smoothness constants and known
//! optima, so the loss lower-bound and smoothness hypotheses hold by
//! construction.

use crate::error::{CoreError, Result};
use crate::linalg::Vector;
use crate::rng::{derive_rng, domain};
use rand::Rng;
use rand_distr::StandardNormal;
use std::path::Path;

/// A smooth loss with analytic gradient, a smoothness constant `L` and a
/// lower bound on the loss.
pub trait Problem: Send + Sync {
    fn dim(&self) -> usize;
    fn loss(&self, w: &Vector) -> f64;
    fn grad(&self, w: &Vector) -> Vector;
    /// Smoothness constant `L` (an upper bound is fine).
    fn smoothness(&self) -> f64;
    /// Infimum of the loss (`L*`).
    fn optimum(&self) -> f64;
    fn description(&self) -> String;
}

/// Diagonal quadratic `L(w) = 1/2 sum_i lambda_i w_i^2` with positive
/// eigenvalues. Smoothness constant is `max lambda`, optimum 0 at the origin.
#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    eigenvalues: Vec<f64>,
}

impl QuadraticProblem {
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(CoreError::InvalidParameter {
                name: "eigenvalues",
                reason: "need at least one eigenvalue".into(),
            });
        }
        if let Some(bad) = eigenvalues.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(CoreError::InvalidParameter {
                name: "eigenvalues",
                reason: format!("eigenvalues must be positive and finite, got {bad}"),
            });
        }
        Ok(Self { eigenvalues })
    }

    /// `dim` eigenvalues evenly spaced over `[min, max]`.
    pub fn with_spectrum(min: f64, max: f64, dim: usize) -> Result<Self> {
        if dim == 0 || !(min > 0.0) || !(max >= min) || !max.is_finite() {
            return Err(CoreError::InvalidParameter {
                name: "spectrum",
                reason: format!("need 0 < min <= max and dim >= 1, got [{min}, {max}] x {dim}"),
            });
        }
        let eigenvalues = if dim == 1 {
            vec![max]
        } else {
            (0..dim).map(|i| min + (max - min) * i as f64 / (dim - 1) as f64).collect()
        };
        Self::new(eigenvalues)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
}

impl Problem for QuadraticProblem {
    fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    fn loss(&self, w: &Vector) -> f64 {
        assert_eq!(w.dim(), self.dim());
        let mut acc = 0.0;
        for (l, x) in self.eigenvalues.iter().zip(w.as_slice()) {
            acc += l * x * x;
        }
        0.5 * acc
    }

    fn grad(&self, w: &Vector) -> Vector {
        assert_eq!(w.dim(), self.dim());
        let elements = self.eigenvalues.iter().zip(w.as_slice()).map(|(l, x)| l * x).collect();
        Vector::new(elements).expect("finite gradient")
    }

    fn smoothness(&self) -> f64 {
        self.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    fn optimum(&self) -> f64 {
        0.0
    }

    fn description(&self) -> String {
        format!("quadratic d={} spectrum [{:.3}, {:.3}]", self.dim(),
            self.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min),
            self.smoothness())
    }
}

/// Binary logistic regression with labels in {-1, +1} and optional L2
/// regularization:
///
/// `L(w) = (1/n) sum log(1 + exp(-y_i x_i.w)) + (reg/2) ||w||^2`
///
/// The smoothness constant is `lambda_max((1/n) X^T X)/4 + reg`. The optimum
/// has no closed form and is solved once at construction by deterministic
/// full-gradient descent down to gradient norm 1e-10, then cached.
pub struct LogisticProblem {
    features: Vec<Vector>,
    labels: Vec<f64>,
    l2_reg: f64,
    dim: usize,
    smoothness: f64,
    optimum: f64,
}

const OPTIMUM_GRAD_TOL: f64 = 1e-10;
const OPTIMUM_MAX_ITERS: usize = 2_000_000;

impl LogisticProblem {
    pub fn new(features: Vec<Vector>, labels: Vec<f64>, l2_reg: f64) -> Result<Self> {
        if features.is_empty() {
            return Err(CoreError::Data("logistic problem needs at least one example".into()));
        }
        if features.len() != labels.len() {
            return Err(CoreError::Data(format!(
                "feature rows ({}) and labels ({}) differ",
                features.len(),
                labels.len()
            )));
        }
        let dim = features[0].dim();
        for (i, x) in features.iter().enumerate() {
            if x.dim() != dim {
                return Err(CoreError::Data(format!(
                    "row {i} has dimension {} but row 0 has {dim}",
                    x.dim()
                )));
            }
            if x.l2_norm() == 0.0 {
                return Err(CoreError::Data(format!("row {i} is all zeros")));
            }
        }
        if let Some(y) = labels.iter().find(|y| **y != 1.0 && **y != -1.0) {
            return Err(CoreError::Data(format!("labels must be +1 or -1, got {y}")));
        }
        if !(l2_reg >= 0.0 && l2_reg.is_finite()) {
            return Err(CoreError::InvalidParameter {
                name: "l2_reg",
                reason: format!("must be finite and >= 0, got {l2_reg}"),
            });
        }

        let smoothness = gram_top_eigenvalue(&features) / 4.0 + l2_reg;
        let mut problem =
            Self { features, labels, l2_reg, dim, smoothness, optimum: f64::NEG_INFINITY };
        problem.optimum = problem.solve_optimum()?;
        Ok(problem)
    }

    /// Deterministic gradient descent with step `1/L` from the origin.
    fn solve_optimum(&self) -> Result<f64> {
        let step = 1.0 / self.smoothness;
        let mut w = Vector::zeros(self.dim);
        for _ in 0..OPTIMUM_MAX_ITERS {
            let g = self.grad(&w);
            if g.l2_norm() <= OPTIMUM_GRAD_TOL {
                return Ok(self.loss(&w));
            }
            w.axpy(-step, &g);
        }
        Err(CoreError::OptimumSolveFailed { target: OPTIMUM_GRAD_TOL, max_iters: OPTIMUM_MAX_ITERS })
    }

    pub fn examples(&self) -> usize {
        self.features.len()
    }
}

/// `log(1 + exp(-z))` without overflow.
fn softplus_neg(z: f64) -> f64 {
    if z >= 0.0 {
        (-z).exp().ln_1p()
    } else {
        -z + z.exp().ln_1p()
    }
}

/// `1 / (1 + exp(z))`, i.e. sigmoid(-z), without overflow.
fn sigmoid_neg(z: f64) -> f64 {
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

impl Problem for LogisticProblem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn loss(&self, w: &Vector) -> f64 {
        assert_eq!(w.dim(), self.dim);
        let n = self.features.len() as f64;
        let mut acc = 0.0;
        for (x, y) in self.features.iter().zip(&self.labels) {
            let margin = y * x.dot(w).expect("dims validated");
            acc += softplus_neg(margin);
        }
        acc / n + 0.5 * self.l2_reg * w.dot(w).expect("same vector")
    }

    fn grad(&self, w: &Vector) -> Vector {
        assert_eq!(w.dim(), self.dim);
        let n = self.features.len() as f64;
        let mut acc = Vector::zeros(self.dim);
        for (x, y) in self.features.iter().zip(&self.labels) {
            let margin = y * x.dot(w).expect("dims validated");
            // d/dw log(1+exp(-y x.w)) = -y sigmoid(-y x.w) x
            acc.axpy(-y * sigmoid_neg(margin) / n, x);
        }
        acc.axpy(self.l2_reg, w);
        Vector::new(acc.into_vec()).expect("finite gradient")
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn optimum(&self) -> f64 {
        self.optimum
    }

    fn description(&self) -> String {
        format!(
            "logistic n={} d={} l2_reg={}",
            self.features.len(),
            self.dim,
            self.l2_reg
        )
    }
}

/// Largest eigenvalue of `(1/n) X^T X` by power iteration with a
/// deterministic seeded start.
fn gram_top_eigenvalue(features: &[Vector]) -> f64 {
    let d = features[0].dim();
    let n = features.len() as f64;
    // gram[i][j] = (1/n) sum_k x_k[i] x_k[j]
    let mut gram = vec![vec![0.0f64; d]; d];
    for x in features {
        let xs = x.as_slice();
        for i in 0..d {
            for j in 0..d {
                gram[i][j] += xs[i] * xs[j] / n;
            }
        }
    }
    // fixed literal seed: the start vector must be deterministic
    let mut rng = derive_rng(0x6772_616d, &[domain::DATASET]);
    let mut v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let mut eig = 0.0;
    for _ in 0..1_000 {
        let mut next = vec![0.0f64; d];
        for i in 0..d {
            for j in 0..d {
                next[i] += gram[i][j] * v[j];
            }
        }
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        for x in next.iter_mut() {
            *x /= norm;
        }
        let prev = eig;
        eig = norm;
        v = next;
        if (eig - prev).abs() <= 1e-13 * eig.max(1.0) {
            break;
        }
    }
    eig
}

// placeholder removed below; constant seed for the power-iteration start
fn x9ra_m_seed() -> u64 {
    0x6772616d // "gram"
}

/// Central finite differences `(loss(w + h e_i) - loss(w - h e_i)) / 2h`,
/// the gradient-verification oracle.
pub fn finite_diff_grad(p: &dyn Problem, w: &Vector, h: f64) -> Vector {
    assert!(h > 0.0, "step must be positive");
    let mut out = Vec::with_capacity(w.dim());
    for i in 0..w.dim() {
        let mut plus = w.clone().into_vec();
        plus[i] += h;
        let mut minus = w.clone().into_vec();
        minus[i] -= h;
        let lp = p.loss(&Vector::new(plus).unwrap());
        let lm = p.loss(&Vector::new(minus).unwrap());
        out.push((lp - lm) / (2.0 * h));
    }
    Vector::new(out).expect("finite differences finite")
}

/// Synthetic logistic dataset: features are standard Gaussian, labels are
/// drawn from a ground-truth logistic model, so the data is realistically
/// non-separable.
pub fn synthetic_logistic_dataset(
    examples: usize,
    dim: usize,
    seed: u64,
) -> Result<(Vec<Vector>, Vec<f64>)> {
    if examples == 0 || dim == 0 {
        return Err(CoreError::InvalidParameter {
            name: "dataset shape",
            reason: format!("need examples >= 1 and dim >= 1, got {examples} x {dim}"),
        });
    }
    let mut rng = derive_rng(seed, &[domain::DATASET]);
    let truth: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let mut features = Vec::with_capacity(examples);
    let mut labels = Vec::with_capacity(examples);
    for _ in 0..examples {
        let x: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let z: f64 = x.iter().zip(&truth).map(|(a, b)| a * b).sum();
        let p_plus = 1.0 - sigmoid_neg(-z); // sigmoid(z)
        let y = if rng.random::<f64>() < p_plus { 1.0 } else { -1.0 };
        features.push(Vector::new(x)?);
        labels.push(y);
    }
    Ok((features, labels))
}

/// Loads rows of `label feature...` from a delimited text file. Fields are
/// separated by commas or whitespace; blank lines and lines starting with
/// `#` are skipped. Labels must be +1 or -1.
pub fn load_labeled_rows(path: &Path) -> Result<(Vec<Vector>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CoreError::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = if line.contains(',') {
            line.split(',').map(str::trim).filter(|f| !f.is_empty()).collect()
        } else {
            line.split_whitespace().collect()
        };
        if fields.len() < 2 {
            return Err(CoreError::Data(format!(
                "line {}: need a label and at least one feature",
                lineno + 1
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| CoreError::Data(format!("line {}: bad number {s:?}", lineno + 1)))
        };
        labels.push(parse(fields[0])?);
        let row: Result<Vec<f64>> = fields[1..].iter().map(|f| parse(f)).collect();
        features.push(Vector::new(row?)?);
    }
    if features.is_empty() {
        return Err(CoreError::Data("no data rows found".into()));
    }
    Ok((features, labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::new(xs.to_vec()).unwrap()
    }

    #[test]
    fn quadratic_examples() {
        let p = QuadraticProblem::new(vec![1.0]).unwrap();
        let w = v(&[2.0]);
        assert_eq!(p.loss(&w), 2.0);
        assert_eq!(p.grad(&w), v(&[2.0]));
        assert_eq!(p.smoothness(), 1.0);
        assert_eq!(p.optimum(), 0.0);

        assert_eq!(p.loss(&Vector::zeros(1)), 0.0);
        assert_eq!(p.grad(&Vector::zeros(1)), Vector::zeros(1));

        let p2 = QuadraticProblem::new(vec![1.0, 4.0]).unwrap();
        assert_eq!(p2.smoothness(), 4.0);

        assert!(QuadraticProblem::new(vec![1.0, 0.0]).is_err());
        assert!(QuadraticProblem::new(vec![]).is_err());
    }

    #[test]
    fn spectrum_constructor() {
        let p = QuadraticProblem::with_spectrum(0.1, 1.0, 16).unwrap();
        assert_eq!(p.dim(), 16);
        assert_eq!(p.eigenvalues()[0], 0.1);
        assert_eq!(p.eigenvalues()[15], 1.0);
        assert_eq!(p.smoothness(), 1.0);
    }

    #[test]
    fn logistic_single_example() {
        // x = (1), y = +1, w = 0: loss = log 2, grad = (-0.5)
        let p = LogisticProblem::new(vec![v(&[1.0])], vec![1.0], 0.0).unwrap();
        let w = Vector::zeros(1);
        assert!((p.loss(&w) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((p.grad(&w)[0] - (-0.5)).abs() < 1e-15);
    }

    #[test]
    fn logistic_separated_limit() {
        // over a strongly positive margin the loss vanishes
        let p = LogisticProblem::new(vec![v(&[1.0]), v(&[2.0])], vec![1.0, 1.0], 0.0).unwrap();
        assert!(p.loss(&v(&[400.0])) < 1e-170);
    }

    #[test]
    fn logistic_shape_errors() {
        assert!(LogisticProblem::new(vec![v(&[1.0])], vec![1.0, -1.0], 0.0).is_err());
        assert!(LogisticProblem::new(vec![v(&[1.0]), v(&[1.0, 2.0])], vec![1.0, -1.0], 0.0).is_err());
        assert!(LogisticProblem::new(vec![v(&[1.0])], vec![0.5], 0.0).is_err());
        assert!(LogisticProblem::new(vec![Vector::zeros(2)], vec![1.0], 0.0).is_err());
    }

    fn fixture() -> LogisticProblem {
        let (x, y) = synthetic_logistic_dataset(120, 5, 42).unwrap();
        LogisticProblem::new(x, y, 0.05).unwrap()
    }

    #[test]
    fn finite_diff_matches_quadratic() {
        let p = QuadraticProblem::new(vec![1.0]).unwrap();
        let fd = finite_diff_grad(&p, &v(&[2.0]), 1e-6);
        assert!((fd[0] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn finite_diff_matches_logistic() {
        let p = LogisticProblem::new(vec![v(&[1.0])], vec![1.0], 0.0).unwrap();
        let fd = finite_diff_grad(&p, &Vector::zeros(1), 1e-6);
        assert!((fd[0] - (-0.5)).abs() < 1e-9);

        let p = fixture();
        let mut rng = derive_rng(7, &[0xF1]);
        for _ in 0..10 {
            let w = Vector::new(
                (0..p.dim()).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect(),
            )
            .unwrap();
            let analytic = p.grad(&w);
            let fd = finite_diff_grad(&p, &w, 1e-6);
            let rel = analytic.sub(&fd).l2_norm() / analytic.l2_norm().max(1e-12);
            assert!(rel <= 1e-5, "relative error {rel}");
        }
    }

    #[test]
    fn smoothness_certificate_and_lower_bound() {
        // L(v) - L(w) - g(w).(v - w) <= L/2 ||v - w||^2 + 1e-9, and the loss
        // never undercuts the cached optimum.
        let quad = QuadraticProblem::with_spectrum(0.2, 2.0, 6).unwrap();
        let logi = fixture();
        let problems: Vec<&dyn Problem> = vec![&quad, &logi];
        let mut rng = derive_rng(13, &[0xF2]);
        for p in problems {
            let l = p.smoothness();
            for _ in 0..10_000 {
                let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
                    Vector::new(
                        (0..p.dim()).map(|_| rng.random::<f64>() * 6.0 - 3.0).collect(),
                    )
                    .unwrap()
                };
                let w = draw(&mut rng);
                let u = draw(&mut rng);
                let gap = p.loss(&u)
                    - p.loss(&w)
                    - p.grad(&w).dot(&u.sub(&w)).unwrap();
                let dist_sq = u.sub(&w).dot(&u.sub(&w)).unwrap();
                assert!(gap <= 0.5 * l * dist_sq + 1e-9, "certificate violated: {gap}");
                assert!(p.loss(&w) >= p.optimum() - 1e-9);
            }
        }
    }

    #[test]
    fn logistic_optimum_is_stationary() {
        let p = fixture();
        assert!(p.optimum().is_finite());
        // re-solve and confirm the cached loss is reproducible
        let p2 = {
            let (x, y) = synthetic_logistic_dataset(120, 5, 42).unwrap();
            LogisticProblem::new(x, y, 0.05).unwrap()
        };
        assert_eq!(p.optimum(), p2.optimum());
    }

    #[test]
    fn dataset_generation_is_deterministic() {
        let (x1, y1) = synthetic_logistic_dataset(50, 3, 9).unwrap();
        let (x2, y2) = synthetic_logistic_dataset(50, 3, 9).unwrap();
        assert_eq!(x1, x2);
        assert_eq!(y1, y2);
        let (x3, _) = synthetic_logistic_dataset(50, 3, 10).unwrap();
        assert_ne!(x1, x3);
    }

    #[test]
    fn loader_parses_comma_and_whitespace() {
        let dir = std::env::temp_dir();
        let path = dir.join("mbclip_core_loader_test.txt");
        std::fs::write(&path, "# comment\n+1, 0.5, -1.5\n-1 2.0 3.0\n\n").unwrap();
        let (x, y) = load_labeled_rows(&path).unwrap();
        std::fs::remove_file(&path).ok();
        assert_eq!(y, vec![1.0, -1.0]);
        assert_eq!(x[0], v(&[0.5, -1.5]));
        assert_eq!(x[1], v(&[2.0, 3.0]));
    }

    use crate::rng::derive_rng;
}
