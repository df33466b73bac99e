//! Benchmark objectives and instance generators.
//!
//! Each problem provides the smooth part f, its Euclidean gradient, the l1
//! weight mu and an optional Lipschitz hint for the baselines' stepsize.

mod cm;
mod jointdiag;
mod matrix_market;
mod spca;

pub use cm::cm_problem;
pub use jointdiag::{gen_jointdiag_random, jd_riemannian_gradient, jointdiag_problem};
pub use matrix_market::{load_matrix_market, SparseMatrix};
pub use spca::{gen_spca_random, spca_problem, spca_problem_sparse};

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::stiefel::StiefelPoint;

type ValueFn = Arc<dyn Fn(&DMatrix<f64>) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&DMatrix<f64>) -> DMatrix<f64> + Send + Sync>;

/// A composite objective f(X) + mu*||X||_1 over St(n, r). The closures are
/// immutable and shareable across concurrent runs.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub n: usize,
    pub r: usize,
    pub mu: f64,
    pub lipschitz_hint: Option<f64>,
    f_value: ValueFn,
    f_grad: GradFn,
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("r", &self.r)
            .field("mu", &self.mu)
            .field("lipschitz_hint", &self.lipschitz_hint)
            .finish()
    }
}

impl ProblemSpec {
    pub fn new(
        name: impl Into<String>,
        n: usize,
        r: usize,
        mu: f64,
        lipschitz_hint: Option<f64>,
        f_value: ValueFn,
        f_grad: GradFn,
    ) -> Result<Self> {
        if r == 0 || r > n {
            return Err(Error::shape(
                "dimensions with 1 <= r <= n",
                format!("n = {n}, r = {r}"),
            ));
        }
        if !(mu >= 0.0) {
            return Err(Error::InvalidConfig(format!("mu must be >= 0, got {mu}")));
        }
        Ok(Self {
            name: name.into(),
            n,
            r,
            mu,
            lipschitz_hint,
            f_value,
            f_grad,
        })
    }

    /// Smooth part f(X).
    pub fn f(&self, x: &DMatrix<f64>) -> f64 {
        (self.f_value)(x)
    }

    /// Euclidean gradient of f.
    pub fn grad(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        (self.f_grad)(x)
    }

    /// Full objective F(X) = f(X) + mu*||X||_1.
    pub fn objective(&self, x: &DMatrix<f64>) -> f64 {
        self.f(x) + self.mu * x.iter().map(|v| v.abs()).sum::<f64>()
    }

    pub(crate) fn check_shape(&self, x: &StiefelPoint) -> Result<()> {
        if x.n() != self.n || x.r() != self.r {
            return Err(Error::shape(
                format!("{} x {}", self.n, self.r),
                format!("{} x {}", x.n(), x.r()),
            ));
        }
        Ok(())
    }
}

/// Fraction of entries with |x| <= threshold.
pub fn sparsity(x: &DMatrix<f64>, threshold: f64) -> f64 {
    let total = x.nrows() * x.ncols();
    if total == 0 {
        return 0.0;
    }
    let zeros = x.iter().filter(|v| v.abs() <= threshold).count();
    zeros as f64 / total as f64
}

/// Central finite differences of f, entry by entry (test oracle).
pub fn finite_diff_gradient(problem: &ProblemSpec, x: &DMatrix<f64>, h_step: f64) -> DMatrix<f64> {
    assert!(h_step > 0.0, "finite-difference step must be positive");
    let mut grad = DMatrix::zeros(x.nrows(), x.ncols());
    let mut xp = x.clone();
    for j in 0..x.ncols() {
        for i in 0..x.nrows() {
            let orig = x[(i, j)];
            xp[(i, j)] = orig + h_step;
            let fp = problem.f(&xp);
            xp[(i, j)] = orig - h_step;
            let fm = problem.f(&xp);
            xp[(i, j)] = orig;
            grad[(i, j)] = (fp - fm) / (2.0 * h_step);
        }
    }
    grad
}

/// Largest eigenvalue of a symmetric PSD operator given by `apply`, by power
/// iteration from the normalized all-ones vector (deterministic).
pub(crate) fn power_iteration_psd<F>(n: usize, apply: F, tol: f64, max_iter: usize) -> f64
where
    F: Fn(&nalgebra::DVector<f64>) -> nalgebra::DVector<f64>,
{
    let mut v = nalgebra::DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let w = apply(&v);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / norm;
        if (next - lambda).abs() <= tol * next.abs().max(1.0) {
            return next.max(norm);
        }
        lambda = next;
    }
    lambda
}
