//! Compressed modes: spatially localized approximate eigenfunctions of a
//! 1D free-electron Hamiltonian.
//!
//! The operator is H = -(1/2) * Laplacian on [0, 50] with n grid points,
//! periodic boundary, second-order stencil (-1, 2, -1) / h^2. The objective
//! is f(X) = tr(X'HX) with gradient 2HX.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::ProblemSpec;
use crate::error::{Error, Result};

const DOMAIN_LENGTH: f64 = 50.0;

/// The discretized Hamiltonian matrix itself (exposed for tests).
pub(crate) fn hamiltonian(n: usize) -> DMatrix<f64> {
    let h = DOMAIN_LENGTH / n as f64;
    let diag = 1.0 / (h * h);
    let off = -0.5 / (h * h);
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = diag;
        m[(i, (i + 1) % n)] = off;
        m[(i, (n + i - 1) % n)] = off;
    }
    m
}

/// Largest eigenvalue of the periodic stencil, exact:
/// max_k (1 - cos(2 pi k / n)) / h^2.
fn spectral_norm(n: usize) -> f64 {
    let h = DOMAIN_LENGTH / n as f64;
    (0..n)
        .map(|k| (1.0 - (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos()) / (h * h))
        .fold(0.0, f64::max)
}

pub fn cm_problem(n: usize, r: usize, mu: f64) -> Result<ProblemSpec> {
    if n < 4 {
        return Err(Error::InvalidConfig(format!(
            "compressed modes need n >= 4 grid points, got {n}"
        )));
    }
    let h = Arc::new(hamiltonian(n));
    let lipschitz = 2.0 * spectral_norm(n);
    let h_value = Arc::clone(&h);
    let h_grad = Arc::clone(&h);
    ProblemSpec::new(
        format!("cm(n={n},r={r},mu={mu})"),
        n,
        r,
        mu,
        Some(lipschitz),
        Arc::new(move |x: &DMatrix<f64>| {
            let hx = &*h_value * x;
            x.dot(&hx)
        }),
        Arc::new(move |x: &DMatrix<f64>| &*h_grad * x * 2.0),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::finite_diff_gradient;
    use crate::stiefel::random_stiefel;

    #[test]
    fn rows_of_the_stencil_sum_to_zero() {
        let h = hamiltonian(16);
        for i in 0..16 {
            let row_sum: f64 = (0..16).map(|j| h[(i, j)]).sum();
            assert!(row_sum.abs() < 1e-12, "row {i} sums to {row_sum}");
        }
        // symmetric
        assert!((&h - h.transpose()).norm() < 1e-14);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let problem = cm_problem(24, 3, 0.1).unwrap();
        for seed in 0..3u64 {
            let x = random_stiefel(24, 3, seed).unwrap();
            let fd = finite_diff_gradient(&problem, x.matrix(), 1e-5);
            let g = problem.grad(x.matrix());
            let rel = (&fd - &g).norm() / g.norm().max(1.0);
            assert!(rel <= 1e-6, "relative error {rel:.3e}");
        }
    }

    #[test]
    fn lipschitz_hint_bounds_the_spectrum() {
        let n = 20;
        let problem = cm_problem(n, 2, 0.0).unwrap();
        let h = hamiltonian(n);
        let eig = h.symmetric_eigen();
        let max = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
        let hint = problem.lipschitz_hint.unwrap();
        assert!((hint - 2.0 * max).abs() <= 1e-10 * hint);
    }

    #[test]
    fn rejects_tiny_grids() {
        assert!(cm_problem(3, 1, 0.1).is_err());
    }
}
