//! Sparse principal component analysis:
//! f(X) = -tr(X'A'AX), gradient -2A'AX, over St(n, r).

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use rand_distr::StandardNormal;

use super::{power_iteration_psd, ProblemSpec, SparseMatrix};
use crate::error::{Error, Result};

/// Dense data matrix; A'A is formed once.
pub fn spca_problem(a: &DMatrix<f64>, r: usize, mu: f64) -> Result<ProblemSpec> {
    let n = a.ncols();
    if r > n {
        return Err(Error::shape(
            format!("r <= {n} columns"),
            format!("r = {r}"),
        ));
    }
    let ata = Arc::new(a.transpose() * a);
    let lipschitz = {
        let ata = Arc::clone(&ata);
        2.0 * power_iteration_psd(n, move |v| &*ata * v, 1e-8, 20_000)
    };
    let ata_value = Arc::clone(&ata);
    let ata_grad = Arc::clone(&ata);
    ProblemSpec::new(
        format!("spca(n={n},r={r},mu={mu})"),
        n,
        r,
        mu,
        Some(lipschitz),
        Arc::new(move |x: &DMatrix<f64>| -x.dot(&(&*ata_value * x))),
        Arc::new(move |x: &DMatrix<f64>| &*ata_grad * x * -2.0),
    )
}

/// Sparse data matrix; A'A is never densified, products compose A and A'.
pub fn spca_problem_sparse(a: &SparseMatrix, r: usize, mu: f64) -> Result<ProblemSpec> {
    let n = a.ncols();
    if r > n {
        return Err(Error::shape(
            format!("r <= {n} columns"),
            format!("r = {r}"),
        ));
    }
    let a = Arc::new(a.clone());
    let apply_ata = {
        let a = Arc::clone(&a);
        move |x: &DMatrix<f64>| -> DMatrix<f64> {
            let mut out = DMatrix::zeros(x.nrows(), x.ncols());
            let mut col = DVector::zeros(x.nrows());
            for j in 0..x.ncols() {
                col.copy_from(&x.column(j));
                let ax = a.mat_vec(&col);
                out.set_column(j, &a.mat_t_vec(&ax));
            }
            out
        }
    };
    let lipschitz = {
        let a = Arc::clone(&a);
        2.0 * power_iteration_psd(
            n,
            move |v| a.mat_t_vec(&a.mat_vec(v)),
            1e-8,
            20_000,
        )
    };
    let apply_value = apply_ata.clone();
    let apply_grad = apply_ata;
    ProblemSpec::new(
        format!("spca-mtx(n={n},r={r},mu={mu})"),
        n,
        r,
        mu,
        Some(lipschitz),
        Arc::new(move |x: &DMatrix<f64>| -x.dot(&apply_value(x))),
        Arc::new(move |x: &DMatrix<f64>| apply_grad(x) * -2.0),
    )
}

/// m x n data with i.i.d. standard normal entries, then every column shifted
/// to zero mean and scaled to unit 2-norm. Pure function of the seed.
pub fn gen_spca_random(m: usize, n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut a = DMatrix::from_fn(m, n, |_, _| rng.sample(StandardNormal));
    for j in 0..n {
        let mean = a.column(j).sum() / m as f64;
        for i in 0..m {
            a[(i, j)] -= mean;
        }
        let norm = a.column(j).norm();
        if norm > 0.0 {
            for i in 0..m {
                a[(i, j)] /= norm;
            }
        }
    }
    a
}
