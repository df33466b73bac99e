//! Joint diagonalization with an l1 term:
//! f(X) = -sum_l ||diag(X'A_l X)||_F^2 over St(n, r) for symmetric A_l.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use rand_distr::StandardNormal;

use super::{power_iteration_psd, ProblemSpec};
use crate::error::{Error, Result};

fn diag_of(m: &DMatrix<f64>) -> DVector<f64> {
    m.diagonal()
}

fn value(mats: &[DMatrix<f64>], x: &DMatrix<f64>) -> f64 {
    let mut acc = 0.0;
    for a in mats {
        let inner = x.transpose() * (a * x);
        acc += diag_of(&inner).norm_squared();
    }
    -acc
}

/// Euclidean gradient: -4 sum_l A_l X diag(X'A_l X).
fn euclid_grad(mats: &[DMatrix<f64>], x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(x.nrows(), x.ncols());
    for a in mats {
        let ax = a * x;
        let d = diag_of(&(x.transpose() * &ax));
        let mut scaled = ax;
        for j in 0..x.ncols() {
            let dj = d[j];
            for i in 0..x.nrows() {
                scaled[(i, j)] *= dj;
            }
        }
        g += scaled;
    }
    g * -4.0
}

/// The Riemannian gradient in its explicit form
/// `-4 sum_l (A_l X D_l - X sym(X'A_l X D_l))` with `D_l = diag(X'A_l X)`;
/// identical to projecting the Euclidean gradient onto the tangent space.
pub fn jd_riemannian_gradient(mats: &[DMatrix<f64>], x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(x.nrows(), x.ncols());
    for a in mats {
        let ax = a * x;
        let xax = x.transpose() * &ax;
        let d = diag_of(&xax);
        let mut axd = ax;
        for j in 0..x.ncols() {
            let dj = d[j];
            for i in 0..x.nrows() {
                axd[(i, j)] *= dj;
            }
        }
        let inner = &xax
            * DMatrix::from_fn(d.len(), d.len(), |i, j| if i == j { d[i] } else { 0.0 });
        let sym = (&inner + inner.transpose()) * 0.5;
        g += axd - x * sym;
    }
    g * -4.0
}

pub fn jointdiag_problem(mats: &[DMatrix<f64>], r: usize, mu: f64) -> Result<ProblemSpec> {
    if mats.is_empty() {
        return Err(Error::InvalidConfig(
            "joint diagonalization needs at least one matrix".into(),
        ));
    }
    let n = mats[0].nrows();
    for (l, a) in mats.iter().enumerate() {
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::shape(
                format!("{n} x {n}"),
                format!("matrix {l}: {} x {}", a.nrows(), a.ncols()),
            ));
        }
        let asym = (a - a.transpose()).norm();
        if asym > 1e-10 * (1.0 + a.norm()) {
            return Err(Error::InvalidConfig(format!(
                "matrix {l} is not symmetric (deviation {asym:.3e})"
            )));
        }
    }
    let mats = Arc::new(mats.to_vec());
    // Conservative curvature bound on the feasible set: each summand
    // -||diag(X'A X)||^2 has second derivatives bounded by 12 ||A||_2^2
    // along unit directions when ||X||_2 <= 1.
    let lipschitz = 12.0
        * mats
            .iter()
            .map(|a| power_iteration_psd(n, |v| a * (a * v), 1e-8, 10_000))
            .sum::<f64>();
    let mats_value = Arc::clone(&mats);
    let mats_grad = Arc::clone(&mats);
    ProblemSpec::new(
        format!("jd(n={n},r={r},N={},mu={mu})", mats.len()),
        n,
        r,
        mu,
        Some(lipschitz),
        Arc::new(move |x: &DMatrix<f64>| value(&mats_value, x)),
        Arc::new(move |x: &DMatrix<f64>| euclid_grad(&mats_grad, x)),
    )
}

/// N random symmetric matrices A_i = P' L_i P sharing one random orthogonal
/// P, with i.i.d. standard normal diagonals L_i. Pure function of the seed.
pub fn gen_jointdiag_random(n: usize, count: usize, seed: u64) -> Vec<DMatrix<f64>> {
    let mut rng = StdRng::seed_from_u64(seed);
    let gauss = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let (mut p, rmat) = gauss.qr().unpack();
    for j in 0..n {
        if rmat[(j, j)] < 0.0 {
            for i in 0..n {
                p[(i, j)] = -p[(i, j)];
            }
        }
    }
    (0..count)
        .map(|_| {
            let lambda = DVector::<f64>::from_fn(n, |_, _| rng.sample(StandardNormal));
            let mut scaled = p.clone();
            for i in 0..n {
                let li = lambda[i];
                for j in 0..n {
                    scaled[(i, j)] *= li;
                }
            }
            let a = p.transpose() * scaled;
            (&a + a.transpose()) * 0.5
        })
        .collect()
}
