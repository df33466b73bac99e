//! Sparse PCA on randomly generated data: maximize explained variance under
//! orthonormality while an l1 penalty drives loadings to exact zeros.
//!
//! Compares the proximal quasi-Newton solver against the plain proximal
//! gradient baseline from the same starting point.

use manpqn::{
    gen_spca_random, manpg_solve, manpqn_solve, random_stiefel, spca_problem, PgVariant,
    SolverConfig,
};

fn main() -> manpqn::Result<()> {
    let (m, n, r, mu) = (50, 200, 5, 0.8);
    let a = gen_spca_random(m, n, 7);
    let problem = spca_problem(&a, r, mu)?;
    println!(
        "sparse PCA: n = {n}, r = {r}, mu = {mu}, Lipschitz estimate {:.3}",
        problem.lipschitz_hint.unwrap()
    );

    let x0 = random_stiefel(n, r, 99)?;
    let cfg = SolverConfig::default();

    let qn = manpqn_solve(&problem, &x0, &cfg)?;
    let pg = manpg_solve(&problem, &x0, &cfg, PgVariant::Plain)?;

    for trace in [&qn, &pg] {
        println!(
            "{:>9}: {:>5} iterations, F = {:>9.4}, sparsity = {:.3}, {:.3}s",
            trace.algorithm, trace.total_iters, trace.f_final, trace.sparsity, trace.cpu_seconds
        );
    }
    println!(
        "speedup: {:.1}x fewer outer iterations",
        pg.total_iters as f64 / qn.total_iters.max(1) as f64
    );
    Ok(())
}
