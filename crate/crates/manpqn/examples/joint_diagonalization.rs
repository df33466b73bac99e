//! Approximate joint diagonalization of several commuting symmetric
//! matrices with an l1 term that sparsifies the recovered basis.

use manpqn::{
    gen_jointdiag_random, jointdiag_problem, manpg_solve, manpqn_solve, random_stiefel,
    PgVariant, SolverConfig,
};

fn main() -> manpqn::Result<()> {
    let (n, count, r, mu) = (50, 5, 4, 1.0);
    let mats = gen_jointdiag_random(n, count, 0);
    let problem = jointdiag_problem(&mats, r, mu)?;
    let x0 = random_stiefel(n, r, 5)?;

    let cfg = SolverConfig {
        max_iter: 10_000,
        ..SolverConfig::default()
    };
    let qn = manpqn_solve(&problem, &x0, &cfg)?;
    let nls = manpg_solve(&problem, &x0, &cfg, PgVariant::Nls)?;

    println!("joint diagonalization of {count} random {n}x{n} matrices, r = {r}, mu = {mu}");
    for trace in [&qn, &nls] {
        println!(
            "{:>9}: {:>5} iterations, F = {:>10.4}, sparsity = {:.3}, converged = {}",
            trace.algorithm, trace.total_iters, trace.f_final, trace.sparsity, trace.converged
        );
    }

    // Off-diagonal leakage of X'A_1X measures how far from diagonal we are.
    let x = &qn.final_x;
    let inner = x.transpose() * &mats[0] * x;
    let diag_energy: f64 = (0..r).map(|i| inner[(i, i)] * inner[(i, i)]).sum();
    let off: f64 = inner.norm_squared() - diag_energy;
    println!(
        "first matrix: off-diagonal energy {:.3e} vs diagonal energy {:.3e}",
        off, diag_energy
    );
    Ok(())
}
