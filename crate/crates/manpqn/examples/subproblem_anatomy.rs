//! Anatomy of one descent-direction computation: the tangent-space
//! subproblem, its dual residual, and the semismooth Newton solve, checked
//! against the exact sign-enumeration oracle on a small instance.

use manpqn::subsolver::{
    oracle_subproblem_small, residual_e, solve_subproblem, SsnConfig, SubproblemInput,
};
use manpqn::{random_stiefel, DiagonalMetric, SolverConfig};
use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use rand_distr::StandardNormal;

fn main() -> manpqn::Result<()> {
    let cfg = SolverConfig::default();
    let (n, mu) = (6, 0.3);
    let mut rng = StdRng::seed_from_u64(4);
    let x = random_stiefel(n, 1, 8)?;
    let g = DMatrix::<f64>::from_fn(n, 1, |_, _| rng.sample(StandardNormal));
    let metric = DiagonalMetric::uniform(n, cfg.delta)?;
    let inp = SubproblemInput::new(&x, &g, &metric, mu)?;

    let lambda0 = DMatrix::zeros(1, 1);
    println!(
        "initial dual residual ||E(0)|| = {:.3e}",
        residual_e(&inp, &lambda0)?.norm()
    );

    let result = solve_subproblem(&inp, &lambda0, &SsnConfig::default())?;
    println!(
        "semismooth Newton: {} iterations, residual {:.3e}, converged = {}",
        result.ssn_iters, result.residual, result.converged
    );
    println!(
        "direction: ||V|| = {:.4}, tangency residual {:.3e}",
        result.v.norm(),
        result.v.tangency_residual(&x)
    );

    let oracle = oracle_subproblem_small(&inp)?;
    println!(
        "agreement with the 3^n sign-enumeration oracle: {:.3e}",
        (result.v.matrix() - &oracle).amax()
    );
    Ok(())
}
