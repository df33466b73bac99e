//! Sparse PCA with data loaded from a Matrix Market file (the format used
//! by the UF sparse matrix collection).

use std::path::Path;

use manpqn::{load_matrix_market, manpqn_solve, random_stiefel, spca_problem, SolverConfig};

fn main() -> manpqn::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/rect.mtx");
    let a = load_matrix_market(&path)?;
    println!(
        "loaded {}: {} x {} with {} stored entries",
        path.display(),
        a.nrows(),
        a.ncols(),
        a.nnz()
    );

    let (r, mu) = (3, 0.2);
    let problem = spca_problem(&a.to_dense(), r, mu)?;
    let x0 = random_stiefel(a.ncols(), r, 1)?;
    let trace = manpqn_solve(&problem, &x0, &SolverConfig::default())?;
    println!(
        "manpqn: {} iterations, F = {:.4}, sparsity = {:.3}, converged = {}",
        trace.total_iters, trace.f_final, trace.sparsity, trace.converged
    );
    Ok(())
}
