//! Composite optimization over the Stiefel manifold:
//!
//! ```text
//! min F(X) = f(X) + mu * ||X||_1    s.t.  X'X = I_r,
//! ```
//!
//! solved by a Riemannian proximal quasi-Newton method (ManPQN) and by the
//! proximal gradient baselines ManPG, ManPG-Ada and NLS-ManPG. The descent
//! direction comes from a tangent-space subproblem under a diagonal
//! quasi-Newton metric, solved in the dual by a regularized semismooth
//! Newton iteration; steps are accepted by a nonmonotone line search and
//! applied through the polar (SVD) retraction.
//!
//! Three benchmark problems ship with the crate — compressed modes of a 1D
//! Schroedinger operator, sparse PCA (random or Matrix Market data), and
//! regularized joint diagonalization — together with a harness that averages
//! batches of seeded instances into comparison tables.
//!
//! Start from the runnable programs in `examples/`, or the `manpqn` binary
//! for the command-line interface.

pub mod bench;
pub mod driver;
pub mod error;
pub mod problems;
pub mod prox;
pub mod qn;
pub mod stiefel;
pub mod subsolver;

pub use bench::{
    build_instance, emit_csv, emit_trace, run_experiment, Algorithm, ExperimentConfig,
    ProblemKind, ReportRow,
};
pub use driver::{
    is_eps_stationary, manpg_solve, manpqn_solve, nonmonotone_accept, FHistory, IterRecord,
    PgVariant, RunTrace, SolverConfig,
};
pub use error::{Error, Result};
pub use problems::{
    cm_problem, finite_diff_gradient, gen_jointdiag_random, gen_spca_random,
    jointdiag_problem, load_matrix_market, sparsity, spca_problem, spca_problem_sparse,
    ProblemSpec, SparseMatrix,
};
pub use prox::L1Regularizer;
pub use qn::{DiagonalMetric, PairUpdate, QnMemory};
pub use stiefel::{feasibility_error, random_stiefel, StiefelPoint, TangentVector};
pub use subsolver::{
    apply_dual_jacobian, cg_solve, oracle_subproblem_small, residual_e, solve_subproblem,
    v_of_lambda, SsnConfig, SubproblemInput, SubproblemResult,
};
