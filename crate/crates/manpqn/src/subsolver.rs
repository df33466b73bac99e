//! Tangent-space subproblem solver.
//!
//! At a point X with diagonal metric D = diag(d) and Euclidean gradient g,
//! the descent direction solves
//!
//! ```text
//! min_V  <g, V> + 1/2 tr(V'DV) + mu ||X + V||_1   s.t.  V'X + X'V = 0.
//! ```
//!
//! Dualizing the tangency constraint with a symmetric multiplier L gives the
//! closed-form primal candidate
//!
//! ```text
//! V(L) = prox(X - D^{-1}(g - 2 X L)) - X,
//! ```
//!
//! and the dual residual E(L) = V(L)'X + X'V(L), a monotone Lipschitz map on
//! symmetric matrices. E(L) = 0 is solved by a regularized semismooth Newton
//! iteration whose Newton systems are handled matrix-free by conjugate
//! gradients in the space of symmetric r x r matrices.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::prox::L1Regularizer;
use crate::qn::DiagonalMetric;
use crate::stiefel::{StiefelPoint, TangentVector};

/// Inputs of one subproblem instance. Borrowed: a solver invocation owns its
/// scratch space, distinct invocations are independent.
pub struct SubproblemInput<'a> {
    x: &'a StiefelPoint,
    g: &'a DMatrix<f64>,
    metric: &'a DiagonalMetric,
    l1: L1Regularizer,
}

impl<'a> SubproblemInput<'a> {
    pub fn new(
        x: &'a StiefelPoint,
        g: &'a DMatrix<f64>,
        metric: &'a DiagonalMetric,
        mu: f64,
    ) -> Result<Self> {
        if g.shape() != x.matrix().shape() {
            return Err(Error::shape(
                format!("{} x {}", x.n(), x.r()),
                format!("{} x {}", g.nrows(), g.ncols()),
            ));
        }
        if metric.len() != x.n() {
            return Err(Error::InvalidMetric(format!(
                "metric length {} does not match n = {}",
                metric.len(),
                x.n()
            )));
        }
        Ok(Self {
            x,
            g,
            metric,
            l1: L1Regularizer::new(mu)?,
        })
    }

    pub fn x(&self) -> &StiefelPoint {
        self.x
    }

    pub fn mu(&self) -> f64 {
        self.l1.mu()
    }

    /// Prox argument B(L) = X - D^{-1}(g - 2 X L).
    fn prox_argument(&self, lambda: &DMatrix<f64>) -> DMatrix<f64> {
        let inner = self.g - self.x.matrix() * lambda * 2.0;
        self.x.matrix() - self.metric.apply_inverse(&inner)
    }

    /// Value of the subproblem objective at V (with the l1 term evaluated at
    /// X + V); used for descent checks.
    pub fn objective(&self, v: &DMatrix<f64>) -> f64 {
        self.g.dot(v) + 0.5 * self.metric.quad_norm_sq(v) + self.l1.value(&(self.x.matrix() + v))
    }
}

/// Configuration of the semismooth Newton loop.
#[derive(Clone, Copy, Debug)]
pub struct SsnConfig {
    /// Stop once ||E(L)||_F falls below this. `None` selects
    /// max(1e-12, 1e-10 * r).
    pub inner_tol: Option<f64>,
    pub max_inner: usize,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
}

impl Default for SsnConfig {
    fn default() -> Self {
        Self {
            inner_tol: None,
            max_inner: 100,
            cg_tol: 1e-8,
            cg_max_iter: 50,
        }
    }
}

impl SsnConfig {
    pub fn tolerance(&self, r: usize) -> f64 {
        self.inner_tol
            .unwrap_or_else(|| (1e-10 * r as f64).max(1e-12))
    }
}

/// Result of one subproblem solve. `lambda` warm-starts the next call.
#[derive(Clone, Debug)]
pub struct SubproblemResult {
    pub v: TangentVector,
    pub lambda: DMatrix<f64>,
    pub ssn_iters: usize,
    pub residual: f64,
    pub converged: bool,
}

/// V(L) = prox(B(L)) - X.
pub fn v_of_lambda(inp: &SubproblemInput, lambda: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_multiplier(inp, lambda)?;
    let b = inp.prox_argument(lambda);
    let y = inp.l1.scaled_prox(&b, inp.metric.d())?;
    Ok(y - inp.x.matrix())
}

/// E(L) = V(L)'X + X'V(L); symmetric by construction, and identical to the
/// tangency residual of V(L).
pub fn residual_e(inp: &SubproblemInput, lambda: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let v = v_of_lambda(inp, lambda)?;
    Ok(constraint_map(inp.x.matrix(), &v))
}

/// A(V) = V'X + X'V.
fn constraint_map(x: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
    let a = x.transpose() * v;
    &a + a.transpose()
}

/// Matrix-free generalized Jacobian of E at the mask of the current prox
/// argument: S -> A(mask .* (2 D^{-1} X S)). Self-adjoint and PSD in the
/// trace inner product.
pub fn apply_dual_jacobian(
    inp: &SubproblemInput,
    mask: &DMatrix<f64>,
    s: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    check_multiplier(inp, s)?;
    if mask.shape() != inp.x.matrix().shape() {
        return Err(Error::shape(
            format!("{} x {}", inp.x.n(), inp.x.r()),
            format!("{} x {}", mask.nrows(), mask.ncols()),
        ));
    }
    let xs = inp.x.matrix() * s * 2.0;
    let mut m = inp.metric.apply_inverse(&xs);
    m.component_mul_assign(mask);
    Ok(constraint_map(inp.x.matrix(), &m))
}

/// Conjugate gradients for `(G + eta I)[d] = -rhs` on symmetric matrices
/// with the trace inner product. `op` must be self-adjoint PSD; its output
/// is checked for symmetry.
pub fn cg_solve<F>(
    op: F,
    rhs: &DMatrix<f64>,
    eta: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(DMatrix<f64>, usize)>
where
    F: Fn(&DMatrix<f64>) -> Result<DMatrix<f64>>,
{
    if !(eta > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "CG regularization must be positive, got {eta}"
        )));
    }
    let rhs_norm = rhs.norm();
    let mut d = DMatrix::zeros(rhs.nrows(), rhs.ncols());
    if rhs_norm == 0.0 {
        return Ok((d, 0));
    }
    let apply = |s: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let gs = op(s)?;
        let asym = (&gs - gs.transpose()).norm();
        if asym > 1e-10 * (1.0 + gs.norm()) {
            return Err(Error::Internal(format!(
                "dual Jacobian returned a non-symmetric matrix (deviation {asym:.3e})"
            )));
        }
        Ok(gs + s * eta)
    };
    // Solve (G + eta I)[d] = -rhs from d = 0, so r0 = -rhs.
    let mut residual = -rhs;
    let mut p = residual.clone();
    let mut rs_old = residual.norm_squared();
    for it in 0..max_iter {
        if rs_old.sqrt() <= tol * rhs_norm {
            return Ok((d, it));
        }
        let ap = apply(&p)?;
        let p_ap = p.dot(&ap);
        if !(p_ap > 0.0) || !p_ap.is_finite() {
            // Curvature breakdown; return the best iterate so far.
            return Ok((d, it));
        }
        let alpha = rs_old / p_ap;
        d += &p * alpha;
        residual -= &ap * alpha;
        let rs_new = residual.norm_squared();
        p = &residual + &p * (rs_new / rs_old);
        rs_old = rs_new;
    }
    Ok((d, max_iter))
}

/// Regularized semismooth Newton on E(L) = 0 with warm start `lambda_init`.
///
/// Each iteration solves `(G + eta I)[d] = -E` by CG with
/// eta = max(1e-10, 0.1 ||E||), accepts the step if the residual shrinks by
/// at least a factor (1 - 1e-4), backtracks up to 10 halvings, and otherwise
/// falls back to the safeguard step L <- L - 0.1/(1 + ||E||) * E. A rejected
/// Newton step also inflates the regularization for the next iteration
/// (the generalized Jacobian can be singular where the prox mask kills
/// rows), and an iteration budget without meaningful progress ends the loop
/// early. Returns the best multiplier seen; never errors on plain
/// non-convergence.
pub fn solve_subproblem(
    inp: &SubproblemInput,
    lambda_init: &DMatrix<f64>,
    cfg: &SsnConfig,
) -> Result<SubproblemResult> {
    check_multiplier(inp, lambda_init)?;
    let r = inp.x.r();
    let tol = cfg.tolerance(r);

    let mut lambda = symmetrize(lambda_init);
    let mut e = residual_e(inp, &lambda)?;
    let mut e_norm = e.norm();
    let mut best_lambda = lambda.clone();
    let mut best_norm = e_norm;
    let mut iters = 0;
    let mut eta_boost = 1.0f64;
    let mut checkpoint = e_norm;
    let mut since_checkpoint = 0usize;

    while e_norm > tol && iters < cfg.max_inner {
        let mask = inp
            .l1
            .jacobian_mask(&inp.prox_argument(&lambda), inp.metric.d())?;
        let eta = (0.1 * eta_boost * e_norm).max(1e-10);
        let newton = cg_solve(
            |s| apply_dual_jacobian(inp, &mask, s),
            &e,
            eta,
            cfg.cg_tol,
            cfg.cg_max_iter,
        );
        let mut accepted = false;
        if let Ok((direction, _)) = newton {
            let mut step = 1.0;
            for _ in 0..=10 {
                let trial = symmetrize(&(&lambda + &direction * step));
                let e_trial = residual_e(inp, &trial)?;
                let trial_norm = e_trial.norm();
                if trial_norm <= (1.0 - 1e-4) * e_norm {
                    lambda = trial;
                    e = e_trial;
                    e_norm = trial_norm;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
        }
        if accepted {
            eta_boost = (eta_boost * 0.25).max(1.0);
        } else {
            eta_boost = (eta_boost * 10.0).min(1e8);
            // Merit-gradient safeguard; E is monotone so -E is a descent
            // direction for ||E||^2 at small steps.
            let c = 0.1 / (1.0 + e_norm);
            lambda = symmetrize(&(&lambda - &e * c));
            e = residual_e(inp, &lambda)?;
            e_norm = e.norm();
        }
        if e_norm < best_norm {
            best_norm = e_norm;
            best_lambda = lambda.clone();
        }
        iters += 1;
        // Require the residual to at least halve every 15 iterations;
        // otherwise it has plateaued (typically at a kink of the prox) and
        // further polishing is wasted work.
        since_checkpoint += 1;
        if best_norm < 0.5 * checkpoint {
            checkpoint = best_norm;
            since_checkpoint = 0;
        } else if since_checkpoint >= 15 {
            break;
        }
    }

    let converged = best_norm <= tol;
    let v_raw = v_of_lambda(inp, &best_lambda)?;
    // Clean round-off so downstream tangency assumptions hold exactly.
    let v = inp.x.project_tangent(&v_raw)?;
    Ok(SubproblemResult {
        v,
        lambda: best_lambda,
        ssn_iters: iters,
        residual: best_norm,
        converged,
    })
}

/// Exact minimizer for r = 1, n <= 8 by enumerating the 3^n sign patterns of
/// x + v (test oracle). Every pattern's KKT candidate is feasible for the
/// tangency constraint, and the true minimizer reproduces itself from its own
/// pattern, so the candidate with the smallest objective is the exact
/// solution.
pub fn oracle_subproblem_small(inp: &SubproblemInput) -> Result<DMatrix<f64>> {
    let n = inp.x.n();
    if inp.x.r() != 1 || n > 8 {
        return Err(Error::Unsupported(
            "enumeration oracle requires r = 1 and n <= 8".into(),
        ));
    }
    let candidates = enumerate_candidates(inp);
    let by_objective = |a: &&PatternCandidate, b: &&PatternCandidate| a.objective.total_cmp(&b.objective);
    let best = candidates
        .iter()
        .filter(|c| c.consistent)
        .min_by(by_objective)
        .or_else(|| candidates.iter().min_by(by_objective))
        .ok_or_else(|| Error::Internal("sign enumeration produced no candidate".into()))?;
    Ok(best.v.clone())
}

struct PatternCandidate {
    v: DMatrix<f64>,
    objective: f64,
    consistent: bool,
}

fn enumerate_candidates(inp: &SubproblemInput) -> Vec<PatternCandidate> {
    let n = inp.x.n();
    let x = inp.x.matrix();
    let g = inp.g;
    let d = inp.metric.d();
    let mu = inp.mu();
    let mut out = Vec::new();
    let total = 3usize.pow(n as u32);
    let mut signs = vec![0i8; n];
    for code in 0..total {
        let mut c = code;
        for sig in signs.iter_mut() {
            *sig = (c % 3) as i8 - 1; // -1, 0, +1
            c /= 3;
        }
        // Zero entries force v_i = -x_i; free entries satisfy
        // v_i = (theta x_i - g_i - mu sigma_i) / d_i with theta from x'v = 0.
        let mut theta_coeff = 0.0;
        let mut theta_rhs = 0.0;
        for i in 0..n {
            let xi = x[(i, 0)];
            if signs[i] == 0 {
                theta_rhs += xi * xi;
            } else {
                theta_coeff += xi * xi / d[i];
                theta_rhs += xi * (g[(i, 0)] + mu * signs[i] as f64) / d[i];
            }
        }
        let theta = if theta_coeff.abs() > 1e-14 {
            theta_rhs / theta_coeff
        } else if theta_rhs.abs() < 1e-12 {
            0.0
        } else {
            continue; // pattern cannot satisfy the constraint
        };
        let mut v = DMatrix::zeros(n, 1);
        let mut consistent = true;
        for i in 0..n {
            let xi = x[(i, 0)];
            if signs[i] == 0 {
                v[(i, 0)] = -xi;
                // multiplier of the l1 subgradient must stay within [-mu, mu]
                let slack = g[(i, 0)] + d[i] * v[(i, 0)] - theta * xi;
                if slack.abs() > mu + 1e-10 {
                    consistent = false;
                }
            } else {
                v[(i, 0)] = (theta * xi - g[(i, 0)] - mu * signs[i] as f64) / d[i];
                if (signs[i] as f64) * (xi + v[(i, 0)]) < -1e-12 {
                    consistent = false;
                }
            }
        }
        let objective = inp.objective(&v);
        out.push(PatternCandidate {
            v,
            objective,
            consistent,
        });
    }
    out
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn check_multiplier(inp: &SubproblemInput, lambda: &DMatrix<f64>) -> Result<()> {
    let r = inp.x.r();
    if lambda.shape() != (r, r) {
        return Err(Error::shape(
            format!("{r} x {r}"),
            format!("{} x {}", lambda.nrows(), lambda.ncols()),
        ));
    }
    let dev = (lambda - lambda.transpose()).norm();
    if dev > 1e-12 * (1.0 + lambda.norm()) {
        return Err(Error::Internal(format!(
            "multiplier is not symmetric (deviation {dev:.3e})"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stiefel::random_stiefel;
    use nalgebra::DVector;
    use rand::rngs::StdRng;
    use rand::{RngExt, SeedableRng};
    use rand_distr::StandardNormal;

    fn gaussian(n: usize, r: usize, rng: &mut StdRng) -> DMatrix<f64> {
        DMatrix::from_fn(n, r, |_, _| rng.sample(StandardNormal))
    }

    fn random_metric(n: usize, rng: &mut StdRng) -> DiagonalMetric {
        let d = DVector::from_fn(n, |_, _| 0.5 + 1.5 * rng.random::<f64>());
        DiagonalMetric::from_vector(d).unwrap()
    }

    fn sym_gaussian(r: usize, rng: &mut StdRng) -> DMatrix<f64> {
        let a = gaussian(r, r, rng);
        (&a + a.transpose()) * 0.5
    }

    #[test]
    fn v_of_lambda_closed_forms() {
        let mut rng = StdRng::seed_from_u64(1);
        let x = random_stiefel(6, 2, 1).unwrap();
        let delta = 1.7;
        let metric = DiagonalMetric::uniform(6, delta).unwrap();
        let zero_g = DMatrix::zeros(6, 2);

        // mu = 0, g = 0, D = delta I: V(L) = (2/delta) X L.
        let inp = SubproblemInput::new(&x, &zero_g, &metric, 0.0).unwrap();
        let lambda = sym_gaussian(2, &mut rng);
        let v = v_of_lambda(&inp, &lambda).unwrap();
        let expected = x.matrix() * &lambda * (2.0 / delta);
        assert!((&v - &expected).norm() < 1e-12);

        // mu = 0, g tangent, D = I, L = 0: V = -g.
        let metric_id = DiagonalMetric::uniform(6, 1.0).unwrap();
        let g_tan = x.project_tangent(&gaussian(6, 2, &mut rng)).unwrap();
        let g = g_tan.matrix().clone();
        let inp = SubproblemInput::new(&x, &g, &metric_id, 0.0).unwrap();
        let v = v_of_lambda(&inp, &DMatrix::zeros(2, 2)).unwrap();
        assert!((&v + &g).norm() < 1e-12);

        // huge mu: prox output 0, so V = -X.
        let inp = SubproblemInput::new(&x, &g, &metric_id, 1e12).unwrap();
        let v = v_of_lambda(&inp, &DMatrix::zeros(2, 2)).unwrap();
        assert!((&v + x.matrix()).norm() < 1e-12);
    }

    #[test]
    fn residual_closed_forms() {
        let mut rng = StdRng::seed_from_u64(2);
        let x = random_stiefel(5, 2, 9).unwrap();
        let delta = 2.0;
        let metric = DiagonalMetric::uniform(5, delta).unwrap();
        let zero_g = DMatrix::zeros(5, 2);
        let inp = SubproblemInput::new(&x, &zero_g, &metric, 0.0).unwrap();

        // E(L) = (4/delta) L, zero only at L = 0.
        let lambda = sym_gaussian(2, &mut rng);
        let e = residual_e(&inp, &lambda).unwrap();
        assert!((&e - &lambda * (4.0 / delta)).norm() < 1e-12);
        let e0 = residual_e(&inp, &DMatrix::zeros(2, 2)).unwrap();
        assert!(e0.norm() < 1e-14);

        // tangent gradient, identity metric: E(0) = 0 because V = -g is tangent.
        let metric_id = DiagonalMetric::uniform(5, 1.0).unwrap();
        let g = x
            .project_tangent(&gaussian(5, 2, &mut rng))
            .unwrap()
            .into_matrix();
        let inp = SubproblemInput::new(&x, &g, &metric_id, 0.0).unwrap();
        let e = residual_e(&inp, &DMatrix::zeros(2, 2)).unwrap();
        assert!(e.norm() < 1e-12);
    }

    #[test]
    fn residual_equals_tangency_identity() {
        let mut rng = StdRng::seed_from_u64(3);
        for seed in 0..10u64 {
            let x = random_stiefel(7, 3, seed).unwrap();
            let g = gaussian(7, 3, &mut rng);
            let metric = random_metric(7, &mut rng);
            let inp = SubproblemInput::new(&x, &g, &metric, 0.4).unwrap();
            let lambda = sym_gaussian(3, &mut rng);
            let v = v_of_lambda(&inp, &lambda).unwrap();
            let e = residual_e(&inp, &lambda).unwrap();
            let residual = (v.transpose() * x.matrix() + x.matrix().transpose() * &v).norm();
            assert!((residual - e.norm()).abs() < 1e-12 * (1.0 + e.norm()));
            assert!((&e - e.transpose()).norm() < 1e-13);
        }
    }

    #[test]
    fn dual_jacobian_closed_form_and_adjointness() {
        let mut rng = StdRng::seed_from_u64(4);
        // all-ones mask, D = delta I, r = 1: W = (4/delta) S.
        let x = random_stiefel(6, 1, 0).unwrap();
        let delta = 1.3;
        let metric = DiagonalMetric::uniform(6, delta).unwrap();
        let g = DMatrix::zeros(6, 1);
        let inp = SubproblemInput::new(&x, &g, &metric, 0.0).unwrap();
        let mask = DMatrix::from_element(6, 1, 1.0);
        let s = DMatrix::from_element(1, 1, 0.8);
        let w = apply_dual_jacobian(&inp, &mask, &s).unwrap();
        assert!((w[(0, 0)] - 4.0 / delta * 0.8).abs() < 1e-12);

        // all-zero mask annihilates.
        let zero_mask = DMatrix::zeros(6, 1);
        let w = apply_dual_jacobian(&inp, &zero_mask, &s).unwrap();
        assert_eq!(w[(0, 0)], 0.0);

        // adjointness and PSD on random data.
        for seed in 0..10u64 {
            let x = random_stiefel(8, 3, 30 + seed).unwrap();
            let g = gaussian(8, 3, &mut rng);
            let metric = random_metric(8, &mut rng);
            let inp = SubproblemInput::new(&x, &g, &metric, 0.3).unwrap();
            let lambda = sym_gaussian(3, &mut rng);
            let mask = inp
                .l1
                .jacobian_mask(&inp.prox_argument(&lambda), inp.metric.d())
                .unwrap();
            let s = sym_gaussian(3, &mut rng);
            let t = sym_gaussian(3, &mut rng);
            let gs = apply_dual_jacobian(&inp, &mask, &s).unwrap();
            let gt = apply_dual_jacobian(&inp, &mask, &t).unwrap();
            assert!((gs.dot(&t) - s.dot(&gt)).abs() < 1e-10 * (1.0 + gs.norm()));
            assert!(gs.dot(&s) >= -1e-12);
        }
    }

    #[test]
    fn cg_closed_forms() {
        let zero = DMatrix::<f64>::zeros(2, 2);
        let (d, iters) = cg_solve(|_s| Ok(DMatrix::zeros(2, 2)), &zero, 1.0, 1e-10, 50).unwrap();
        assert_eq!(iters, 0);
        assert!(d.norm() == 0.0);

        let rhs = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, -2.0]);
        // G = 0, eta = 2 -> d = -R/2.
        let (d, _) = cg_solve(|_s| Ok(DMatrix::zeros(2, 2)), &rhs, 2.0, 1e-12, 50).unwrap();
        assert!((&d + &rhs / 2.0).norm() < 1e-10);
        // G = 4 id, eta = 1 -> d = -R/5.
        let (d, _) = cg_solve(|s| Ok(s * 4.0), &rhs, 1.0, 1e-12, 50).unwrap();
        assert!((&d + &rhs / 5.0).norm() < 1e-10);

        // Non-symmetric operator output is an internal error.
        let bad = cg_solve(
            |_s| Ok(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])),
            &rhs,
            1.0,
            1e-12,
            50,
        );
        assert!(matches!(bad, Err(Error::Internal(_))));
    }

    #[test]
    fn ssn_converges_on_smooth_cases() {
        let mut rng = StdRng::seed_from_u64(5);
        // mu = 0, g tangent, Lambda = 0: already optimal, zero iterations.
        let x = random_stiefel(6, 2, 12).unwrap();
        let metric = DiagonalMetric::uniform(6, 1.0).unwrap();
        let g = x
            .project_tangent(&gaussian(6, 2, &mut rng))
            .unwrap()
            .into_matrix();
        let inp = SubproblemInput::new(&x, &g, &metric, 0.0).unwrap();
        let res = solve_subproblem(&inp, &DMatrix::zeros(2, 2), &SsnConfig::default()).unwrap();
        assert!(res.converged);
        assert_eq!(res.ssn_iters, 0);
        assert!((res.v.matrix() + &g).norm() < 1e-10);

        // mu = 0, g = 0, arbitrary start: E is linear, a handful of damped
        // Newton contractions reach the tolerance.
        let zero_g = DMatrix::zeros(6, 2);
        let inp = SubproblemInput::new(&x, &zero_g, &metric, 0.0).unwrap();
        let lambda0 = sym_gaussian(2, &mut rng);
        let res = solve_subproblem(&inp, &lambda0, &SsnConfig::default()).unwrap();
        assert!(res.converged);
        assert!(res.ssn_iters <= 10);
        assert!(res.v.norm() < 1e-9);
        assert!(res.lambda.norm() < 1e-9);
    }

    #[test]
    fn ssn_matches_enumeration_oracle() {
        let mut rng = StdRng::seed_from_u64(6);
        for trial in 0..40u64 {
            let n = 4 + (trial % 3) as usize;
            let x = random_stiefel(n, 1, 100 + trial).unwrap();
            let g = gaussian(n, 1, &mut rng);
            let metric = random_metric(n, &mut rng);
            for mu in [0.0, 0.1, 1.0] {
                let inp = SubproblemInput::new(&x, &g, &metric, mu).unwrap();
                let ssn =
                    solve_subproblem(&inp, &DMatrix::zeros(1, 1), &SsnConfig::default()).unwrap();
                let oracle = oracle_subproblem_small(&inp).unwrap();
                let dev = (ssn.v.matrix() - &oracle).amax();
                assert!(dev <= 1e-6, "mu={mu} n={n} deviation {dev:.3e}");
            }
        }
    }

    #[test]
    fn oracle_closed_form_mu_zero() {
        let mut rng = StdRng::seed_from_u64(7);
        let n = 5;
        let x = random_stiefel(n, 1, 3).unwrap();
        let g = gaussian(n, 1, &mut rng);
        let metric = random_metric(n, &mut rng);
        let inp = SubproblemInput::new(&x, &g, &metric, 0.0).unwrap();
        let oracle = oracle_subproblem_small(&inp).unwrap();
        // KKT solve: v = -(I - D^{-1} x x' / (x'D^{-1}x)) D^{-1} g.
        let dinv_g = metric.apply_inverse(&g);
        let dinv_x = metric.apply_inverse(x.matrix());
        let xdx = x.matrix().dot(&dinv_x);
        let theta = x.matrix().dot(&dinv_g) / xdx;
        let expected = &dinv_x * theta - &dinv_g;
        assert!((&oracle - &expected).norm() < 1e-10);

        // g = 0, mu = 0 -> V = 0.
        let zero_g = DMatrix::zeros(n, 1);
        let inp = SubproblemInput::new(&x, &zero_g, &metric, 0.0).unwrap();
        let v = oracle_subproblem_small(&inp).unwrap();
        assert!(v.norm() < 1e-12);
    }

    #[test]
    fn oracle_strict_complementarity_has_unique_pattern() {
        let mut rng = StdRng::seed_from_u64(8);
        let n = 4;
        let x = random_stiefel(n, 1, 21).unwrap();
        let g = gaussian(n, 1, &mut rng);
        let metric = DiagonalMetric::uniform(n, 1.0).unwrap();
        let inp = SubproblemInput::new(&x, &g, &metric, 0.3).unwrap();
        let candidates = enumerate_candidates(&inp);
        let best = candidates
            .iter()
            .min_by(|a, b| a.objective.total_cmp(&b.objective))
            .unwrap();
        assert!(best.consistent);
        // All consistent candidates must agree with the minimizer (the
        // subproblem is strictly convex on the constraint set).
        for c in candidates.iter().filter(|c| c.consistent) {
            assert!((&c.v - &best.v).norm() < 1e-8);
        }
    }

    #[test]
    fn subproblem_descent_and_monotonicity() {
        let mut rng = StdRng::seed_from_u64(9);
        for seed in 0..8u64 {
            let x = random_stiefel(9, 2, 60 + seed).unwrap();
            let g = gaussian(9, 2, &mut rng);
            let metric = random_metric(9, &mut rng);
            let inp = SubproblemInput::new(&x, &g, &metric, 0.5).unwrap();
            let res = solve_subproblem(&inp, &DMatrix::zeros(2, 2), &SsnConfig::default()).unwrap();
            // phi(V) <= phi(0)
            assert!(
                inp.objective(res.v.matrix())
                    <= inp.objective(&DMatrix::zeros(9, 2)) + 1e-12
            );
            // monotone dual residual
            let l1 = sym_gaussian(2, &mut rng);
            let l2 = sym_gaussian(2, &mut rng);
            let e1 = residual_e(&inp, &l1).unwrap();
            let e2 = residual_e(&inp, &l2).unwrap();
            let inner = (&e1 - &e2).dot(&(&l1 - &l2));
            assert!(inner >= -1e-10);
        }
    }
}
