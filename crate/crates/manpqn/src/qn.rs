//! Damped limited-memory quasi-Newton metric.
//!
//! The memory holds up to `p` pairs (s_j, y_j) built from iterate differences
//! and Riemannian gradient differences. Each outer iteration the metric
//! matrix B is rebuilt from delta*I over the stored pairs, oldest first, with
//! each y damped against the base weight so curvature stays positive:
//!
//! ```text
//! ybar = beta*y + (1 - beta)*delta*s,
//! B <- B - (B s)(B s)' / tr(s'Bs) + ybar ybar' / tr(s'ybar).
//! ```
//!
//! Only diag(B) enters the subproblem; the dense B and its inverse H are kept
//! as test oracles. At desk scale (n <= 2000) the dense O(p n^2) rebuild is
//! cheap; a compact low-rank representation would be an optimization, not a
//! behavior change.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Guard for the curvature denominator tr(s'Bs) relative to ||s||^2.
const CURVATURE_GUARD: f64 = 1e-14;

/// Positive row weights d = diag(B) plus their reciprocals.
#[derive(Clone, Debug)]
pub struct DiagonalMetric {
    d: DVector<f64>,
    d_inv: DVector<f64>,
}

impl DiagonalMetric {
    pub fn from_vector(d: DVector<f64>) -> Result<Self> {
        if let Some(bad) = d.iter().find(|&&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidMetric(format!(
                "diagonal entries must be positive and finite, found {bad}"
            )));
        }
        let d_inv = d.map(|v| 1.0 / v);
        Ok(Self { d, d_inv })
    }

    /// The uniform metric delta * I.
    pub fn uniform(n: usize, delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidMetric(format!(
                "uniform weight must be positive, got {delta}"
            )));
        }
        Ok(Self {
            d: DVector::from_element(n, delta),
            d_inv: DVector::from_element(n, 1.0 / delta),
        })
    }

    pub fn d(&self) -> &DVector<f64> {
        &self.d
    }

    pub fn d_inv(&self) -> &DVector<f64> {
        &self.d_inv
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.len() == 0
    }

    /// ||V||_B^2 = sum_ij d_i V_ij^2.
    pub fn quad_norm_sq(&self, v: &DMatrix<f64>) -> f64 {
        let mut acc = 0.0;
        for j in 0..v.ncols() {
            for i in 0..v.nrows() {
                let x = v[(i, j)];
                acc += self.d[i] * x * x;
            }
        }
        acc
    }

    /// Row-scales `m` by 1/d_i.
    pub fn apply_inverse(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = m.clone();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                out[(i, j)] *= self.d_inv[i];
            }
        }
        out
    }
}

/// Outcome of offering a pair to the memory.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairUpdate {
    Stored,
    /// The step was numerically zero; memory left unchanged.
    SkippedDegenerate,
}

/// Ring buffer of curvature pairs with base metric delta * I.
///
/// Raw (s, y) pairs are stored; damping is applied against the current
/// `delta` whenever the metric is rebuilt, so rescaling `delta` (the driver
/// does this from the newest pair) keeps every effective pair consistent
/// with the base weight it is combined with.
#[derive(Clone, Debug)]
pub struct QnMemory {
    pairs: VecDeque<(DMatrix<f64>, DMatrix<f64>)>,
    capacity: usize,
    delta: f64,
}

impl QnMemory {
    pub fn new(capacity: usize, delta: f64) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidConfig("pair capacity must be >= 1".into()));
        }
        Self::check_delta(delta)?;
        Ok(Self {
            pairs: VecDeque::with_capacity(capacity),
            capacity,
            delta,
        })
    }

    fn check_delta(delta: f64) -> Result<()> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "base metric weight must be positive, got {delta}"
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Replaces the base weight used for damping and the rebuild seed.
    pub fn set_delta(&mut self, delta: f64) -> Result<()> {
        Self::check_delta(delta)?;
        self.delta = delta;
        Ok(())
    }

    /// Damped ybar = beta*y + (1-beta)*delta*s for the current delta. With
    /// a = delta*||s||_F^2 and t = tr(s'y):
    ///
    /// ```text
    /// beta = 0.75*a / (a - t)   if t < 0.25*a,  else 1,
    /// ```
    ///
    /// which gives tr(s'ybar) = max(0.25*a, t) >= 0.25*delta*||s||_F^2.
    fn damped(&self, s: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
        let a = self.delta * s.norm_squared();
        let t = s.dot(y);
        let beta = if t < 0.25 * a { 0.75 * a / (a - t) } else { 1.0 };
        y * beta + s * ((1.0 - beta) * self.delta)
    }

    /// Stored pairs with damping applied, oldest first.
    pub fn pairs(&self) -> impl Iterator<Item = (&DMatrix<f64>, DMatrix<f64>)> {
        self.pairs.iter().map(|(s, y)| (s, self.damped(s, y)))
    }

    /// Stores (s, y), evicting the oldest pair at capacity. A numerically
    /// zero step is skipped so the damping blend stays well defined.
    pub fn push_pair(&mut self, s: DMatrix<f64>, y: DMatrix<f64>) -> Result<PairUpdate> {
        if s.shape() != y.shape() {
            return Err(Error::shape(
                format!("{} x {}", s.nrows(), s.ncols()),
                format!("{} x {}", y.nrows(), y.ncols()),
            ));
        }
        let nr = (s.nrows() * s.ncols()) as f64;
        if s.norm() < 1e-14 * nr.sqrt() {
            return Ok(PairUpdate::SkippedDegenerate);
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y));
        Ok(PairUpdate::Stored)
    }

    /// diag(B) as the production metric; B is rebuilt from scratch, so two
    /// calls on the same memory return identical vectors.
    pub fn diag_metric(&self, n: usize) -> Result<DiagonalMetric> {
        let b = self.dense_b(n)?;
        DiagonalMetric::from_vector(b.diagonal())
    }

    /// Dense metric matrix B (test oracle): the damped recursion over the
    /// stored pairs starting from delta * I. Pairs whose curvature
    /// denominator underflows are skipped with the memory left intact.
    pub fn dense_b(&self, n: usize) -> Result<DMatrix<f64>> {
        let mut b = DMatrix::identity(n, n) * self.delta;
        for (s, y_bar) in self.pairs() {
            self.check_pair_dims(n, s)?;
            let bs = &b * s;
            let tau = s.dot(&bs);
            if tau <= CURVATURE_GUARD * s.norm_squared() {
                continue;
            }
            let nu = s.dot(&y_bar);
            if nu <= 0.0 {
                continue;
            }
            b -= &bs * bs.transpose() / tau;
            b += &y_bar * y_bar.transpose() / nu;
        }
        Ok(b)
    }

    /// Dense inverse metric H (test oracle), maintained alongside B through
    /// the exact rank-2r Woodbury inverse of each update. For r = 1 pairs
    /// this reduces to the classic BFGS inverse recursion
    /// `H <- (I - rho s ybar')H(I - rho ybar s') + rho s s'`.
    pub fn dense_h(&self, n: usize) -> Result<DMatrix<f64>> {
        let mut b = DMatrix::identity(n, n) * self.delta;
        let mut h = DMatrix::identity(n, n) / self.delta;
        for (s, y_bar) in self.pairs() {
            self.check_pair_dims(n, s)?;
            let r = s.ncols();
            let bs = &b * s;
            let tau = s.dot(&bs);
            if tau <= CURVATURE_GUARD * s.norm_squared() {
                continue;
            }
            let nu = s.dot(&y_bar);
            if nu <= 0.0 {
                continue;
            }
            // B_next = B - (Bs)(Bs)'/tau + ybar ybar'/nu = B + U C U' with
            // U = [Bs, ybar]; Woodbury gives
            // H_next = H - [s, H ybar] K^{-1} [s, H ybar]' where
            // K = [[s'Bs - tau*I, s'ybar], [ybar's, ybar'H ybar + nu*I]].
            let hy = &h * &y_bar;
            let stbs = s.transpose() * &bs;
            let sty = s.transpose() * &y_bar;
            let ythy = y_bar.transpose() * &hy;
            let mut k = DMatrix::zeros(2 * r, 2 * r);
            k.view_mut((0, 0), (r, r))
                .copy_from(&(&stbs - DMatrix::identity(r, r) * tau));
            k.view_mut((0, r), (r, r)).copy_from(&sty);
            k.view_mut((r, 0), (r, r)).copy_from(&sty.transpose());
            k.view_mut((r, r), (r, r))
                .copy_from(&(&ythy + DMatrix::identity(r, r) * nu));
            let mut w = DMatrix::zeros(n, 2 * r);
            w.view_mut((0, 0), (n, r)).copy_from(s);
            w.view_mut((0, r), (n, r)).copy_from(&hy);
            let solved = k.lu().solve(&w.transpose()).ok_or_else(|| {
                Error::Internal("singular Woodbury block in inverse metric".into())
            })?;
            h -= &w * solved;
            h = (&h + h.transpose()) * 0.5;
            b -= &bs * bs.transpose() / tau;
            b += &y_bar * y_bar.transpose() / nu;
        }
        Ok(h)
    }

    fn check_pair_dims(&self, n: usize, s: &DMatrix<f64>) -> Result<()> {
        if s.nrows() != n {
            return Err(Error::shape(
                format!("pairs with {n} rows"),
                format!("{} rows", s.nrows()),
            ));
        }
        Ok(())
    }
}
