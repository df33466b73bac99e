//! Geometry of the Stiefel manifold St(n, r) = {X in R^{n x r} : X'X = I}.
//!
//! Provides feasibility checks, tangent-space projection, Riemannian
//! gradients, the polar (SVD) retraction and seeded random points. All values
//! are immutable after construction and safe to share across threads.

use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Orthonormality tolerance enforced on every constructed point.
pub const FEASIBILITY_TOL: f64 = 1e-10;

/// Smallest singular value of X + xi accepted by the polar retraction.
const RETRACTION_RANK_TOL: f64 = 1e-12;

/// `||M'M - I||_F` for an arbitrary n x r matrix.
pub fn feasibility_error(m: &DMatrix<f64>) -> f64 {
    let r = m.ncols();
    (m.transpose() * m - DMatrix::identity(r, r)).norm()
}

/// A point on St(n, r): an n x r matrix with orthonormal columns.
#[derive(Clone, Debug, PartialEq)]
pub struct StiefelPoint {
    data: DMatrix<f64>,
}

impl StiefelPoint {
    /// Wraps a matrix, checking 1 <= r <= n and the orthonormality invariant.
    pub fn from_matrix(data: DMatrix<f64>) -> Result<Self> {
        let (n, r) = data.shape();
        if r == 0 || r > n {
            return Err(Error::shape(
                "n x r with 1 <= r <= n",
                format!("{n} x {r}"),
            ));
        }
        let err = feasibility_error(&data);
        if err > FEASIBILITY_TOL {
            return Err(Error::NotOnManifold { error: err });
        }
        Ok(Self { data })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn r(&self) -> usize {
        self.data.ncols()
    }

    /// `||X'X - I||_F` of this point.
    pub fn feasibility(&self) -> f64 {
        feasibility_error(&self.data)
    }

    /// Projection of `z` onto the tangent space at this point:
    /// `Z - X sym(X'Z)` where `sym(A) = (A + A')/2`.
    pub fn project_tangent(&self, z: &DMatrix<f64>) -> Result<TangentVector> {
        if z.shape() != self.data.shape() {
            return Err(Error::shape(
                format!("{} x {}", self.n(), self.r()),
                format!("{} x {}", z.nrows(), z.ncols()),
            ));
        }
        let a = self.data.transpose() * z;
        let sym = (&a + a.transpose()) * 0.5;
        let data = z - &self.data * sym;
        Ok(TangentVector { data })
    }

    /// Riemannian gradient: the tangent projection of the Euclidean gradient.
    pub fn riemannian_gradient(&self, euclid_grad: &DMatrix<f64>) -> Result<TangentVector> {
        self.project_tangent(euclid_grad)
    }

    /// Polar retraction: the orthonormal factor UV' of the thin SVD of X + xi.
    ///
    /// Fails loudly if X + xi is numerically rank deficient (the polar factor
    /// is undefined there); for tangent xi this cannot happen because
    /// (X+xi)'(X+xi) = I + xi'xi.
    pub fn retract(&self, xi: &TangentVector) -> Result<StiefelPoint> {
        self.retract_scaled(xi, 1.0)
    }

    /// Retraction of the scaled tangent vector `alpha * xi`.
    pub fn retract_scaled(&self, xi: &TangentVector, alpha: f64) -> Result<StiefelPoint> {
        if xi.data.shape() != self.data.shape() {
            return Err(Error::shape(
                format!("{} x {}", self.n(), self.r()),
                format!("{} x {}", xi.data.nrows(), xi.data.ncols()),
            ));
        }
        if alpha == 0.0 || xi.data.iter().all(|&v| v == 0.0) {
            return Ok(self.clone());
        }
        let moved = &self.data + &xi.data * alpha;
        let svd = moved.svd(true, true);
        let min_sv = svd
            .singular_values
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if !(min_sv > RETRACTION_RANK_TOL) {
            return Err(Error::RankDeficient {
                min_singular: min_sv,
            });
        }
        let u = svd
            .u
            .ok_or_else(|| Error::Internal("SVD did not return U".into()))?;
        let v_t = svd
            .v_t
            .ok_or_else(|| Error::Internal("SVD did not return V'".into()))?;
        StiefelPoint::from_matrix(u * v_t)
    }
}

/// A tangent vector at some point X, i.e. V with V'X + X'V = 0.
///
/// Instances come out of [`StiefelPoint::project_tangent`] (or scaling an
/// existing one), so the skew constraint holds by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    data: DMatrix<f64>,
}

impl TangentVector {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.norm()
    }

    pub fn norm_squared(&self) -> f64 {
        self.data.norm_squared()
    }

    pub fn scaled(&self, alpha: f64) -> TangentVector {
        TangentVector {
            data: &self.data * alpha,
        }
    }

    /// `||V'X + X'V||_F`, the tangency residual at `x`.
    pub fn tangency_residual(&self, x: &StiefelPoint) -> f64 {
        let a = x.matrix().transpose() * &self.data;
        (&a + a.transpose()).norm()
    }

    #[cfg(test)]
    pub(crate) fn from_raw(data: DMatrix<f64>) -> TangentVector {
        TangentVector { data }
    }
}

/// Deterministic random point: the orthonormal QR factor of an n x r matrix
/// with i.i.d. standard normal entries drawn from `StdRng::seed_from_u64`.
pub fn random_stiefel(n: usize, r: usize, seed: u64) -> Result<StiefelPoint> {
    if r == 0 || r > n {
        return Err(Error::shape(
            "n x r with 1 <= r <= n",
            format!("{n} x {r}"),
        ));
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let gauss = DMatrix::<f64>::from_fn(n, r, |_, _| rng.sample(StandardNormal));
    let (mut q, rmat) = gauss.qr().unpack();
    // Fix column signs so the factor is unique (R diagonal >= 0).
    for j in 0..r {
        if rmat[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    StiefelPoint::from_matrix(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn gaussian(n: usize, r: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = StdRng::seed_from_u64(seed);
        DMatrix::from_fn(n, r, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn projection_hand_example() {
        // X = [1, 0]', Z = [3, 4]' -> [0, 4]'
        let x = StiefelPoint::from_matrix(DMatrix::from_column_slice(2, 1, &[1.0, 0.0])).unwrap();
        let z = DMatrix::from_column_slice(2, 1, &[3.0, 4.0]);
        let v = x.project_tangent(&z).unwrap();
        assert!((v.matrix()[(0, 0)] - 0.0).abs() < 1e-14);
        assert!((v.matrix()[(1, 0)] - 4.0).abs() < 1e-14);
    }

    #[test]
    fn projection_fixes_tangent_and_kills_point() {
        let x = random_stiefel(6, 2, 3).unwrap();
        // Z already tangent -> unchanged.
        let z = x.project_tangent(&gaussian(6, 2, 4)).unwrap();
        let again = x.project_tangent(z.matrix()).unwrap();
        assert!((again.matrix() - z.matrix()).norm() < 1e-13);
        // Z = X -> 0.
        let zero = x.project_tangent(x.matrix()).unwrap();
        assert!(zero.norm() < 1e-13);
    }

    #[test]
    fn projection_is_idempotent_and_self_adjoint() {
        for seed in 0..20u64 {
            let x = random_stiefel(8, 3, seed).unwrap();
            let z = gaussian(8, 3, 100 + seed);
            let w = gaussian(8, 3, 200 + seed);
            let pz = x.project_tangent(&z).unwrap();
            let pw = x.project_tangent(&w).unwrap();
            let lhs = pz.matrix().dot(&w);
            let rhs = z.dot(pw.matrix());
            assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
            let res = pz.tangency_residual(&x);
            assert!(res <= 1e-12 * (1.0 + z.norm()));
        }
    }

    #[test]
    fn riemannian_gradient_hand_example() {
        let x = StiefelPoint::from_matrix(DMatrix::from_column_slice(2, 1, &[1.0, 0.0])).unwrap();
        let g = DMatrix::from_column_slice(2, 1, &[5.0, -2.0]);
        let v = x.riemannian_gradient(&g).unwrap();
        assert!((v.matrix()[(0, 0)]).abs() < 1e-14);
        assert!((v.matrix()[(1, 0)] + 2.0).abs() < 1e-14);
        // grad of X itself vanishes
        let zero = x.riemannian_gradient(x.matrix()).unwrap();
        assert!(zero.norm() < 1e-14);
    }

    #[test]
    fn retraction_zero_is_identity() {
        let x = random_stiefel(5, 2, 11).unwrap();
        let zero = x.project_tangent(&DMatrix::zeros(5, 2)).unwrap();
        let y = x.retract(&zero).unwrap();
        assert_eq!(y.matrix(), x.matrix());
    }

    #[test]
    fn retraction_hand_example() {
        // X = [1,0]', xi = [0,1]' -> polar factor of [1,1]' = [1/sqrt2, 1/sqrt2]'
        let x = StiefelPoint::from_matrix(DMatrix::from_column_slice(2, 1, &[1.0, 0.0])).unwrap();
        let xi = x
            .project_tangent(&DMatrix::from_column_slice(2, 1, &[0.0, 1.0]))
            .unwrap();
        let y = x.retract(&xi).unwrap();
        let s = 1.0 / 2.0_f64.sqrt();
        assert!((y.matrix()[(0, 0)] - s).abs() < 1e-14);
        assert!((y.matrix()[(1, 0)] - s).abs() < 1e-14);
    }

    #[test]
    fn retraction_outputs_are_orthonormal() {
        for seed in 0..20u64 {
            let x = random_stiefel(9, 3, seed).unwrap();
            let raw = gaussian(9, 3, 50 + seed);
            let mut xi = x.project_tangent(&raw).unwrap();
            if xi.norm() > 1.0 {
                xi = xi.scaled(1.0 / xi.norm());
            }
            let y = x.retract(&xi).unwrap();
            assert!(y.feasibility() <= 1e-12);
        }
    }

    #[test]
    fn retraction_rank_deficient_fails() {
        // Non-tangent displacement that collapses the column: X + xi = 0.
        let x = StiefelPoint::from_matrix(DMatrix::from_column_slice(2, 1, &[1.0, 0.0])).unwrap();
        let xi = TangentVector::from_raw(DMatrix::from_column_slice(2, 1, &[-1.0, 0.0]));
        match x.retract(&xi) {
            Err(Error::RankDeficient { min_singular }) => assert!(min_singular <= 1e-12),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn retraction_second_order_bounds() {
        // Prop-style check that the two retraction ratios stay modest.
        for seed in 0..30u64 {
            let x = random_stiefel(10, 3, seed).unwrap();
            let raw = gaussian(10, 3, 400 + seed);
            let mut xi = x.project_tangent(&raw).unwrap();
            let norm = xi.norm();
            if norm > 1.0 {
                xi = xi.scaled(1.0 / norm);
            }
            let nx = xi.norm();
            if nx < 1e-8 {
                continue;
            }
            let y = x.retract(&xi).unwrap();
            let first = (y.matrix() - x.matrix()).norm() / nx;
            let second = (y.matrix() - x.matrix() - xi.matrix()).norm() / (nx * nx);
            assert!(first <= 10.0, "first-order ratio {first}");
            assert!(second <= 10.0, "second-order ratio {second}");
        }
    }

    #[test]
    fn random_stiefel_is_deterministic_and_feasible() {
        let a = random_stiefel(4, 2, 7).unwrap();
        let b = random_stiefel(4, 2, 7).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        assert!(a.feasibility() <= 1e-12);
        // Square case: a 3x3 orthogonal matrix.
        let q = random_stiefel(3, 3, 1).unwrap();
        assert!(q.feasibility() <= 1e-12);
        assert!(random_stiefel(2, 3, 0).is_err());
    }

    #[test]
    fn feasibility_error_examples() {
        let x = DMatrix::<f64>::identity(2, 2) * 2.0;
        assert!((feasibility_error(&x) - 3.0 * 2.0_f64.sqrt()).abs() < 1e-12);
        let q = random_stiefel(7, 3, 2).unwrap();
        assert!(feasibility_error(q.matrix()) <= 1e-12);
        let e = DVector::from_column_slice(&[1.0, 0.0]);
        assert!(feasibility_error(&DMatrix::from_columns(&[e])) == 0.0);
    }
}
