//! The l1 regularizer h(X) = mu*||X||_1, its proximal mapping under a
//! row-wise diagonal metric, and the generalized Jacobian mask used by the
//! dual semismooth Newton solver.
//!
//! The scaled prox minimizes, entry by entry in row i,
//! `mu*|y| + (d_i/2)*(y - b)^2`, which is soft thresholding at `mu/d_i`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// h(X) = mu * sum |X_ij| behind a (value, scaled prox, Jacobian mask)
/// interface. Other separable convex regularizers can follow this surface.
#[derive(Clone, Copy, Debug)]
pub struct L1Regularizer {
    mu: f64,
}

impl L1Regularizer {
    pub fn new(mu: f64) -> Result<Self> {
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "l1 weight must be finite and >= 0, got {mu}"
            )));
        }
        Ok(Self { mu })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// mu * sum_ij |x_ij|.
    pub fn value(&self, x: &DMatrix<f64>) -> f64 {
        self.mu * x.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// Row-weighted soft thresholding:
    /// `y_ij = sign(b_ij) * max(|b_ij| - mu/d_i, 0)`.
    pub fn scaled_prox(&self, b: &DMatrix<f64>, d: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_metric(b, d)?;
        let mut y = b.clone();
        for i in 0..b.nrows() {
            let threshold = self.mu / d[i];
            for j in 0..b.ncols() {
                let v = b[(i, j)];
                y[(i, j)] = v.signum() * (v.abs() - threshold).max(0.0);
            }
        }
        Ok(y)
    }

    /// Entrywise element of the generalized Jacobian of the scaled prox:
    /// 1 where `|b_ij| > mu/d_i`, 0 elsewhere. Ties break to 0, which keeps
    /// the dual Jacobian operator PSD-minimal. For mu = 0 the prox is exactly
    /// the identity, so the mask is all ones.
    pub fn jacobian_mask(&self, b: &DMatrix<f64>, d: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_metric(b, d)?;
        if self.mu == 0.0 {
            return Ok(DMatrix::from_element(b.nrows(), b.ncols(), 1.0));
        }
        let mut mask = DMatrix::zeros(b.nrows(), b.ncols());
        for i in 0..b.nrows() {
            let threshold = self.mu / d[i];
            for j in 0..b.ncols() {
                if b[(i, j)].abs() > threshold {
                    mask[(i, j)] = 1.0;
                }
            }
        }
        Ok(mask)
    }
}

fn check_metric(b: &DMatrix<f64>, d: &DVector<f64>) -> Result<()> {
    if d.len() != b.nrows() {
        return Err(Error::shape(
            format!("metric of length {}", b.nrows()),
            format!("length {}", d.len()),
        ));
    }
    if let Some(bad) = d.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::InvalidMetric(format!(
            "diagonal metric entries must be positive, found {bad}"
        )));
    }
    Ok(())
}
