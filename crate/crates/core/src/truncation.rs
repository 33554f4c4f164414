//! Moment matching for multivariate normals truncated to an orthant on a
//! subset of coordinates.
//!
//! The sequential algorithm processes one nonnegativity constraint at a
//! time: it computes the exact moments of the constrained scalar marginal
//! and propagates the change through the joint covariance with the
//! linear-Gaussian conditioning rules. The output is the moment-matched
//! unconstrained normal, which is what the filter consumes. The result is
//! exact for a single constraint or a diagonal covariance, and an
//! approximation otherwise; it depends on the order in which constraints
//! are processed (the filter always passes ascending indices).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gauss;
use crate::linalg;

/// Mean and covariance of a (possibly moment-matched) multivariate normal.
#[derive(Debug, Clone)]
pub struct GaussianMoments {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianMoments {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if !linalg::all_finite_vector(&mean) {
            return Err(Error::validation("mean has non-finite entries"));
        }
        linalg::check_symmetric(&cov, mean.len(), "covariance")?;
        Ok(Self { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Mean and variance of a scalar normal `N(m, s2)` truncated to `[0, inf)`.
///
/// With `a = -m / sqrt(s2)` and `lambda = phi(a) / (1 - Phi(a))`, the
/// truncated mean is `m + sqrt(s2) lambda` and the truncated variance
/// `s2 (1 - lambda (lambda - a))`. The mean is computed as
/// `sqrt(s2) (lambda - a)` so it stays positive when `m` is far negative.
/// Constraints more than eight standard deviations below the mean are
/// treated as inactive; more than eight above, the tail expansion replaces
/// the erfc ratio.
pub fn truncated_scalar_moments(m: f64, s2: f64) -> Result<(f64, f64)> {
    if !(s2 > 0.0) || !s2.is_finite() || !m.is_finite() {
        return Err(Error::validation(format!(
            "scalar truncation needs finite m and s2 > 0, got m={m}, s2={s2}"
        )));
    }
    let s = s2.sqrt();
    let a = -m / s;
    if a < -8.0 {
        // The orthant holds all but ~6e-16 of the mass.
        return Ok((m, s2));
    }
    if a > 8.0 {
        let m_plus = s * gauss::lambda_minus_alpha_tail(a);
        let v_plus = s2 * gauss::variance_factor_tail(a);
        return Ok((m_plus, v_plus));
    }
    let lambda = gauss::mills_lambda(a);
    let m_plus = s * (lambda - a);
    let v_plus = s2 * (1.0 - lambda * (lambda - a));
    Ok((m_plus, v_plus))
}

/// Sequentially truncate the coordinates listed in `constrained` (0-based,
/// processed in the order given) to `[0, inf)` and return the
/// moment-matched joint normal.
pub fn sequential_truncate(g: &GaussianMoments, constrained: &[usize]) -> Result<GaussianMoments> {
    let d = g.dim();
    for &i in constrained {
        if i >= d {
            return Err(Error::validation(format!(
                "constrained index {i} out of range for dimension {d}"
            )));
        }
    }
    let mut mean = g.mean.clone();
    let mut cov = g.cov.clone();
    for (step, &i) in constrained.iter().enumerate() {
        let m = mean[i];
        let s2 = cov[(i, i)];
        if !(s2 > 0.0) {
            return Err(Error::degenerate(format!(
                "sequential truncation constraint {step} (coordinate {i}): non-positive marginal variance {s2}"
            )));
        }
        let (m_plus, v_plus) = truncated_scalar_moments(m, s2)?;
        let col = cov.column(i).clone_owned();
        mean += &col * ((m_plus - m) / s2);
        cov += (&col * col.transpose()) * ((v_plus - s2) / (s2 * s2));
        linalg::symmetrize(&mut cov);
    }
    GaussianMoments::new(mean, cov)
}
