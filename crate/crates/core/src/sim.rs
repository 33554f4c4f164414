//! Synthetic AR data generation and the error metric used by the
//! benchmark harness.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::skew_normal::{sn_sample, SkewNormalParams};

/// Draw a stable coefficient vector by sampling the characteristic roots
/// uniformly from (-1, 1) and expanding the polynomial.
///
/// The returned `a` satisfies `prod_i (q - r_i) = q^n - a_1 q^{n-1} - ... - a_n`,
/// so the companion matrix of `z_k = sum_i a_i z_{k-i}` has eigenvalues
/// exactly `{r_i}` and spectral radius below one.
pub fn generate_stable_coefficients<R: Rng + ?Sized>(rng: &mut R, n_ar: usize) -> DVector<f64> {
    assert!(n_ar >= 1, "n_ar must be positive");
    // Expand the monic polynomial one root at a time.
    let mut poly = vec![1.0f64];
    for _ in 0..n_ar {
        let r = rng.gen_range(-1.0..1.0);
        let mut next = vec![0.0; poly.len() + 1];
        for (i, &p) in poly.iter().enumerate() {
            next[i] += p;
            next[i + 1] -= r * p;
        }
        poly = next;
    }
    DVector::from_iterator(n_ar, poly[1..].iter().map(|&b| -b))
}

/// First-order stable spline kernel used as the coefficient prior:
/// entry `(i, j)` is `(29/3) * 0.5^max(i, j)` with zero-based indices.
pub fn stable_spline_prior(n_ar: usize) -> DMatrix<f64> {
    spline_kernel(n_ar, 29.0 / 3.0)
}

fn spline_kernel(n: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| scale * 0.5f64.powi(i.max(j) as i32))
}

/// Process-noise matrix rescaling the spline kernel by the largest current
/// posterior variance: `(1/gamma - 1) * max(diag P) * 0.5^max(i, j)`.
///
/// `gamma = 1` yields the zero matrix.
pub fn adaptive_q(p: &DMatrix<f64>, gamma: f64) -> Result<DMatrix<f64>> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::validation(format!(
            "forgetting factor {gamma} must lie in (0, 1]"
        )));
    }
    let n = p.nrows();
    linalg::check_symmetric(p, n, "posterior covariance P")?;
    let max_diag = p.diagonal().max();
    if !(max_diag > 0.0) {
        return Err(Error::degenerate(
            "adaptive Q: posterior covariance has non-positive diagonal",
        ));
    }
    Ok(spline_kernel(n, (1.0 / gamma - 1.0) * max_diag))
}

/// Simulate `steps` measurements of `z_k = sum_i a_i z_{k-i} + e_k` with
/// skew-normal innovations and zero initial history.
pub fn simulate_trajectory<R: Rng + ?Sized>(
    rng: &mut R,
    coeffs: &DVector<f64>,
    truth: &SkewNormalParams,
    steps: usize,
) -> Result<Vec<DVector<f64>>> {
    let n_ar = coeffs.len();
    if n_ar == 0 {
        return Err(Error::validation("coefficient vector must be non-empty"));
    }
    if steps == 0 {
        return Ok(Vec::new());
    }
    let noise = sn_sample(rng, truth, steps)?;
    let mut history: Vec<DVector<f64>> = Vec::with_capacity(n_ar);
    let mut out = Vec::with_capacity(steps);
    for (k, e) in noise.into_iter().enumerate() {
        let mut z = e;
        for (i, h) in history.iter().enumerate() {
            z += coeffs[i] * h;
        }
        if z.amax() > 1e12 || !linalg::all_finite_vector(&z) {
            return Err(Error::Divergence { step: k + 1 });
        }
        history.insert(0, z.clone());
        history.truncate(n_ar);
        out.push(z);
    }
    Ok(out)
}

/// Euclidean distance between estimated and true coefficient vectors.
pub fn identification_error(estimate: &DVector<f64>, truth: &DVector<f64>) -> f64 {
    assert_eq!(
        estimate.len(),
        truth.len(),
        "coefficient vectors must have equal length"
    );
    (estimate - truth).norm()
}
