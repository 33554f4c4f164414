//! The skew-normal innovation distribution: density, moments, sampling.
//!
//! The distribution is parametrized by a location vector `mu`, an SPD scale
//! matrix `R`, and a square skewness matrix `Delta`, and is shifted so that
//! its mean equals `mu` regardless of `Delta`. It is exactly the law of
//!
//! ```text
//! z = mu + Delta (u - sqrt(2/pi) 1) + chol(R) n,
//! u_i = |standard normal|,  n ~ N(0, I)
//! ```
//!
//! which is also the hierarchical form the recursive filter is built on.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::gauss;
use crate::linalg;

/// Mean of a componentwise half-normal vector: `sqrt(2/pi)`.
pub const HALF_NORMAL_MEAN: f64 = 0.7978845608028654;

/// Variance of a componentwise half-normal vector: `1 - 2/pi`.
pub const HALF_NORMAL_VAR: f64 = 1.0 - std::f64::consts::FRAC_2_PI;

/// Location, scale, and skewness of the skew-normal distribution.
#[derive(Debug, Clone)]
pub struct SkewNormalParams {
    mu: DVector<f64>,
    r: DMatrix<f64>,
    delta: DMatrix<f64>,
}

impl SkewNormalParams {
    /// Validate dimensions, symmetry, and positive definiteness of `r`.
    pub fn new(mu: DVector<f64>, r: DMatrix<f64>, delta: DMatrix<f64>) -> Result<Self> {
        let n = mu.len();
        if n == 0 {
            return Err(Error::validation("dimension must be positive"));
        }
        if !linalg::all_finite_vector(&mu) {
            return Err(Error::validation("mu has non-finite entries"));
        }
        linalg::check_symmetric(&r, n, "scale R")?;
        linalg::cholesky_spd(&r, "scale R")?;
        if delta.nrows() != n || delta.ncols() != n {
            return Err(Error::validation(format!(
                "skewness Delta must be {n}x{n}, got {}x{}",
                delta.nrows(),
                delta.ncols()
            )));
        }
        if !linalg::all_finite_matrix(&delta) {
            return Err(Error::validation("Delta has non-finite entries"));
        }
        Ok(Self { mu, r, delta })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn location(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn scale(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn skewness(&self) -> &DMatrix<f64> {
        &self.delta
    }
}

/// Log-density at `z`. Density evaluation works in log space; the linear
/// density is exposed by [`sn_pdf`].
pub fn sn_ln_pdf(z: &DVector<f64>, params: &SkewNormalParams) -> Result<f64> {
    let n = params.dim();
    if z.len() != n {
        return Err(Error::validation(format!(
            "point has dimension {}, parameters have {n}",
            z.len()
        )));
    }
    let c = HALF_NORMAL_MEAN;
    let ones = DVector::from_element(n, 1.0);

    // Gaussian factor: N(z; mu - c Delta 1, Omega), Omega = R + Delta Delta^T.
    let mut omega = &params.r + &params.delta * params.delta.transpose();
    linalg::symmetrize(&mut omega);
    let chol = linalg::cholesky_spd(&omega, "Omega = R + Delta Delta^T")?;
    let w = z - &params.mu + c * (&params.delta * &ones);
    let solved = chol.solve(&w);
    let quad = w.dot(&solved);
    let ln_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
    let ln_gauss = -0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + ln_det + quad);

    // Orthant factor: F_N(Delta^T Omega^{-1} w; 0, I - Delta^T Omega^{-1} Delta),
    // evaluated as written; if rounding costs the truncation scale its
    // positive definiteness we report it rather than regularize.
    let omega_inv_delta = chol.solve(&params.delta);
    let arg = params.delta.transpose() * solved;
    let mut gamma = DMatrix::identity(n, n) - params.delta.transpose() * omega_inv_delta;
    linalg::symmetrize(&mut gamma);
    for i in 0..n {
        if gamma[(i, i)] <= 0.0 {
            return Err(Error::validation(
                "truncation scale I - Delta^T Omega^{-1} Delta lost positive definiteness",
            ));
        }
    }
    linalg::cholesky_spd(&gamma, "truncation scale I - Delta^T Omega^{-1} Delta")?;
    let orthant = gauss::mvn_cdf(&arg, &gamma)?;

    Ok(n as f64 * std::f64::consts::LN_2 + ln_gauss + orthant.ln())
}

/// Density at `z`; integrates to one over R^n.
pub fn sn_pdf(z: &DVector<f64>, params: &SkewNormalParams) -> Result<f64> {
    Ok(sn_ln_pdf(z, params)?.exp())
}

/// Exact mean and covariance: `E[z] = mu`, `V[z] = R + (1 - 2/pi) Delta Delta^T`.
pub fn sn_moments(params: &SkewNormalParams) -> (DVector<f64>, DMatrix<f64>) {
    let mut cov = &params.r + HALF_NORMAL_VAR * (&params.delta * params.delta.transpose());
    linalg::symmetrize(&mut cov);
    (params.mu.clone(), cov)
}

/// Draw `count` samples through the hierarchical form.
///
/// The positive-orthant truncated normal with identity covariance
/// factorizes, so `u` is drawn componentwise as the absolute value of a
/// standard normal. That shortcut is exact only for identity covariance;
/// do not reuse this sampler for correlated truncation.
pub fn sn_sample<R: Rng + ?Sized>(
    rng: &mut R,
    params: &SkewNormalParams,
    count: usize,
) -> Result<Vec<DVector<f64>>> {
    if count == 0 {
        return Err(Error::validation("sample count must be at least 1"));
    }
    let n = params.dim();
    let chol = linalg::cholesky_spd(&params.r, "scale R")?;
    let l = chol.l();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let u = DVector::from_fn(n, |_, _| {
            let g: f64 = rng.sample(StandardNormal);
            g.abs() - HALF_NORMAL_MEAN
        });
        let noise = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        out.push(&params.mu + &params.delta * u + &l * noise);
    }
    Ok(out)
}
