//! Matrix-variate-normal--inverse-Wishart distribution over the innovation
//! parameters `(R, Delta)`.
//!
//! `R` follows an inverse Wishart with scale `psi` and `nu` degrees of
//! freedom, and `Delta | R` a matrix-variate normal with mean `delta_hat`,
//! among-row covariance `R`, and among-column covariance `v`. Inverse-Wishart
//! degree conventions differ between references; this crate pins the one in
//! which `E[R^{-1}] = (nu - n - 1) psi^{-1}`, and the moment tests verify the
//! sampler against that identity rather than against any named convention.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg;

/// Parameters of the MVNIW distribution.
#[derive(Debug, Clone)]
pub struct MvniwParams {
    /// Matrix-normal mean of `Delta`.
    pub delta_hat: DMatrix<f64>,
    /// Among-column scale of `Delta` (SPD).
    pub v: DMatrix<f64>,
    /// Inverse-Wishart scale (SPD).
    pub psi: DMatrix<f64>,
    /// Degrees of freedom; must exceed `2 n` for the filter's moments.
    pub nu: f64,
}

impl MvniwParams {
    pub fn new(delta_hat: DMatrix<f64>, v: DMatrix<f64>, psi: DMatrix<f64>, nu: f64) -> Result<Self> {
        let n = delta_hat.nrows();
        if n == 0 || delta_hat.ncols() != n {
            return Err(Error::validation(format!(
                "delta_hat must be square and non-empty, got {}x{}",
                delta_hat.nrows(),
                delta_hat.ncols()
            )));
        }
        if !linalg::all_finite_matrix(&delta_hat) {
            return Err(Error::validation("delta_hat has non-finite entries"));
        }
        linalg::check_symmetric(&v, n, "column scale V")?;
        linalg::cholesky_spd(&v, "column scale V")?;
        linalg::check_symmetric(&psi, n, "scale Psi")?;
        linalg::cholesky_spd(&psi, "scale Psi")?;
        if !(nu > 2.0 * n as f64) {
            return Err(Error::validation(format!(
                "degrees of freedom {nu} must exceed 2 n = {}",
                2 * n
            )));
        }
        Ok(Self { delta_hat, v, psi, nu })
    }

    pub fn dim(&self) -> usize {
        self.delta_hat.nrows()
    }
}

/// `E[R^{-1}]^{-1} = psi / (nu - n - 1)`, the effective noise covariance the
/// filter plugs into its Kalman step.
pub fn expected_r(p: &MvniwParams) -> Result<DMatrix<f64>> {
    let n = p.dim() as f64;
    if !(p.nu > n + 1.0) {
        return Err(Error::DegreesOfFreedom {
            nu: p.nu,
            min: n + 1.0,
        });
    }
    Ok(&p.psi / (p.nu - n - 1.0))
}

/// Closed-form cross moments `(E[R^{-1} Delta], E[Delta^T R^{-1} Delta])`.
///
/// The first equals `expected_r(p)^{-1} delta_hat`; the second is
/// `n v + delta_hat^T expected_r(p)^{-1} delta_hat`.
pub fn cross_moments(p: &MvniwParams) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = p.dim();
    let r_hat = expected_r(p)?;
    let chol = linalg::cholesky_degenerate(&r_hat, "expected noise covariance")?;
    let rinv_delta = chol.solve(&p.delta_hat);
    let mut quad = n as f64 * &p.v + p.delta_hat.transpose() * &rinv_delta;
    linalg::symmetrize(&mut quad);
    Ok((rinv_delta, quad))
}

/// Draw one `(R, Delta)` pair.
///
/// `R^{-1}` is Wishart with scale `psi^{-1}` and `nu - n - 1` degrees of
/// freedom (that is what pins the convention above); it is generated by the
/// Bartlett decomposition, which handles non-integer degrees of freedom.
pub fn sample<RNG: Rng + ?Sized>(rng: &mut RNG, p: &MvniwParams) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = p.dim();
    let df = p.nu - n as f64 - 1.0;

    // Factor F with F F^T = psi^{-1}.
    let psi_inv = linalg::spd_inverse(&p.psi, "Psi")?;
    let f = linalg::cholesky_spd(&psi_inv, "Psi^{-1}")?.l();

    // Bartlett lower factor: chi-square diagonal, standard normal below.
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        let chi = ChiSquared::new(df - i as f64).map_err(|e| {
            Error::validation(format!("invalid chi-square dof {}: {e}", df - i as f64))
        })?;
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = rng.sample(StandardNormal);
        }
    }

    // R^{-1} = (F A)(F A)^T, so M^{-T} with M = F A is a factor of R.
    let m = f * a;
    let m_inv = m
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::degenerate("Bartlett factor inversion"))?;
    let r_factor = m_inv.transpose();
    let mut r = &r_factor * r_factor.transpose();
    linalg::symmetrize(&mut r);

    // Delta = delta_hat + H Z L_v^T with H H^T = R.
    let l_v = linalg::cholesky_spd(&p.v, "column scale V")?.l();
    let z = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let delta = &p.delta_hat + r_factor * z * l_v.transpose();
    Ok((r, delta))
}

/// Forgetting-factor time update: exponentially discount past information,
/// keeping the distribution well defined.
///
/// Returns `(delta_hat, v / gamma, gamma psi, gamma nu + (1 - gamma) 2 n)`.
/// The degree map is affine with fixed point `2 n`, so `nu > 2 n` is
/// preserved for every `gamma` in `(0, 1]`.
pub fn forget(p: &MvniwParams, gamma: f64) -> Result<MvniwParams> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::validation(format!(
            "forgetting factor {gamma} must lie in (0, 1]"
        )));
    }
    let n = p.dim() as f64;
    MvniwParams::new(
        p.delta_hat.clone(),
        &p.v / gamma,
        gamma * &p.psi,
        gamma * p.nu + (1.0 - gamma) * 2.0 * n,
    )
}
