//! Small dense linear-algebra helpers shared across the filter modules.
//!
//! All SPD matrices in this crate are re-symmetrized after every update;
//! floating-point drift otherwise breaks Cholesky factorizations far
//! downstream of where it is introduced.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Replace `m` by `(m + m^T)/2`.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Returned copy of `(m + m^T)/2`.
pub fn symmetrized(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    symmetrize(&mut out);
    out
}

/// Maximum absolute asymmetry `|m_ij - m_ji|` relative to the largest entry.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = m.amax().max(1.0);
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / scale
}

pub fn all_finite_matrix(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

pub fn all_finite_vector(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Validate that `m` is square of size `n`, finite, and symmetric to within
/// machine-scale tolerance.
pub fn check_symmetric(m: &DMatrix<f64>, n: usize, name: &str) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::validation(format!(
            "{name} must be {n}x{n}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !all_finite_matrix(m) {
        return Err(Error::validation(format!("{name} has non-finite entries")));
    }
    if asymmetry(m) > 1e-8 {
        return Err(Error::validation(format!("{name} is not symmetric")));
    }
    Ok(())
}

/// Cholesky factorization that reports validation failures by name.
pub fn cholesky_spd(m: &DMatrix<f64>, name: &str) -> Result<Cholesky<f64, Dyn>> {
    m.clone()
        .cholesky()
        .ok_or_else(|| Error::validation(format!("{name} is not positive definite")))
}

/// Cholesky used mid-recursion: failure is a numerical degeneracy, not a
/// precondition violation.
pub fn cholesky_degenerate(m: &DMatrix<f64>, context: &str) -> Result<Cholesky<f64, Dyn>> {
    m.clone()
        .cholesky()
        .ok_or_else(|| Error::degenerate(context.to_string()))
}

/// SPD inverse through the Cholesky factor.
pub fn spd_inverse(m: &DMatrix<f64>, context: &str) -> Result<DMatrix<f64>> {
    let mut inv = cholesky_degenerate(m, context)?.inverse();
    symmetrize(&mut inv);
    Ok(inv)
}

/// Restore factorizability of a covariance whose smallest eigenvalues sit
/// at the floating-point rounding floor.
///
/// When the exact posterior covariance is SPD but has condition number near
/// 1/eps, the computed matrix can round to slightly indefinite. If Cholesky
/// fails, add the smallest diagonal ridge from `{1e-14, 1e-13, 1e-12}`
/// relative to the largest diagonal entry that restores it; anything beyond
/// that is a genuine degeneracy and is reported as one.
pub fn ensure_spd(m: &mut DMatrix<f64>, context: &str) -> Result<()> {
    if m.clone().cholesky().is_some() {
        return Ok(());
    }
    let scale = m.diagonal().amax().max(f64::MIN_POSITIVE);
    for eta in [1e-14, 1e-13, 1e-12] {
        let mut repaired = m.clone();
        for i in 0..m.nrows() {
            repaired[(i, i)] += eta * scale;
        }
        if repaired.clone().cholesky().is_some() {
            *m = repaired;
            return Ok(());
        }
    }
    Err(Error::degenerate(format!(
        "{context}: covariance indefinite beyond the rounding floor"
    )))
}
