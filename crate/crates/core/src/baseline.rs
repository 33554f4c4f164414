//! Comparison method: a variational-Bayes adaptive filter with normal
//! innovations and an inverse-Wishart posterior over the noise covariance,
//! discounted by the same forgetting machinery as the skew identifier.
//!
//! This is exactly the symmetric specialization of the skew filter: pin the
//! skewness to zero and drop the matrix-normal factor. The forgetting floor
//! on the degrees of freedom is `n_z + 1` (existence of the inverted
//! expected precision) instead of the joint model's `2 n_z`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::identifier::QPolicy;
use crate::linalg;
use crate::sim;

/// Coefficient posterior plus the inverse-Wishart noise posterior.
#[derive(Debug, Clone)]
pub struct GaussianFilterState {
    pub x: DVector<f64>,
    pub p: DMatrix<f64>,
    /// Inverse-Wishart scale of the innovation covariance.
    pub psi: DMatrix<f64>,
    /// Degrees of freedom; must exceed `n_z + 1`.
    pub nu: f64,
}

impl GaussianFilterState {
    pub fn new(x: DVector<f64>, p: DMatrix<f64>, psi: DMatrix<f64>, nu: f64) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::validation("coefficient vector must be non-empty"));
        }
        if !linalg::all_finite_vector(&x) {
            return Err(Error::validation("coefficient mean has non-finite entries"));
        }
        linalg::check_symmetric(&p, x.len(), "coefficient covariance P")?;
        linalg::cholesky_spd(&p, "coefficient covariance P")?;
        let n_z = psi.nrows();
        linalg::check_symmetric(&psi, n_z, "scale Psi")?;
        linalg::cholesky_spd(&psi, "scale Psi")?;
        if !(nu > n_z as f64 + 1.0) {
            return Err(Error::validation(format!(
                "degrees of freedom {nu} must exceed n_z + 1 = {}",
                n_z + 1
            )));
        }
        Ok(Self { x, p, psi, nu })
    }

    pub fn n_ar(&self) -> usize {
        self.x.len()
    }

    pub fn n_z(&self) -> usize {
        self.psi.nrows()
    }
}

/// One measurement update with `iterations` coordinate sweeps.
///
/// Each sweep refreshes the effective noise covariance
/// `psi / (nu - n_z - 1)`, redoes the Kalman update of `(x, P)` from the
/// predictive state, and rebuilds the scale from the posterior residual.
pub fn gvb_update(
    pred: &GaussianFilterState,
    z: &DVector<f64>,
    c: &DMatrix<f64>,
    iterations: usize,
) -> Result<GaussianFilterState> {
    let n_ar = pred.n_ar();
    let n_z = pred.n_z();
    if iterations == 0 {
        return Err(Error::validation("at least one VB iteration is required"));
    }
    if z.len() != n_z || c.nrows() != n_z || c.ncols() != n_ar {
        return Err(Error::validation("measurement or regressor dimension mismatch"));
    }
    if !linalg::all_finite_vector(z) || !linalg::all_finite_matrix(c) {
        return Err(Error::validation("measurement or regressor is non-finite"));
    }

    let nu_post = pred.nu + 1.0;
    let mut psi = pred.psi.clone();
    let mut x_post = pred.x.clone();
    let mut p_post = pred.p.clone();

    // Equilibrated coordinates (unit prior diagonal) plus the Joseph-form
    // update keep P positive definite through the reference experiment's
    // extreme dynamic range; same treatment as the skew filter.
    let scale = DVector::from_fn(n_ar, |i, _| pred.p[(i, i)].sqrt());
    for i in 0..n_ar {
        if !(scale[i] > 0.0 && scale[i].is_finite()) {
            return Err(Error::degenerate(format!(
                "prior coefficient variance {i} non-positive"
            )));
        }
    }
    let x_s = DVector::from_fn(n_ar, |i, _| pred.x[i] / scale[i]);
    let mut p_s = DMatrix::from_fn(n_ar, n_ar, |i, j| pred.p[(i, j)] / (scale[i] * scale[j]));
    linalg::symmetrize(&mut p_s);
    let mut c_s = c.clone();
    for j in 0..n_ar {
        c_s.column_mut(j).scale_mut(scale[j]);
    }
    let pc = &p_s * c_s.transpose();

    for iter in 0..iterations {
        let r_hat = &psi / (nu_post - n_z as f64 - 1.0);
        let mut s = &c_s * &pc + &r_hat;
        linalg::symmetrize(&mut s);
        let chol_s = linalg::cholesky_degenerate(
            &s,
            &format!("innovation covariance S (vb iteration {iter})"),
        )?;
        let k = chol_s.solve(&pc.transpose()).transpose();
        let x_hat = &x_s + &k * (z - &c_s * &x_s);
        let i_kc = DMatrix::identity(n_ar, n_ar) - &k * &c_s;
        let mut p_hat = &i_kc * (&p_s * i_kc.transpose()) + &k * (&r_hat * k.transpose());
        linalg::symmetrize(&mut p_hat);

        x_post = DVector::from_fn(n_ar, |i, _| x_hat[i] * scale[i]);
        p_post = DMatrix::from_fn(n_ar, n_ar, |i, j| p_hat[(i, j)] * scale[i] * scale[j]);
        linalg::ensure_spd(
            &mut p_post,
            &format!("coefficient covariance P (vb iteration {iter})"),
        )?;
        let resid = z - c * &x_post;
        let mut psi_new =
            &pred.psi + &resid * resid.transpose() + c * (&p_post * c.transpose());
        linalg::symmetrize(&mut psi_new);
        psi = psi_new;
    }

    GaussianFilterState::new(x_post, p_post, psi, nu_post)
}

/// Time update: `P += Q`, `psi *= gamma`, `nu -> gamma nu + (1-gamma)(n_z+1)`.
pub fn gvb_predict(
    post: &GaussianFilterState,
    q: &DMatrix<f64>,
    gamma: f64,
) -> Result<GaussianFilterState> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::validation(format!(
            "forgetting factor {gamma} must lie in (0, 1]"
        )));
    }
    linalg::check_symmetric(q, post.n_ar(), "process noise Q")?;
    let n_z = post.n_z() as f64;
    GaussianFilterState::new(
        post.x.clone(),
        linalg::symmetrized(&(&post.p + q)),
        gamma * &post.psi,
        gamma * post.nu + (1.0 - gamma) * (n_z + 1.0),
    )
}

/// Driver mirroring [`crate::identifier::IdentifierRun`].
#[derive(Debug, Clone)]
pub struct GaussianRun {
    gamma: f64,
    iterations: usize,
    q_policy: QPolicy,
    prior: GaussianFilterState,
    posterior: Option<GaussianFilterState>,
    history: Vec<DVector<f64>>,
    step: usize,
}

impl GaussianRun {
    pub fn new(
        init: GaussianFilterState,
        gamma: f64,
        iterations: usize,
        q_policy: QPolicy,
    ) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::validation(format!(
                "forgetting factor {gamma} must lie in (0, 1]"
            )));
        }
        if iterations == 0 {
            return Err(Error::validation("at least one VB iteration is required"));
        }
        if let QPolicy::Fixed(q) = &q_policy {
            linalg::check_symmetric(q, init.n_ar(), "process noise Q")?;
        }
        Ok(Self {
            gamma,
            iterations,
            q_policy,
            prior: init,
            posterior: None,
            history: Vec::new(),
            step: 0,
        })
    }

    pub fn prior(&self) -> &GaussianFilterState {
        &self.prior
    }

    pub fn posterior(&self) -> Option<&GaussianFilterState> {
        self.posterior.as_ref()
    }

    pub fn steps(&self) -> usize {
        self.step
    }

    pub fn step(&mut self, z: &DVector<f64>) -> Result<&GaussianFilterState> {
        let k = self.step + 1;
        let c = crate::identifier::build_regressor(&self.history, self.prior.n_ar(), self.prior.n_z());
        let post = gvb_update(&self.prior, z, &c, self.iterations).map_err(|e| e.at_step(k))?;
        let q = match &self.q_policy {
            QPolicy::Fixed(q) => q.clone(),
            QPolicy::Adaptive => sim::adaptive_q(&post.p, self.gamma).map_err(|e| e.at_step(k))?,
        };
        self.prior = gvb_predict(&post, &q, self.gamma).map_err(|e| e.at_step(k))?;
        self.history.insert(0, z.clone());
        self.history.truncate(self.prior.n_ar());
        self.step = k;
        self.posterior = Some(post);
        Ok(self.posterior.as_ref().expect("posterior just stored"))
    }
}
