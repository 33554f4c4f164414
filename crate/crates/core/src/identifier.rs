//! Recursive variational-Bayes identifier for AR coefficients with
//! skew-normal innovations.
//!
//! Each measurement is absorbed by a fixed number of coordinate-ascent
//! sweeps alternating between the joint coefficient/skewness-variable
//! factor (a Kalman update on the augmented state followed by sequential
//! truncation of the skewness coordinates) and the innovation-parameter
//! factor (a closed-form MVNIW refresh). The time update is a random-walk
//! Kalman prediction for the coefficients and a forgetting-factor discount
//! for the noise posterior.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::mvniw::{self, MvniwParams};
use crate::sim;
use crate::skew_normal::HALF_NORMAL_MEAN;
use crate::truncation::{sequential_truncate, GaussianMoments};

/// Complete recursive posterior: coefficient mean/covariance plus the
/// MVNIW noise posterior.
#[derive(Debug, Clone)]
pub struct FilterState {
    /// AR coefficient mean.
    pub x: DVector<f64>,
    /// Coefficient covariance (SPD).
    pub p: DMatrix<f64>,
    /// Innovation-parameter posterior.
    pub noise: MvniwParams,
}

impl FilterState {
    pub fn new(x: DVector<f64>, p: DMatrix<f64>, noise: MvniwParams) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::validation("coefficient vector must be non-empty"));
        }
        if !linalg::all_finite_vector(&x) {
            return Err(Error::validation("coefficient mean has non-finite entries"));
        }
        linalg::check_symmetric(&p, x.len(), "coefficient covariance P")?;
        linalg::cholesky_spd(&p, "coefficient covariance P")?;
        Ok(Self { x, p, noise })
    }

    pub fn n_ar(&self) -> usize {
        self.x.len()
    }

    pub fn n_z(&self) -> usize {
        self.noise.dim()
    }
}

/// How the inner VB loop decides it is done.
#[derive(Debug, Clone)]
pub enum VbStopping {
    /// Run exactly this many coordinate sweeps.
    FixedIterations(usize),
    /// Stop when the relative change of the joint mean drops below
    /// `rel_tol`, or after `max_iterations` sweeps, whichever comes first.
    Tolerance { max_iterations: usize, rel_tol: f64 },
}

impl VbStopping {
    fn max_iterations(&self) -> usize {
        match self {
            VbStopping::FixedIterations(n) => *n,
            VbStopping::Tolerance { max_iterations, .. } => *max_iterations,
        }
    }

    fn tolerance(&self) -> Option<f64> {
        match self {
            VbStopping::FixedIterations(_) => None,
            VbStopping::Tolerance { rel_tol, .. } => Some(*rel_tol),
        }
    }
}

/// Process-noise policy applied at every prediction.
#[derive(Debug, Clone)]
pub enum QPolicy {
    Fixed(DMatrix<f64>),
    /// Rescale the geometric kernel by the largest current posterior
    /// variance; see [`sim::adaptive_q`].
    Adaptive,
}

/// Static configuration of one identification run.
#[derive(Debug, Clone)]
pub struct IdentifierConfig {
    pub n_ar: usize,
    pub n_z: usize,
    /// Forgetting factor in (0, 1].
    pub gamma: f64,
    pub stopping: VbStopping,
    pub q_policy: QPolicy,
}

impl IdentifierConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_ar == 0 || self.n_z == 0 {
            return Err(Error::validation("n_ar and n_z must be positive"));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::validation(format!(
                "forgetting factor {} must lie in (0, 1]",
                self.gamma
            )));
        }
        if self.stopping.max_iterations() == 0 {
            return Err(Error::validation("at least one VB iteration is required"));
        }
        if let Some(tol) = self.stopping.tolerance() {
            if !(tol > 0.0) {
                return Err(Error::validation("VB tolerance must be positive"));
            }
        }
        if let QPolicy::Fixed(q) = &self.q_policy {
            linalg::check_symmetric(q, self.n_ar, "process noise Q")?;
        }
        Ok(())
    }
}

/// Final iterate of the inner VB loop, exposed for diagnostics and tests.
#[derive(Debug, Clone)]
pub struct VbIterate {
    /// Joint mean over (coefficients, skewness variables) after truncation.
    pub xi: DVector<f64>,
    /// Joint covariance after truncation.
    pub xi_cov: DMatrix<f64>,
    /// Posterior mean of the skewness variables (componentwise >= 0).
    pub u_mean: DVector<f64>,
    /// Posterior covariance of the skewness variables.
    pub u_cov: DMatrix<f64>,
    /// Cross-covariance between coefficients and skewness variables.
    pub upsilon: DMatrix<f64>,
    /// Relative change of `xi` between successive sweeps (diagnostic).
    pub xi_deltas: Vec<f64>,
    /// Number of sweeps actually run.
    pub iterations: usize,
}

/// Stack the last `n_ar` measurements as columns, most recent first,
/// zero-padding the columns that precede the first measurement.
pub fn build_regressor(history: &[DVector<f64>], n_ar: usize, n_z: usize) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(n_z, n_ar);
    for (j, z) in history.iter().take(n_ar).enumerate() {
        c.column_mut(j).copy_from(z);
    }
    c
}

/// One measurement update: runs the VB loop and returns the posterior state
/// together with the final inner iterate.
///
/// The posterior degrees of freedom are the predicted ones plus one; the
/// joint covariance update uses the symmetric form `Xi - K S K^T`.
pub fn vb_measurement_update(
    pred: &FilterState,
    z: &DVector<f64>,
    c: &DMatrix<f64>,
    cfg: &IdentifierConfig,
) -> Result<(FilterState, VbIterate)> {
    cfg.validate()?;
    let n_ar = cfg.n_ar;
    let n_z = cfg.n_z;
    let d = n_ar + n_z;
    if pred.n_ar() != n_ar || pred.n_z() != n_z {
        return Err(Error::validation("state dimensions disagree with config"));
    }
    if z.len() != n_z || c.nrows() != n_z || c.ncols() != n_ar {
        return Err(Error::validation("measurement or regressor dimension mismatch"));
    }
    if !linalg::all_finite_vector(z) || !linalg::all_finite_matrix(c) {
        return Err(Error::validation("measurement or regressor is non-finite"));
    }

    let shift = HALF_NORMAL_MEAN;
    let ones = DVector::from_element(n_z, 1.0);

    // Prior-side quantities that stay fixed across sweeps.
    let v_prior_inv = linalg::spd_inverse(&pred.noise.v, "prior column scale V")?;
    let dvp = &pred.noise.delta_hat * &v_prior_inv;
    let v_prior_inv_chol = linalg::cholesky_spd(&v_prior_inv, "inverse prior column scale")?.l();

    let nu_post = pred.noise.nu + 1.0;
    let mut delta = pred.noise.delta_hat.clone();
    let mut v = pred.noise.v.clone();
    let mut psi = pred.noise.psi.clone();

    let mut latest: Option<(DVector<f64>, DMatrix<f64>, DVector<f64>, DMatrix<f64>)> = None;
    let mut xi_prev: Option<DVector<f64>> = None;
    let mut xi_deltas = Vec::new();
    let mut iterations = 0usize;

    for iter in 0..cfg.stopping.max_iterations() {
        iterations = iter + 1;
        let r_hat = &psi / (nu_post - n_z as f64 - 1.0);

        // Joint prior over (x, u) for this sweep.
        let mut ivn = DMatrix::identity(n_z, n_z) + n_z as f64 * &v;
        linalg::symmetrize(&mut ivn);
        let g = linalg::spd_inverse(&ivn, &format!("u prior scale (vb iteration {iter})"))?;
        let u_prior_mean = n_z as f64 * shift * (&g * (&v * &ones));
        let mut xi = DVector::zeros(d);
        xi.rows_mut(0, n_ar).copy_from(&pred.x);
        xi.rows_mut(n_ar, n_z).copy_from(&u_prior_mean);
        let mut xi_cov = DMatrix::zeros(d, d);
        xi_cov.view_mut((0, 0), (n_ar, n_ar)).copy_from(&pred.p);
        xi_cov.view_mut((n_ar, n_ar), (n_z, n_z)).copy_from(&g);

        // The prior covariance can span more than eight orders of magnitude
        // across its diagonal (geometric process-noise kernel, measurements
        // of wildly varying size), which defeats Cholesky in raw
        // coordinates. Equilibrate: work on the unit-diagonal rescaling and
        // map back afterwards. Positivity constraints are scale-invariant,
        // so the truncation can run in scaled coordinates too.
        let scale = DVector::from_fn(d, |i, _| xi_cov[(i, i)].sqrt());
        for i in 0..d {
            if !(scale[i] > 0.0 && scale[i].is_finite()) {
                return Err(Error::degenerate(format!(
                    "joint prior variance {i} non-positive (vb iteration {iter})"
                )));
            }
        }
        let xi_s = DVector::from_fn(d, |i, _| xi[i] / scale[i]);
        let mut cov_s = DMatrix::from_fn(d, d, |i, j| xi_cov[(i, j)] / (scale[i] * scale[j]));
        linalg::symmetrize(&mut cov_s);

        // Kalman update of the augmented state with model [C Delta], in
        // scaled coordinates (column j of the model picks up scale[j]).
        let mut c_tilde = DMatrix::zeros(n_z, d);
        c_tilde.view_mut((0, 0), (n_z, n_ar)).copy_from(c);
        c_tilde.view_mut((0, n_ar), (n_z, n_z)).copy_from(&delta);
        for j in 0..d {
            c_tilde.column_mut(j).scale_mut(scale[j]);
        }
        let xc = &cov_s * c_tilde.transpose();
        let mut s = &c_tilde * &xc + &r_hat;
        linalg::symmetrize(&mut s);
        let chol_s = linalg::cholesky_degenerate(
            &s,
            &format!("innovation covariance S (vb iteration {iter})"),
        )?;
        let k = chol_s.solve(&xc.transpose()).transpose();
        let innovation = z - &c_tilde * &xi_s + (&delta * &ones) * shift;
        let xi_hat = &xi_s + &k * &innovation;
        // Joseph-form covariance update: both terms stay PSD even when the
        // correlation structure is nearly singular.
        let i_kc = DMatrix::identity(d, d) - &k * &c_tilde;
        let mut xi_cov_hat = &i_kc * (&cov_s * i_kc.transpose()) + &k * (&r_hat * k.transpose());
        linalg::symmetrize(&mut xi_cov_hat);

        // Restore the skewness coordinates to the positive orthant.
        let constrained: Vec<usize> = (n_ar..d).collect();
        let trunc = sequential_truncate(
            &GaussianMoments::new(xi_hat, xi_cov_hat)?,
            &constrained,
        )
        .map_err(|e| match e {
            Error::Degeneracy { context, step } => Error::Degeneracy {
                context: format!("{context} (vb iteration {iter})"),
                step,
            },
            other => other,
        })?;

        // Map the joint moments back to natural units.
        let mean_n = DVector::from_fn(d, |i, _| trunc.mean[i] * scale[i]);
        let cov_n = DMatrix::from_fn(d, d, |i, j| trunc.cov[(i, j)] * scale[i] * scale[j]);

        let x_post = mean_n.rows(0, n_ar).clone_owned();
        let mut p_post = linalg::symmetrized(&cov_n.view((0, 0), (n_ar, n_ar)).clone_owned());
        linalg::ensure_spd(
            &mut p_post,
            &format!("coefficient covariance P (vb iteration {iter})"),
        )?;
        let u_mean = mean_n.rows(n_ar, n_z).clone_owned();
        let u_cov = cov_n.view((n_ar, n_ar), (n_z, n_z)).clone_owned();
        let upsilon = cov_n.view((0, n_ar), (n_ar, n_z)).clone_owned();
        let u_tilde = &u_mean - shift * &ones;

        // Closed-form refresh of the noise posterior.
        let mut v_inv_post = &u_cov + &u_tilde * u_tilde.transpose() + &v_prior_inv;
        linalg::symmetrize(&mut v_inv_post);
        v = linalg::spd_inverse(
            &v_inv_post,
            &format!("u-moment matrix V (vb iteration {iter})"),
        )?;
        let resid = z - c * &x_post;
        delta = (&resid * u_tilde.transpose() - c * &upsilon + &dvp) * &v;

        // Scale update, written in the completed-square form
        //   psi + (delta - delta_prior) Vp^{-1} (delta - delta_prior)^T
        //       + m m^T + [C delta] Cov(x,u) [C delta]^T,
        // m = resid - delta u_tilde. This is algebraically identical to the
        // difference form but every term is a Gram product, so the result
        // cannot round to an indefinite matrix even when the residuals are
        // enormous.
        let m = &resid - &delta * &u_tilde;
        let mut joint_cov = trunc.cov.clone();
        linalg::ensure_spd(
            &mut joint_cov,
            &format!("truncated joint covariance (vb iteration {iter})"),
        )?;
        let l_joint = linalg::cholesky_degenerate(
            &joint_cov,
            &format!("truncated joint covariance (vb iteration {iter})"),
        )?
        .l();
        let mut t = DMatrix::zeros(n_z, d);
        t.view_mut((0, 0), (n_z, n_ar)).copy_from(c);
        t.view_mut((0, n_ar), (n_z, n_z)).copy_from(&delta);
        for j in 0..d {
            t.column_mut(j).scale_mut(scale[j]);
        }
        let half = &t * &l_joint;
        let prior_pull = (&delta - &pred.noise.delta_hat) * &v_prior_inv_chol;
        let mut psi_new = &pred.noise.psi
            + &m * m.transpose()
            + &half * half.transpose()
            + &prior_pull * prior_pull.transpose();
        linalg::symmetrize(&mut psi_new);
        linalg::ensure_spd(
            &mut psi_new,
            &format!("noise scale Psi (vb iteration {iter})"),
        )?;
        psi = psi_new;

        if let Some(prev) = &xi_prev {
            let denom = mean_n.norm().max(1e-300);
            xi_deltas.push((&mean_n - prev).norm() / denom);
        }
        xi_prev = Some(mean_n.clone());
        let converged = cfg
            .stopping
            .tolerance()
            .zip(xi_deltas.last())
            .map(|(tol, delta)| *delta < tol)
            .unwrap_or(false);
        latest = Some((mean_n, cov_n, x_post, p_post));
        if converged {
            break;
        }
    }

    let (mean_n, cov_n, x_post, p_post) = latest.expect("at least one VB iteration");
    let u_mean = mean_n.rows(n_ar, n_z).clone_owned();
    let u_cov = cov_n.view((n_ar, n_ar), (n_z, n_z)).clone_owned();
    let upsilon = cov_n.view((0, n_ar), (n_ar, n_z)).clone_owned();
    let iterate = VbIterate {
        xi: mean_n,
        xi_cov: cov_n,
        u_mean,
        u_cov,
        upsilon,
        xi_deltas,
        iterations,
    };
    let noise = MvniwParams::new(delta, v, psi, nu_post)?;
    Ok((FilterState::new(x_post, p_post, noise)?, iterate))
}

/// Time update: random-walk prediction for the coefficients, forgetting
/// for the noise posterior.
pub fn predict(post: &FilterState, q: &DMatrix<f64>, gamma: f64) -> Result<FilterState> {
    linalg::check_symmetric(q, post.n_ar(), "process noise Q")?;
    let p = linalg::symmetrized(&(&post.p + q));
    FilterState::new(post.x.clone(), p, mvniw::forget(&post.noise, gamma)?)
}

/// Driver that owns the regressor history and alternates update/predict.
#[derive(Debug, Clone)]
pub struct IdentifierRun {
    cfg: IdentifierConfig,
    prior: FilterState,
    posterior: Option<FilterState>,
    last_iterate: Option<VbIterate>,
    history: Vec<DVector<f64>>,
    step: usize,
}

impl IdentifierRun {
    pub fn new(init: FilterState, cfg: IdentifierConfig) -> Result<Self> {
        cfg.validate()?;
        if init.n_ar() != cfg.n_ar || init.n_z() != cfg.n_z {
            return Err(Error::validation("initial state dimensions disagree with config"));
        }
        Ok(Self {
            cfg,
            prior: init,
            posterior: None,
            last_iterate: None,
            history: Vec::new(),
            step: 0,
        })
    }

    pub fn config(&self) -> &IdentifierConfig {
        &self.cfg
    }

    /// Predictive state that the next measurement will be fused with.
    pub fn prior(&self) -> &FilterState {
        &self.prior
    }

    /// Posterior from the most recent step, if any.
    pub fn posterior(&self) -> Option<&FilterState> {
        self.posterior.as_ref()
    }

    /// Final VB iterate from the most recent step, if any.
    pub fn last_iterate(&self) -> Option<&VbIterate> {
        self.last_iterate.as_ref()
    }

    /// Number of measurements processed so far.
    pub fn steps(&self) -> usize {
        self.step
    }

    /// Absorb one measurement; returns the posterior for this step.
    pub fn step(&mut self, z: &DVector<f64>) -> Result<&FilterState> {
        let k = self.step + 1;
        let c = build_regressor(&self.history, self.cfg.n_ar, self.cfg.n_z);
        let (post, iterate) =
            vb_measurement_update(&self.prior, z, &c, &self.cfg).map_err(|e| e.at_step(k))?;
        let q = match &self.cfg.q_policy {
            QPolicy::Fixed(q) => q.clone(),
            QPolicy::Adaptive => sim::adaptive_q(&post.p, self.cfg.gamma).map_err(|e| e.at_step(k))?,
        };
        self.prior = predict(&post, &q, self.cfg.gamma).map_err(|e| e.at_step(k))?;
        self.history.insert(0, z.clone());
        self.history.truncate(self.cfg.n_ar);
        self.step = k;
        self.posterior = Some(post);
        self.last_iterate = Some(iterate);
        Ok(self.posterior.as_ref().expect("posterior just stored"))
    }
}

/// Run the identifier over a measurement sequence, returning the posterior
/// state after every step.
pub fn run_identifier(
    measurements: &[DVector<f64>],
    init: &FilterState,
    cfg: &IdentifierConfig,
) -> Result<Vec<FilterState>> {
    let mut run = IdentifierRun::new(init.clone(), cfg.clone())?;
    let mut out = Vec::with_capacity(measurements.len());
    for z in measurements {
        out.push(run.step(z)?.clone());
    }
    Ok(out)
}
