//! Scalar and rectangle probabilities of the normal distribution.
//!
//! These are the only special-function primitives the filter needs: the
//! univariate pdf/cdf, the Mills-ratio quantities used by moment-matched
//! truncation, and a deterministic multivariate normal cdf. For dimension
//! two the cdf uses the Drezner/Genz quadrature below |rho| = 0.925 and an
//! adaptive conditional integral above it (absolute error under 1e-11
//! everywhere); for higher dimensions the first coordinate is integrated
//! out by adaptive Simpson with target absolute tolerance 1e-8 and the
//! conditional cdf is evaluated recursively. Cost grows geometrically with
//! dimension; the filter only ever needs small n_z.

use nalgebra::{DMatrix, DVector};
use libm::erfc;

use crate::error::{Error, Result};
use crate::linalg;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / TWO_PI.sqrt()
}

/// Standard normal cdf, computed through `erfc` so the lower tail keeps
/// full relative precision.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal survival function `1 - cdf(x)` without cancellation.
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Hazard (inverse Mills) ratio `phi(a) / (1 - Phi(a))`.
///
/// Above `a = 8` the survival function is evaluated by the asymptotic
/// Mills-ratio expansion instead of the erfc route, so the downstream
/// truncated-moment formulas stay free of 0/0 forms in the far tail.
pub fn mills_lambda(a: f64) -> f64 {
    if a > 8.0 {
        a + lambda_minus_alpha_tail(a)
    } else {
        norm_pdf(a) / norm_sf(a)
    }
}

/// `lambda(a) - a` for large positive `a`, from the expansion
/// `lambda(a) = a + 1/a - 2/a^3 + 10/a^5 - 74/a^7 + ...`.
pub(crate) fn lambda_minus_alpha_tail(a: f64) -> f64 {
    let x = 1.0 / (a * a);
    (1.0 - x * (2.0 - x * (10.0 - 74.0 * x))) / a
}

/// `1 - lambda(a) * (lambda(a) - a)` for large positive `a`; this is the
/// truncated-variance factor, expanded to avoid the `1 - (1 - eps)`
/// cancellation.
pub(crate) fn variance_factor_tail(a: f64) -> f64 {
    let x = 1.0 / (a * a);
    x * (1.0 - x * (6.0 - 50.0 * x))
}

/// Cumulative probability `P(X <= h, Y <= k)` for standard bivariate
/// normal variables with correlation `rho`.
///
/// For `|rho| <= 0.925` this is the Drezner/Genz arcsine quadrature
/// (absolute error below 1e-15); stronger correlations integrate the
/// conditional form `phi(t) Phi((k - rho t)/sqrt(1-rho^2))` adaptively
/// (absolute error around 1e-12).
pub fn bvn_cdf(h: f64, k: f64, rho: f64) -> f64 {
    debug_assert!((-1.0..=1.0).contains(&rho));
    if rho >= 1.0 {
        return norm_cdf(h.min(k));
    }
    if rho <= -1.0 {
        return (norm_cdf(h) + norm_cdf(k) - 1.0).max(0.0);
    }
    if rho.abs() <= 0.925 {
        return bvnu(-h, -k, rho);
    }
    if h < -8.5 || k < -8.5 {
        return 0.0;
    }
    let s = ((1.0 - rho) * (1.0 + rho)).sqrt();
    let integrand = |t: f64| norm_pdf(t) * norm_cdf((k - rho * t) / s);
    // Mass outside +-8.5 sigma is below 1e-17; clamp the window.
    adaptive_simpson(&integrand, -8.5, h.min(8.5), 5e-13, 32).clamp(0.0, 1.0)
}

// Gauss-Legendre half-range abscissas/weights used by the Drezner/Genz
// bivariate quadrature: 6, 12, and 20 point rules.
const GL6_W: [f64; 3] = [0.1713244923791705, 0.3607615730481384, 0.4679139345726904];
const GL6_X: [f64; 3] = [
    -0.9324695142031522,
    -0.6612093864662647,
    -0.2386191860831970,
];
const GL12_W: [f64; 6] = [
    0.04717533638651177,
    0.1069393259953183,
    0.1600783285433464,
    0.2031674267230659,
    0.2334925365383547,
    0.2491470458134029,
];
const GL12_X: [f64; 6] = [
    -0.9815606342467191,
    -0.9041172563704750,
    -0.7699026741943050,
    -0.5873179542866171,
    -0.3678314989981802,
    -0.1252334085114692,
];
const GL20_W: [f64; 10] = [
    0.01761400713915212,
    0.04060142980038694,
    0.06267204833410906,
    0.08327674157670475,
    0.1019301198172404,
    0.1181945319615184,
    0.1316886384491766,
    0.1420961093183821,
    0.1491729864726037,
    0.1527533871307259,
];
const GL20_X: [f64; 10] = [
    -0.9931285991850949,
    -0.9639719272779138,
    -0.9122344282513259,
    -0.8391169718222188,
    -0.7463319064601508,
    -0.6360536807265150,
    -0.5108670019508271,
    -0.3737060887154196,
    -0.2277858511416451,
    -0.1132449848570661,
];

/// Upper-orthant probability `P(X > dh, Y > dk)`, Drezner/Genz quadrature.
fn bvnu(dh: f64, dk: f64, r: f64) -> f64 {
    let (w, x): (&[f64], &[f64]) = if r.abs() < 0.3 {
        (&GL6_W, &GL6_X)
    } else if r.abs() < 0.75 {
        (&GL12_W, &GL12_X)
    } else {
        (&GL20_W, &GL20_X)
    };

    let h = dh;
    let mut k = dk;
    let mut hk = h * k;
    let mut bvn = 0.0;

    if r.abs() < 0.925 {
        if r.abs() > 0.0 {
            let hs = (h * h + k * k) / 2.0;
            let asr = r.asin();
            for i in 0..w.len() {
                for is in [-1.0, 1.0] {
                    let sn = (asr * (is * x[i] + 1.0) / 2.0).sin();
                    bvn += w[i] * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
                }
            }
            bvn = bvn * asr / (2.0 * TWO_PI);
        }
        bvn + norm_cdf(-h) * norm_cdf(-k)
    } else {
        if r < 0.0 {
            k = -k;
            hk = -hk;
        }
        if r.abs() < 1.0 {
            let a_sq = (1.0 - r) * (1.0 + r);
            let mut a = a_sq.sqrt();
            let b_sq = (h - k) * (h - k);
            let c = (4.0 - hk) / 8.0;
            let d = (12.0 - hk) / 16.0;
            let asr = -(b_sq / a_sq + hk) / 2.0;
            if asr > -100.0 {
                bvn = a
                    * asr.exp()
                    * (1.0 - c * (b_sq - a_sq) * (1.0 - d * b_sq / 5.0) / 3.0
                        + c * d * a_sq * a_sq / 5.0);
            }
            if -hk < 100.0 {
                let b = b_sq.sqrt();
                bvn -= (-hk / 2.0).exp()
                    * TWO_PI.sqrt()
                    * norm_cdf(-b / a)
                    * b
                    * (1.0 - c * b_sq * (1.0 - d * b_sq / 5.0) / 3.0);
            }
            a /= 2.0;
            for i in 0..w.len() {
                for is in [-1.0, 1.0] {
                    let xs = (a * (is * x[i] + 1.0)) * (a * (is * x[i] + 1.0));
                    let rs = (1.0 - xs).sqrt();
                    let asr = -(b_sq / xs + hk) / 2.0;
                    if asr > -100.0 {
                        let sp = 1.0 + c * xs * (1.0 + d * xs);
                        let ep = (-hk * (1.0 - rs) / (2.0 * (1.0 + rs))).exp() / rs;
                        bvn += a * w[i] * asr.exp() * (ep - sp);
                    }
                }
            }
            bvn = -bvn / TWO_PI;
        }
        if r > 0.0 {
            bvn + norm_cdf(-h.max(k))
        } else {
            bvn = -bvn;
            if k > h {
                bvn += norm_cdf(k) - norm_cdf(h);
            }
            bvn
        }
    }
    .clamp(0.0, 1.0)
}

/// `P(Y <= upper)` for `Y ~ N(0, cov)`; `cov` must be SPD.
pub fn mvn_cdf(upper: &DVector<f64>, cov: &DMatrix<f64>) -> Result<f64> {
    let d = upper.len();
    linalg::check_symmetric(cov, d, "mvn cdf covariance")?;
    for i in 0..d {
        if cov[(i, i)] <= 0.0 {
            return Err(Error::validation(
                "mvn cdf covariance has a non-positive diagonal entry",
            ));
        }
    }
    Ok(mvn_cdf_inner(
        &upper.iter().copied().collect::<Vec<_>>(),
        cov,
    ))
}

fn mvn_cdf_inner(upper: &[f64], cov: &DMatrix<f64>) -> f64 {
    match upper.len() {
        0 => 1.0,
        1 => norm_cdf(upper[0] / cov[(0, 0)].sqrt()),
        2 => {
            let s1 = cov[(0, 0)].sqrt();
            let s2 = cov[(1, 1)].sqrt();
            let rho = (cov[(0, 1)] / (s1 * s2)).clamp(-1.0, 1.0);
            bvn_cdf(upper[0] / s1, upper[1] / s2, rho)
        }
        d => {
            // Condition on the first coordinate and integrate it out.
            let s1 = cov[(0, 0)].sqrt();
            let b1 = upper[0] / s1;
            if b1 < -8.5 {
                return 0.0;
            }
            let slope: Vec<f64> = (1..d).map(|i| cov[(i, 0)] / s1).collect();
            let mut cond = DMatrix::zeros(d - 1, d - 1);
            for i in 1..d {
                for j in 1..d {
                    cond[(i - 1, j - 1)] = cov[(i, j)] - cov[(i, 0)] * cov[(j, 0)] / cov[(0, 0)];
                }
            }
            linalg::symmetrize(&mut cond);
            // Tiny ridge keeps the recursion alive when conditioning makes
            // the remainder numerically singular.
            for i in 0..(d - 1) {
                cond[(i, i)] = cond[(i, i)].max(1e-14);
            }
            let integrand = |t: f64| {
                let rest: Vec<f64> = (0..(d - 1)).map(|i| upper[i + 1] - slope[i] * t).collect();
                norm_pdf(t) * mvn_cdf_inner(&rest, &cond)
            };
            // Mass outside +-8.5 sigma is below 1e-17; clamp the window.
            adaptive_simpson(&integrand, -8.5, b1.min(8.5), 1e-9, 24)
        }
    }
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let c = 0.5 * (a + b);
    let fa = f(a);
    let fb = f(b);
    let fc = f(c);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    simpson_step(f, a, b, fa, fb, fc, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fc: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let c = 0.5 * (a + b);
    let d = 0.5 * (a + c);
    let e = 0.5 * (c + b);
    let fd = f(d);
    let fe = f(e);
    let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        left + right + (left + right - whole) / 15.0
    } else {
        simpson_step(f, a, c, fa, fc, fd, left, tol / 2.0, depth - 1)
            + simpson_step(f, c, b, fc, fb, fe, right, tol / 2.0, depth - 1)
    }
}
