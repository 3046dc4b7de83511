//! Elementary samplers and densities.
//!
//! Mixture-weight arithmetic is done in log space end to end: with block-2
//! concentrations as small as 1e-5, Dirichlet coordinates routinely fall
//! below the double-precision underflow threshold, so samplers return log
//! values and densities accept them.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Shape/rate parameterization of the Gamma distribution (mean = shape/rate).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GammaParams {
    pub shape: f64,
    pub rate: f64,
}

impl GammaParams {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) || !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::invalid(format!(
                "gamma requires shape > 0 and rate > 0, got shape={shape}, rate={rate}"
            )));
        }
        Ok(Self { shape, rate })
    }
}

/// Log-sum-exp of a slice, tolerating -inf entries.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// Standard normal draw.
#[inline]
pub fn sample_std_normal(rng: &mut RngStream) -> f64 {
    StandardNormal.sample(rng)
}

/// Normal draw with the given mean and standard deviation.
#[inline]
pub fn sample_normal(rng: &mut RngStream, mean: f64, sd: f64) -> f64 {
    mean + sd * sample_std_normal(rng)
}

/// Log-density of N(mean, sd^2) at x.
#[inline]
pub fn log_normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

/// Exponential draw with the given rate.
#[inline]
pub fn sample_exponential(rng: &mut RngStream, rate: f64) -> f64 {
    -rng.uniform_pos().ln() / rate
}

/// Uniform draw on (lo, hi).
#[inline]
pub fn sample_uniform(rng: &mut RngStream, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.uniform()
}

/// Gamma draw on the linear scale. Underflows to 0.0 for tiny shapes; use
/// [`sample_log_gamma`] when the log value is what matters.
pub fn sample_gamma(rng: &mut RngStream, p: GammaParams) -> f64 {
    sample_log_gamma(rng, p).exp()
}

/// Gamma draw returned as its natural log.
///
/// Shape >= 1 uses Marsaglia-Tsang squeeze rejection. Shape < 1 uses the
/// boosting identity G_a = G_{a+1} * V^(1/a), V ~ Uniform(0,1), evaluated in
/// log space so the result stays finite even when exp() of it underflows.
pub fn sample_log_gamma(rng: &mut RngStream, p: GammaParams) -> f64 {
    let log_scale = -p.rate.ln();
    if p.shape < 1.0 {
        let log_boost = marsaglia_tsang_ln(rng, p.shape + 1.0);
        let log_v = rng.uniform_pos().ln();
        log_boost + log_v / p.shape + log_scale
    } else {
        marsaglia_tsang_ln(rng, p.shape) + log_scale
    }
}

// ln of a Gamma(shape, 1) draw for shape >= 1.
fn marsaglia_tsang_ln(rng: &mut RngStream, shape: f64) -> f64 {
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = sample_std_normal(rng);
        let t = 1.0 + c * x;
        if t <= 0.0 {
            continue;
        }
        let v = t * t * t;
        let u = rng.uniform_pos();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d.ln() + v.ln();
        }
    }
}

/// Inverse-gamma draw parameterized so the mean is `b / (a - 1)` for a > 1.
pub fn sample_inverse_gamma(rng: &mut RngStream, a: f64, b: f64) -> f64 {
    // X ~ InvGamma(a, b)  <=>  1/X ~ Gamma(shape a, rate b)
    (-sample_log_gamma(rng, GammaParams { shape: a, rate: b })).exp()
}

/// Dirichlet draw returned as log-weights normalized so logsumexp = 0.
pub fn sample_dirichlet_log(rng: &mut RngStream, shapes: &[f64]) -> Result<Vec<f64>> {
    if shapes.len() < 2 {
        return Err(Error::domain(
            "dirichlet requires at least two shape parameters",
        ));
    }
    if shapes.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
        return Err(Error::domain("dirichlet shapes must all be positive"));
    }
    let mut log_g: Vec<f64> = shapes
        .iter()
        .map(|&a| sample_log_gamma(rng, GammaParams { shape: a, rate: 1.0 }))
        .collect();
    let lse = logsumexp(&log_g);
    for v in log_g.iter_mut() {
        *v -= lse;
    }
    Ok(log_g)
}

/// Categorical draw from unnormalized log-probabilities.
///
/// Normalized inverse-CDF rule: one uniform per draw, which keeps the uniform
/// consumption count fixed (needed for common-random-number reuse).
pub fn sample_categorical_log(rng: &mut RngStream, log_probs: &[f64]) -> Result<usize> {
    let lse = logsumexp(log_probs);
    if !lse.is_finite() {
        return Err(Error::domain(
            "categorical requires at least one finite log-probability",
        ));
    }
    let u = rng.uniform();
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (k, &lp) in log_probs.iter().enumerate() {
        let p = (lp - lse).exp();
        if p > 0.0 {
            last_positive = k;
        }
        cum += p;
        if u < cum {
            return Ok(k);
        }
    }
    // rounding left cum slightly below 1; fall back to the last live index
    Ok(last_positive)
}

/// Multivariate normal draw given the precision matrix (inverse covariance).
///
/// `precision` must be symmetric positive definite; the draw solves
/// L^T x = z against its Cholesky factor so the covariance is precision^-1.
pub fn sample_mvn_prec(
    rng: &mut RngStream,
    mean: &nalgebra::DVector<f64>,
    precision: &nalgebra::DMatrix<f64>,
) -> Result<nalgebra::DVector<f64>> {
    let chol = nalgebra::Cholesky::new(precision.clone())
        .ok_or_else(|| Error::numerical("precision matrix is not positive definite"))?;
    Ok(mean + mvn_prec_noise(rng, &chol))
}

/// Zero-mean noise with covariance `precision^-1` given its Cholesky factor.
pub fn mvn_prec_noise(
    rng: &mut RngStream,
    chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>,
) -> nalgebra::DVector<f64> {
    let p = chol.l().nrows();
    let z = nalgebra::DVector::from_fn(p, |_, _| sample_std_normal(rng));
    chol.l()
        .transpose()
        .solve_upper_triangular(&z)
        .expect("cholesky factor has positive diagonal")
}
