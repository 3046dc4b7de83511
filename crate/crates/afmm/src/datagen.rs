//! Synthetic data generators: the two univariate simulation designs and a
//! functional-curve generator built on coefficient templates.

use crate::asym::{self, AsymDirichletParams};
use crate::dist::{sample_normal, sample_uniform};
use crate::error::{Error, Result};
use crate::metrics::Partition;
use crate::rng::RngStream;

/// Equal-weight, well-separated Gaussian design: K+ components with means
/// 3(k-1) and common standard deviation 0.5.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct DataType1Spec {
    pub kplus_true: usize,
    pub n: usize,
    pub sigma: f64,
}

impl DataType1Spec {
    pub fn new(kplus_true: usize, n: usize) -> Self {
        Self {
            kplus_true,
            n,
            sigma: 0.5,
        }
    }
}

/// Generative design matching the fitted model: weights from an asymmetric
/// Dirichlet, means from N(mu0, sigma0_sq), standard deviations uniform on
/// (0, A). Cluster sizes can be very uneven.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct DataType2Spec {
    pub u: usize,
    pub n: usize,
    pub k: usize,
    pub alpha1: f64,
    pub alpha2: f64,
    pub a: f64,
    pub mu0: f64,
    pub sigma0_sq: f64,
}

impl DataType2Spec {
    pub fn new(u: usize, n: usize) -> Self {
        Self {
            u,
            n,
            k: 25,
            alpha1: u as f64,
            alpha2: 1e-3,
            a: 1.0,
            mu0: 0.0,
            sigma0_sq: 3.0,
        }
    }
}

/// Draw from the Type 1 design; returns observations and true labels.
pub fn gen_type1(spec: &DataType1Spec, rng: &mut RngStream) -> Result<(Vec<f64>, Partition)> {
    if spec.kplus_true < 1 || spec.n < 1 || !(spec.sigma > 0.0) {
        return Err(Error::invalid("type-1 spec requires kplus >= 1, n >= 1, sigma > 0".to_string()));
    }
    let mut y = Vec::with_capacity(spec.n);
    let mut z = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let zi = ((rng.uniform() * spec.kplus_true as f64) as usize).min(spec.kplus_true - 1);
        let mu = 3.0 * zi as f64;
        y.push(sample_normal(rng, mu, spec.sigma));
        z.push(zi);
    }
    Ok((y, Partition::new(&z)))
}

/// Draw from the Type 2 design; truth labels are the occupied components.
pub fn gen_type2(spec: &DataType2Spec, rng: &mut RngStream) -> Result<(Vec<f64>, Partition)> {
    if spec.n < 1 {
        return Err(Error::invalid("type-2 spec requires n >= 1".to_string()));
    }
    let params = AsymDirichletParams::new(spec.k, spec.u, spec.alpha1, spec.alpha2)?;
    let log_w = asym::sample(rng, &params)?;
    let mut cum = Vec::with_capacity(spec.k);
    let mut acc = 0.0;
    for &lw in &log_w {
        acc += lw.exp();
        cum.push(acc);
    }
    let mu: Vec<f64> = (0..spec.k)
        .map(|_| sample_normal(rng, spec.mu0, spec.sigma0_sq.sqrt()))
        .collect();
    let sd: Vec<f64> = (0..spec.k)
        .map(|_| sample_uniform(rng, 0.0, spec.a))
        .collect();
    let mut y = Vec::with_capacity(spec.n);
    let mut z = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let target = rng.uniform() * acc;
        let zi = cum.partition_point(|&c| c <= target).min(spec.k - 1);
        y.push(sample_normal(rng, mu[zi], sd[zi]));
        z.push(zi);
    }
    Ok((y, Partition::new(&z)))
}

/// A generated bundle of curves observed on a common grid.
#[derive(Debug, Clone)]
pub struct FunctionalData {
    /// Time grid in [0, 1], shared by all subjects.
    pub grid: Vec<f64>,
    /// curves[i][t] = observed value of subject i at grid point t.
    pub curves: Vec<Vec<f64>>,
    pub truth: Partition,
}

/// Generate n subjects from coefficient templates: subject i picks a template
/// uniformly, perturbs its coefficients by N(0, kappa^2 I), and is observed
/// on the grid through the given basis matrix with N(0, sigma^2) noise.
pub fn gen_functional(
    templates: &[Vec<f64>],
    n: usize,
    kappa: f64,
    sigma: f64,
    grid: &[f64],
    basis: &nalgebra::DMatrix<f64>,
    rng: &mut RngStream,
) -> Result<FunctionalData> {
    if templates.is_empty() || n < 1 {
        return Err(Error::invalid("need at least one template and one subject".to_string()));
    }
    let p = templates[0].len();
    if templates.iter().any(|t| t.len() != p) {
        return Err(Error::invalid("templates must share one coefficient length".to_string()));
    }
    if basis.ncols() != p || basis.nrows() != grid.len() {
        return Err(Error::invalid(format!(
            "basis is {}x{}, expected {}x{p}",
            basis.nrows(),
            basis.ncols(),
            grid.len()
        )));
    }
    let mut curves = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    for _ in 0..n {
        let t = ((rng.uniform() * templates.len() as f64) as usize).min(templates.len() - 1);
        z.push(t);
        let beta: Vec<f64> = templates[t]
            .iter()
            .map(|&c| sample_normal(rng, c, kappa))
            .collect();
        let beta_v = nalgebra::DVector::from_column_slice(&beta);
        let mean = basis * beta_v;
        let curve: Vec<f64> = mean
            .iter()
            .map(|&m| if sigma > 0.0 { sample_normal(rng, m, sigma) } else { m })
            .collect();
        curves.push(curve);
    }
    Ok(FunctionalData {
        grid: grid.to_vec(),
        curves,
        truth: Partition::new(&z),
    })
}

/// Deterministic, well-separated coefficient templates for tests and demos:
/// scaled and shifted cosine profiles of distinct frequency and phase.
pub fn default_templates(count: usize, p: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|j| {
            let amp = 1.0 + 0.5 * j as f64;
            let freq = 1.0 + j as f64 * 0.75;
            let phase = j as f64 * std::f64::consts::FRAC_PI_3;
            let level = 1.5 * j as f64 - 2.0;
            (0..p)
                .map(|l| {
                    let x = l as f64 / (p - 1) as f64;
                    level + amp * (2.0 * std::f64::consts::PI * freq * x + phase).cos()
                })
                .collect()
        })
        .collect()
}
