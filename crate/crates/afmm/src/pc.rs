//! Penalized-complexity prior on the block-1 concentration alpha1, given a
//! fixed alpha2.
//!
//! The base mixture favors exactly U occupied components; in practice it is
//! the asymmetric Dirichlet with alpha01 = U and alpha02 = 1e-5. Deviation
//! from the base is measured by the Kullback-Leibler divergence between the
//! two Dirichlet laws, mapped to the distance d = sqrt(2 KLD). An exponential
//! law with rate lambda on that distance, pushed back through d, yields the
//! prior density on alpha1 over (0, U]. The rate is calibrated by simulation
//! so that Pr(K+ < U) matches a user-stated tail probability.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::dist::{sample_dirichlet_log, sample_exponential};
use crate::error::{Error, Result};
use crate::numeric::{adaptive_simpson, bisect, MonotoneCubic};
use crate::rng::RngStream;
use crate::special::{digamma_unchecked, log_gamma_unchecked};

pub const DEFAULT_ALPHA2: f64 = 1e-5;
pub const DEFAULT_ALPHA02: f64 = 1e-5;
pub const DEFAULT_ALPHA1_FLOOR: f64 = 1e-8;
pub const GRID_SIZE: usize = 2048;

/// KLD between two asymmetric Dirichlet laws sharing the same (K, U) block
/// structure: blocks (alpha1, alpha2) against base blocks (alpha01, alpha02).
pub fn asym_dirichlet_kld(
    alpha1: f64,
    alpha2: f64,
    alpha01: f64,
    alpha02: f64,
    u: usize,
    k: usize,
) -> Result<f64> {
    for (name, v) in [
        ("alpha1", alpha1),
        ("alpha2", alpha2),
        ("alpha01", alpha01),
        ("alpha02", alpha02),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::domain(format!("{name} must be positive, got {v}")));
        }
    }
    if u > k {
        return Err(Error::domain(format!("U={u} exceeds K={k}")));
    }
    let uf = u as f64;
    let vf = (k - u) as f64;
    let total = alpha1 * uf + alpha2 * vf;
    let total0 = alpha01 * uf + alpha02 * vf;
    let psi_total = digamma_unchecked(total);
    // grouped as pairwise differences so the value is exactly zero at the base
    let mut value = (log_gamma_unchecked(total) - log_gamma_unchecked(total0))
        + uf * (log_gamma_unchecked(alpha01) - log_gamma_unchecked(alpha1))
        + vf * (log_gamma_unchecked(alpha02) - log_gamma_unchecked(alpha2));
    value += uf * (alpha1 - alpha01) * (digamma_unchecked(alpha1) - psi_total);
    value += vf * (alpha2 - alpha02) * (digamma_unchecked(alpha2) - psi_total);
    if value < 0.0 {
        debug_assert!(value > -1e-10, "KLD round-off beyond tolerance: {value}");
        value = 0.0;
    }
    Ok(value)
}

/// Distance geometry of the conditional prior: everything that depends on
/// (U, K, alpha2) but not on the decay rate lambda. Calibration re-uses one
/// map across all rate evaluations.
#[derive(Debug)]
pub struct DistanceMap {
    pub u: usize,
    pub k: usize,
    pub alpha2_fixed: f64,
    pub alpha01: f64,
    pub alpha02: f64,
    pub alpha1_floor: f64,
    grid_alpha: Vec<f64>,
    grid_dist: Vec<f64>,
    boundary_clamps: AtomicU64,
}

impl Clone for DistanceMap {
    fn clone(&self) -> Self {
        Self {
            u: self.u,
            k: self.k,
            alpha2_fixed: self.alpha2_fixed,
            alpha01: self.alpha01,
            alpha02: self.alpha02,
            alpha1_floor: self.alpha1_floor,
            grid_alpha: self.grid_alpha.clone(),
            grid_dist: self.grid_dist.clone(),
            boundary_clamps: AtomicU64::new(self.boundary_clamps.load(Ordering::Relaxed)),
        }
    }
}

impl DistanceMap {
    pub fn new(u: usize, k: usize, alpha2_fixed: f64) -> Result<Self> {
        if u < 1 || u >= k {
            return Err(Error::invalid(format!(
                "PC prior requires 1 <= U < K, got U={u}, K={k}"
            )));
        }
        if !(alpha2_fixed > 0.0 && alpha2_fixed.is_finite()) {
            return Err(Error::invalid("alpha2_fixed must be positive".to_string()));
        }
        let map = Self {
            u,
            k,
            alpha2_fixed,
            alpha01: u as f64,
            alpha02: DEFAULT_ALPHA02,
            alpha1_floor: DEFAULT_ALPHA1_FLOOR,
            grid_alpha: Vec::new(),
            grid_dist: Vec::new(),
            boundary_clamps: AtomicU64::new(0),
        };
        map.with_grid()
    }

    fn with_grid(mut self) -> Result<Self> {
        let lo = self.alpha1_floor.ln();
        let hi = (self.u as f64).ln();
        let mut alphas = Vec::with_capacity(GRID_SIZE);
        let mut dists = Vec::with_capacity(GRID_SIZE);
        for i in 0..GRID_SIZE {
            let s = lo + (hi - lo) * i as f64 / (GRID_SIZE - 1) as f64;
            let a = if i == GRID_SIZE - 1 { self.u as f64 } else { s.exp() };
            alphas.push(a);
            dists.push(self.distance_unclamped(a)?);
        }
        for w in dists.windows(2) {
            if w[1] >= w[0] {
                return Err(Error::numerical(format!(
                    "distance grid is not strictly decreasing in alpha1 \
                     (U={}, K={}, alpha2={}); inverse sampling would be ill-defined",
                    self.u, self.k, self.alpha2_fixed
                )));
            }
        }
        self.grid_alpha = alphas;
        self.grid_dist = dists;
        Ok(self)
    }

    /// KLD against the practical base model, with alpha1 clamped to the
    /// evaluation floor (clamps are counted).
    pub fn kld(&self, alpha1: f64, alpha2: f64) -> Result<f64> {
        let a1 = self.clamp_alpha1(alpha1)?;
        asym_dirichlet_kld(a1, alpha2, self.alpha01, self.alpha02, self.u, self.k)
    }

    /// d(alpha1) = sqrt(2 KLD(alpha1, alpha2_fixed)).
    pub fn distance(&self, alpha1: f64) -> Result<f64> {
        let a1 = self.clamp_alpha1(alpha1)?;
        self.distance_unclamped(a1)
    }

    fn distance_unclamped(&self, alpha1: f64) -> Result<f64> {
        Ok((2.0
            * asym_dirichlet_kld(
                alpha1,
                self.alpha2_fixed,
                self.alpha01,
                self.alpha02,
                self.u,
                self.k,
            )?)
        .sqrt())
    }

    /// Central finite difference of the distance; one-sided at the domain
    /// endpoints. Negative everywhere (d decreases in alpha1).
    pub fn distance_derivative(&self, alpha1: f64) -> Result<f64> {
        let a = self.clamp_alpha1(alpha1)?;
        let ub = self.u as f64;
        let h = (f64::EPSILON.cbrt() * a).max(1e-9);
        let lo = (a - h).max(self.alpha1_floor);
        let hi = (a + h).min(ub);
        Ok((self.distance_unclamped(hi)? - self.distance_unclamped(lo)?) / (hi - lo))
    }

    /// Invert the distance: the alpha1 in [floor, U] with d(alpha1) = e.
    /// Distances beyond d(floor) clamp to the floor (counted).
    pub fn invert_distance(&self, e: f64) -> f64 {
        debug_assert!(e >= 0.0);
        let d_floor = self.grid_dist[0];
        if e >= d_floor {
            self.boundary_clamps.fetch_add(1, Ordering::Relaxed);
            return self.alpha1_floor;
        }
        if e <= 0.0 {
            return self.u as f64;
        }
        // grid_dist is strictly decreasing: locate the bracketing cell
        let idx = match self
            .grid_dist
            .binary_search_by(|d| e.partial_cmp(d).expect("finite distances"))
        {
            Ok(i) => return self.grid_alpha[i],
            Err(i) => i,
        };
        let (ilo, ihi) = (idx - 1, idx);
        let f = |a: f64| self.distance_unclamped(a).expect("domain checked") - e;
        bisect(
            &f,
            self.grid_alpha[ilo],
            self.grid_alpha[ihi],
            f64::EPSILON * self.grid_alpha[ihi],
            1e-8,
        )
    }

    pub fn d_floor(&self) -> f64 {
        self.grid_dist[0]
    }

    pub fn boundary_clamps(&self) -> u64 {
        self.boundary_clamps.load(Ordering::Relaxed)
    }

    fn clamp_alpha1(&self, alpha1: f64) -> Result<f64> {
        if !(alpha1 > 0.0 && alpha1.is_finite()) {
            return Err(Error::domain(format!(
                "alpha1 must be positive and finite, got {alpha1}"
            )));
        }
        if alpha1 > self.u as f64 {
            return Err(Error::domain(format!(
                "alpha1 = {alpha1} outside the PC prior domain (0, U={}]",
                self.u
            )));
        }
        if alpha1 < self.alpha1_floor {
            self.boundary_clamps.fetch_add(1, Ordering::Relaxed);
            Ok(self.alpha1_floor)
        } else {
            Ok(alpha1)
        }
    }

    pub fn grid(&self) -> (&[f64], &[f64]) {
        (&self.grid_alpha, &self.grid_dist)
    }
}

/// The PC prior on alpha1 for a fixed decay rate lambda.
///
/// Normalization is numerical: the unnormalized density integrates to
/// 1 - exp(-lambda d(floor)) over (floor, U], which is 1 to machine precision
/// for any practically relevant lambda. A flag records specs whose
/// normalization strays by more than 1e-3 from 1.
#[derive(Debug, Clone)]
pub struct PcPriorSpec {
    map: DistanceMap,
    lambda: f64,
    ln_z: f64,
    // log unnormalized density tabulated over ln(alpha1) for the MCMC hot path
    log_dens_spline: MonotoneCubic,
    normalization_warning: bool,
}

impl PcPriorSpec {
    pub fn new(u: usize, k: usize, lambda: f64) -> Result<Self> {
        Self::with_alpha2(u, k, DEFAULT_ALPHA2, lambda)
    }

    pub fn with_alpha2(u: usize, k: usize, alpha2_fixed: f64, lambda: f64) -> Result<Self> {
        Self::from_map(DistanceMap::new(u, k, alpha2_fixed)?, lambda)
    }

    pub fn from_map(map: DistanceMap, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be positive, got {lambda}")));
        }
        let log_unnorm = |a: f64| -> f64 {
            let d = map.distance_unclamped(a).expect("grid domain");
            let dp = map.distance_derivative(a).expect("grid domain");
            lambda.ln() - lambda * d + dp.abs().ln()
        };
        // integrate in s = ln(alpha1): the near-floor spike flattens out there
        let lo = map.alpha1_floor.ln();
        let hi = (map.u as f64).ln();
        let f = |s: f64| {
            // exp(ln U) can round just past U; stay inside the domain
            let a = s.exp().clamp(map.alpha1_floor, map.u as f64);
            log_unnorm(a).exp() * a
        };
        let z = adaptive_simpson(&f, lo, hi, 1e-10);
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::numerical(format!(
                "PC prior normalization failed: Z = {z} for lambda = {lambda}"
            )));
        }
        let normalization_warning = (z - 1.0).abs() > 1e-3;
        let (alphas, _) = map.grid();
        let xs: Vec<f64> = alphas.iter().map(|a| a.ln()).collect();
        let ys: Vec<f64> = alphas.iter().map(|&a| log_unnorm(a)).collect();
        let spline = MonotoneCubic::new(xs, ys);
        Ok(Self {
            map,
            lambda,
            ln_z: z.ln(),
            log_dens_spline: spline,
            normalization_warning,
        })
    }

    pub fn u(&self) -> usize {
        self.map.u
    }

    pub fn k(&self) -> usize {
        self.map.k
    }

    pub fn alpha2_fixed(&self) -> f64 {
        self.map.alpha2_fixed
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha1_floor(&self) -> f64 {
        self.map.alpha1_floor
    }

    /// The numerically computed normalization constant Z.
    pub fn normalization(&self) -> f64 {
        self.ln_z.exp()
    }

    pub fn normalization_warning(&self) -> bool {
        self.normalization_warning
    }

    pub fn map(&self) -> &DistanceMap {
        &self.map
    }

    pub fn kld(&self, alpha1: f64, alpha2: f64) -> Result<f64> {
        self.map.kld(alpha1, alpha2)
    }

    pub fn distance(&self, alpha1: f64) -> Result<f64> {
        self.map.distance(alpha1)
    }

    pub fn distance_derivative(&self, alpha1: f64) -> Result<f64> {
        self.map.distance_derivative(alpha1)
    }

    /// Normalized log-density of the PC prior at alpha1 in (0, U].
    pub fn log_pc_density(&self, alpha1: f64) -> Result<f64> {
        let d = self.map.distance(alpha1)?;
        let dp = self.map.distance_derivative(alpha1)?;
        Ok(self.lambda.ln() - self.lambda * d + dp.abs().ln() - self.ln_z)
    }

    /// Spline approximation of the log-density (clamps into the domain); this
    /// is the version MCMC updates evaluate every sweep.
    pub fn log_pc_density_fast(&self, alpha1: f64) -> f64 {
        let a = alpha1.clamp(self.map.alpha1_floor, self.map.u as f64);
        self.log_dens_spline.eval(a.ln()) - self.ln_z
    }

    /// Draw alpha1: an Exp(lambda) distance pushed back through d^{-1}.
    pub fn sample_alpha1(&self, rng: &mut RngStream) -> f64 {
        let e = sample_exponential(rng, self.lambda);
        self.map.invert_distance(e)
    }

    pub fn boundary_clamps(&self) -> u64 {
        self.map.boundary_clamps()
    }
}

/// Inputs for tail-probability calibration of lambda.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct CalibrationConfig {
    pub u: usize,
    pub k: usize,
    pub n: usize,
    pub tp: f64,
    pub alpha2_fixed: f64,
    pub mc_replicates: usize,
    pub tolerance: f64,
}

impl CalibrationConfig {
    pub fn new(u: usize, k: usize, n: usize, tp: f64) -> Self {
        Self {
            u,
            k,
            n,
            tp,
            alpha2_fixed: DEFAULT_ALPHA2,
            mc_replicates: 20_000,
            tolerance: 0.02,
        }
    }
}

/// Outcome of a calibration run.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct CalibrationResult {
    pub lambda_star: f64,
    pub achieved_tail: f64,
    pub mc_replicates: usize,
    pub seed: u64,
    pub stream_id: u64,
    pub bracket: (f64, f64),
    pub iterations: usize,
}

const LAMBDA_MIN: f64 = 1e-6;
const LAMBDA_MAX: f64 = 1e6;

/// Find the decay rate lambda whose induced prior satisfies Pr(K+ < U) = tp,
/// by bracketing (doubling from lambda = 1) and geometric bisection on a
/// common-random-number Monte Carlo estimate of the tail.
///
/// Each replicate owns a fixed substream and a pre-drawn Exp(1) variate, so
/// the map from lambda to the estimated tail is deterministic and, up to a
/// little replicate-flip jitter, nonincreasing.
pub fn calibrate_lambda(cfg: &CalibrationConfig, rng: &RngStream) -> Result<CalibrationResult> {
    if cfg.u < 1 || cfg.u >= cfg.k {
        return Err(Error::invalid(format!(
            "calibration requires 1 <= U < K, got U={}, K={}",
            cfg.u, cfg.k
        )));
    }
    if !(cfg.tp > 0.0 && cfg.tp < 1.0) {
        return Err(Error::invalid(format!("tp must lie in (0,1), got {}", cfg.tp)));
    }
    if cfg.n < 1 || cfg.mc_replicates < 1 {
        return Err(Error::invalid("n and mc_replicates must be at least 1".to_string()));
    }
    let map = DistanceMap::new(cfg.u, cfg.k, cfg.alpha2_fixed)?;

    // common-random-number pool: one Exp(1) draw per replicate
    let mut pool_rng = rng.substream(0);
    let e1: Vec<f64> = (0..cfg.mc_replicates)
        .map(|_| sample_exponential(&mut pool_rng, 1.0))
        .collect();

    let estimate = |lambda: f64| -> f64 {
        let hits: usize = (0..cfg.mc_replicates)
            .into_par_iter()
            .map(|j| {
                let alpha1 = map.invert_distance(e1[j] / lambda);
                let mut rng_j = rng.substream(1 + j as u64);
                let kplus =
                    simulate_kplus_asym(&mut rng_j, cfg.k, cfg.u, alpha1, cfg.alpha2_fixed, cfg.n);
                usize::from(kplus < cfg.u)
            })
            .sum();
        hits as f64 / cfg.mc_replicates as f64
    };

    // bracket the target; the estimate is nonincreasing in lambda
    let mut lo = 1.0;
    let mut hi = 1.0;
    let mut p_lo = estimate(lo);
    let mut p_hi = p_lo;
    let mut iterations = 1usize;
    while p_lo < cfg.tp && lo > LAMBDA_MIN {
        lo /= 2.0;
        p_lo = estimate(lo);
        iterations += 1;
    }
    while p_hi > cfg.tp && hi < LAMBDA_MAX {
        hi *= 2.0;
        p_hi = estimate(hi);
        iterations += 1;
    }
    if p_lo < cfg.tp || p_hi > cfg.tp {
        let tail_at_min = estimate(LAMBDA_MIN);
        let tail_at_max = estimate(LAMBDA_MAX);
        return Err(Error::CalibrationFailure {
            target: cfg.tp,
            lo: tail_at_max.min(tail_at_min),
            hi: tail_at_max.max(tail_at_min),
        });
    }
    let bracket = (lo, hi);

    // geometric bisection, keeping the evaluation closest to tp
    let mut best_lambda = if (p_lo - cfg.tp).abs() < (p_hi - cfg.tp).abs() { lo } else { hi };
    let mut best_err = (if best_lambda == lo { p_lo } else { p_hi } - cfg.tp).abs();
    for _ in 0..60 {
        if hi / lo < 1.0 + 1e-9 {
            break;
        }
        let mid = (0.5 * (lo.ln() + hi.ln())).exp();
        let p_mid = estimate(mid);
        iterations += 1;
        let err = (p_mid - cfg.tp).abs();
        if err < best_err {
            best_err = err;
            best_lambda = mid;
        }
        if err <= 0.25 * cfg.tolerance {
            break;
        }
        if p_mid >= cfg.tp {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let achieved = estimate(best_lambda);
    if (achieved - cfg.tp).abs() > cfg.tolerance {
        return Err(Error::numerical(format!(
            "calibration stalled: best achievable tail {achieved} vs target {}",
            cfg.tp
        )));
    }
    Ok(CalibrationResult {
        lambda_star: best_lambda,
        achieved_tail: achieved,
        mc_replicates: cfg.mc_replicates,
        seed: rng.seed(),
        stream_id: rng.stream_id(),
        bracket,
        iterations,
    })
}

/// One generative replicate: w ~ asymmetric Dirichlet, z_1..z_n ~
/// Categorical(w), K+ = #distinct(z). Weights are exponentiated only to build
/// the inverse-CDF table; components below the underflow threshold have
/// selection probability under 1e-300 and simply never come up.
pub(crate) fn simulate_kplus_asym(
    rng: &mut RngStream,
    k: usize,
    u: usize,
    alpha1: f64,
    alpha2: f64,
    n: usize,
) -> usize {
    let mut shapes = vec![alpha1; u];
    shapes.resize(k, alpha2);
    let log_w = sample_dirichlet_log(rng, &shapes).expect("valid shapes");
    simulate_kplus_from_log_weights(rng, &log_w, n)
}

pub(crate) fn simulate_kplus_from_log_weights(
    rng: &mut RngStream,
    log_w: &[f64],
    n: usize,
) -> usize {
    let k = log_w.len();
    let mut cum = Vec::with_capacity(k);
    let mut acc = 0.0;
    for &lw in log_w {
        acc += lw.exp();
        cum.push(acc);
    }
    let total = acc;
    let mut seen = vec![false; k];
    for _ in 0..n {
        let target = rng.uniform() * total;
        let idx = cum.partition_point(|&c| c <= target).min(k - 1);
        seen[idx] = true;
    }
    seen.iter().filter(|&&s| s).count()
}
