//! Gibbs sampler for the univariate Gaussian mixture with an asymmetric
//! Dirichlet weight prior: allocations, weights, component means and
//! variances by full conditionals, alpha1 by random-walk Metropolis-Hastings
//! (PC or Gamma prior), plus a block-swap move that helps the asymmetric
//! blocks mix.

use crate::dist::{
    sample_categorical_log, sample_dirichlet_log, sample_inverse_gamma,
    sample_normal,
};
use crate::error::{Error, Result};
use crate::pc::PcPriorSpec;
use crate::rng::RngStream;
use crate::special::log_gamma_unchecked;
use crate::summary::{AcceptanceStats, PosteriorSummary, SummaryAccumulator, WarningCounters};

pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Prior on the weight concentration(s).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum WeightPrior {
    /// alpha1 ~ PC(U, tp) with alpha2 fixed; requires a `PcPriorSpec`.
    AsymPc,
    /// alpha1 fixed at the given value, alpha2 fixed.
    AsymFixed { alpha1: f64 },
    /// alpha1 ~ Gamma(shape, rate) with alpha2 fixed.
    AsymGamma { shape: f64, rate: f64 },
    /// Symmetric sparse mixture: one concentration shared by all K
    /// components, alpha ~ Gamma(shape, rate). U plays no role in the prior.
    SymGamma { shape: f64, rate: f64 },
}

impl WeightPrior {
    /// Diffuse Gamma prior on alpha1 for a given soft bound U:
    /// shape 10, rate (10 U)^-1.
    pub fn asym_gamma_default(u: usize) -> Self {
        WeightPrior::AsymGamma {
            shape: 10.0,
            rate: 1.0 / (10.0 * u as f64),
        }
    }

    /// The sparse-mixture Gamma prior: shape 10, rate 10 K (mean 1/K).
    pub fn sym_gamma_default(k: usize) -> Self {
        WeightPrior::SymGamma {
            shape: 10.0,
            rate: 10.0 * k as f64,
        }
    }
}

/// Configuration of the univariate Gaussian mixture.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct UnivariateModelConfig {
    pub k: usize,
    pub u: usize,
    pub weight_prior: WeightPrior,
    /// Prior mean of component means; `None` means "use mean(y)".
    pub mu0: Option<f64>,
    pub sigma0_sq: f64,
    pub a0: f64,
    pub b0: f64,
    pub alpha2: f64,
    /// Initial alpha1 proposal scale (adapted during burn-in).
    pub mh_step: f64,
    pub block_swap: bool,
}

impl UnivariateModelConfig {
    pub fn new(u: usize, k: usize, weight_prior: WeightPrior) -> Self {
        Self {
            k,
            u,
            weight_prior,
            mu0: None,
            sigma0_sq: 100.0,
            a0: 3.0,
            b0: 2.0,
            alpha2: 1e-5,
            mh_step: 1.0,
            block_swap: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::invalid(format!("K must be at least 2, got {}", self.k)));
        }
        if self.u > self.k {
            return Err(Error::invalid(format!(
                "U must not exceed K, got U={}, K={}",
                self.u, self.k
            )));
        }
        if self.a0 <= 1.0 {
            return Err(Error::invalid(
                "a0 must exceed 1 so the prior variance mean is finite".to_string(),
            ));
        }
        if !(self.sigma0_sq > 0.0 && self.b0 > 0.0 && self.alpha2 > 0.0 && self.mh_step > 0.0) {
            return Err(Error::invalid("scale hyperparameters must be positive".to_string()));
        }
        match self.weight_prior {
            WeightPrior::AsymFixed { alpha1 } if !(alpha1 > 0.0) => {
                Err(Error::invalid("fixed alpha1 must be positive".to_string()))
            }
            WeightPrior::AsymGamma { shape, rate } | WeightPrior::SymGamma { shape, rate }
                if !(shape > 0.0 && rate > 0.0) =>
            {
                Err(Error::invalid("gamma prior parameters must be positive".to_string()))
            }
            _ => Ok(()),
        }
    }

    /// Number of leading components carrying the alpha1 concentration. The
    /// symmetric sparse mixture treats every component as block 1.
    pub fn block1_size(&self) -> usize {
        match self.weight_prior {
            WeightPrior::SymGamma { .. } => self.k,
            _ => self.u,
        }
    }
}

/// Latent state of the chain.
#[derive(Debug, Clone)]
pub struct UnivariateChainState {
    pub z: Vec<usize>,
    pub log_w: Vec<f64>,
    pub mu: Vec<f64>,
    pub sigma_sq: Vec<f64>,
    pub alpha1: f64,
}

impl UnivariateChainState {
    /// Deterministic initialization: quantile binning of y into min(U, K)
    /// groups, component means at the bin means, variances at the prior mean,
    /// alpha1 mid-domain, weights at their prior expectations.
    pub fn init(y: &[f64], config: &UnivariateModelConfig) -> Self {
        let n = y.len();
        let k = config.k;
        let bins = config.u.clamp(1, k).min(n.max(1));
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| y[a].partial_cmp(&y[b]).expect("finite data"));
        let mut z = vec![0usize; n];
        for (rank, &idx) in order.iter().enumerate() {
            z[idx] = (rank * bins / n.max(1)).min(bins - 1);
        }
        let mu0 = config.mu0.unwrap_or_else(|| y.iter().sum::<f64>() / n.max(1) as f64);
        let mut mu = vec![mu0; k];
        let mut counts = vec![0usize; k];
        let mut sums = vec![0.0; k];
        for (i, &zi) in z.iter().enumerate() {
            counts[zi] += 1;
            sums[zi] += y[i];
        }
        for j in 0..bins {
            if counts[j] > 0 {
                mu[j] = sums[j] / counts[j] as f64;
            }
        }
        let sigma_sq = vec![config.b0 / (config.a0 - 1.0); k];
        let alpha1 = match config.weight_prior {
            WeightPrior::AsymPc => config.u.max(1) as f64 / 2.0,
            WeightPrior::AsymFixed { alpha1 } => alpha1,
            WeightPrior::AsymGamma { shape, rate } | WeightPrior::SymGamma { shape, rate } => {
                shape / rate
            }
        };
        let u_eff = config.block1_size();
        let total = alpha1 * u_eff as f64 + config.alpha2 * (k - u_eff) as f64;
        let log_w: Vec<f64> = (0..k)
            .map(|j| {
                let a = if j < u_eff { alpha1 } else { config.alpha2 };
                (a / total).ln()
            })
            .collect();
        Self {
            z,
            log_w,
            mu,
            sigma_sq,
            alpha1,
        }
    }

    pub fn kplus(&self) -> usize {
        let mut seen = vec![false; self.log_w.len()];
        for &zi in &self.z {
            seen[zi] = true;
        }
        seen.iter().filter(|&&s| s).count()
    }
}

/// Workspace carried across sweeps: MH bookkeeping, adaptation state, and
/// warning counters.
pub struct SamplerDriver<'a> {
    pub config: &'a UnivariateModelConfig,
    pub pc: Option<&'a PcPriorSpec>,
    pub mh_step: f64,
    pub adapting: bool,
    pub acceptance: AcceptanceStats,
    pub warnings: WarningCounters,
    window_proposals: u64,
    window_accepts: u64,
}

impl<'a> SamplerDriver<'a> {
    pub fn new(config: &'a UnivariateModelConfig, pc: Option<&'a PcPriorSpec>) -> Result<Self> {
        config.validate()?;
        if config.mu0.is_none() {
            return Err(Error::invalid(
                "mu0 must be resolved before sampling (run_chain fills in mean(y))".to_string(),
            ));
        }
        if matches!(config.weight_prior, WeightPrior::AsymPc) {
            let spec = pc.ok_or_else(|| {
                Error::invalid("AsymPc weight prior requires a PcPriorSpec".to_string())
            })?;
            if spec.u() != config.u || spec.k() != config.k {
                return Err(Error::invalid(format!(
                    "PcPriorSpec (U={}, K={}) does not match config (U={}, K={})",
                    spec.u(),
                    spec.k(),
                    config.u,
                    config.k
                )));
            }
        }
        Ok(Self {
            config,
            pc,
            mh_step: config.mh_step,
            adapting: true,
            acceptance: AcceptanceStats::default(),
            warnings: WarningCounters::default(),
            window_proposals: 0,
            window_accepts: 0,
        })
    }

    /// Freeze proposal adaptation (call when burn-in ends).
    pub fn freeze(&mut self) {
        self.adapting = false;
        self.acceptance.mh_step_final = self.mh_step;
    }

    /// One full sweep of the conditionals.
    pub fn gibbs_step(&mut self, state: &mut UnivariateChainState, y: &[f64], rng: &mut RngStream) {
        let k = self.config.k;
        let n = y.len();
        let u_eff = self.config.block1_size();

        // (a) allocations
        let log_sd: Vec<f64> = state.sigma_sq.iter().map(|s| 0.5 * s.ln()).collect();
        let mut log_probs = vec![0.0; k];
        for i in 0..n {
            for j in 0..k {
                let d = y[i] - state.mu[j];
                log_probs[j] = state.log_w[j] - 0.5 * d * d / state.sigma_sq[j] - log_sd[j];
            }
            state.z[i] = sample_categorical_log(rng, &log_probs).expect("finite weights");
        }

        // occupancy
        let mut counts = vec![0usize; k];
        let mut sums = vec![0.0; k];
        for (i, &zi) in state.z.iter().enumerate() {
            counts[zi] += 1;
            sums[zi] += y[i];
        }

        // (b) weights
        let shapes: Vec<f64> = (0..k)
            .map(|j| {
                let a = if j < u_eff { state.alpha1 } else { self.config.alpha2 };
                a + counts[j] as f64
            })
            .collect();
        state.log_w = sample_dirichlet_log(rng, &shapes).expect("positive shapes");

        // (c) means
        let mu0 = self.config.mu0.expect("resolved before sampling");
        let sigma0_sq = self.config.sigma0_sq;
        for j in 0..k {
            if counts[j] == 0 {
                state.mu[j] = sample_normal(rng, mu0, sigma0_sq.sqrt());
            } else {
                let prec = counts[j] as f64 / state.sigma_sq[j] + 1.0 / sigma0_sq;
                let mean = (sums[j] / state.sigma_sq[j] + mu0 / sigma0_sq) / prec;
                state.mu[j] = sample_normal(rng, mean, prec.recip().sqrt());
            }
        }

        // (d) variances
        for j in 0..k {
            let mut draw = if counts[j] == 0 {
                sample_inverse_gamma(rng, self.config.a0, self.config.b0)
            } else {
                let ss: f64 = state
                    .z
                    .iter()
                    .zip(y)
                    .filter(|(&zi, _)| zi == j)
                    .map(|(_, &yi)| (yi - state.mu[j]) * (yi - state.mu[j]))
                    .sum();
                sample_inverse_gamma(
                    rng,
                    self.config.a0 + counts[j] as f64 / 2.0,
                    self.config.b0 + 0.5 * ss,
                )
            };
            if draw < VARIANCE_FLOOR {
                draw = VARIANCE_FLOOR;
                self.warnings.variance_floors += 1;
            }
            state.sigma_sq[j] = draw;
        }

        // (e) alpha1
        self.update_alpha1(state, rng);
    }

    fn update_alpha1(&mut self, state: &mut UnivariateChainState, rng: &mut RngStream) {
        if matches!(self.config.weight_prior, WeightPrior::AsymFixed { .. }) {
            return;
        }
        let u_eff = self.config.block1_size();
        let sum_log_w1: f64 = state.log_w[..u_eff].iter().sum();
        let update = alpha1_mh_step(
            self.config.weight_prior,
            self.pc,
            self.config.u,
            u_eff,
            self.config.k,
            self.config.alpha2,
            sum_log_w1,
            state.alpha1,
            self.mh_step,
            rng,
        );
        state.alpha1 = update.value;
        self.record_alpha1(update.accepted);
    }

    fn record_alpha1(&mut self, accepted: bool) {
        self.acceptance.alpha1_proposals += 1;
        self.window_proposals += 1;
        if accepted {
            self.acceptance.alpha1_accepts += 1;
            self.window_accepts += 1;
        }
        // Robbins-Monro step adaptation toward a 0.2-0.5 acceptance band,
        // active during burn-in only
        if self.adapting && self.window_proposals == 50 {
            let rate = self.window_accepts as f64 / 50.0;
            self.mh_step = (self.mh_step * ((rate - 0.35) * 0.8).exp()).clamp(1e-3, 20.0);
            self.window_proposals = 0;
            self.window_accepts = 0;
        }
    }

    /// Swap the full triple (mean, variance, allocations) and the weight of a
    /// uniformly chosen block-1 component with a block-2 component. The MH
    /// ratio reduces to the weight-prior density ratio.
    pub fn block_swap_move(&mut self, state: &mut UnivariateChainState, rng: &mut RngStream) {
        let u_eff = self.config.block1_size();
        let k = self.config.k;
        if u_eff == 0 || u_eff >= k {
            return;
        }
        let j1 = (rng.uniform() * u_eff as f64) as usize;
        let j2 = u_eff + (rng.uniform() * (k - u_eff) as f64) as usize;
        let j1 = j1.min(u_eff - 1);
        let j2 = j2.min(k - 1);
        let log_ratio =
            (state.alpha1 - self.config.alpha2) * (state.log_w[j2] - state.log_w[j1]);
        self.acceptance.swap_proposals += 1;
        if log_ratio >= 0.0 || rng.uniform_pos().ln() < log_ratio {
            self.acceptance.swap_accepts += 1;
            state.log_w.swap(j1, j2);
            state.mu.swap(j1, j2);
            state.sigma_sq.swap(j1, j2);
            for zi in state.z.iter_mut() {
                if *zi == j1 {
                    *zi = j2;
                } else if *zi == j2 {
                    *zi = j1;
                }
            }
        }
    }
}

pub(crate) struct Alpha1Update {
    pub value: f64,
    pub accepted: bool,
}

/// Random-walk MH for alpha1, shared by the univariate and functional
/// samplers. The log-target is the alpha1-dependent part of the Dirichlet
/// density of the current weights plus the prior and the transform Jacobian;
/// the alpha2 block terms are constant in the ratio and omitted.
///
/// The PC prior walks the logit of (0, U); the Gamma priors walk log scale.
#[allow(clippy::too_many_arguments)]
pub(crate) fn alpha1_mh_step(
    prior: WeightPrior,
    pc: Option<&PcPriorSpec>,
    u: usize,
    u_eff: usize,
    k: usize,
    alpha2: f64,
    sum_log_w1: f64,
    alpha1: f64,
    mh_step: f64,
    rng: &mut RngStream,
) -> Alpha1Update {
    let weight_loglik = |a1: f64| -> f64 {
        let total = a1 * u_eff as f64 + alpha2 * (k - u_eff) as f64;
        log_gamma_unchecked(total) - u_eff as f64 * log_gamma_unchecked(a1)
            + (a1 - 1.0) * sum_log_w1
    };
    let log_target = |a1: f64| -> f64 {
        weight_loglik(a1)
            + match prior {
                WeightPrior::AsymPc => pc.expect("validated").log_pc_density_fast(a1),
                WeightPrior::AsymGamma { shape, rate } | WeightPrior::SymGamma { shape, rate } => {
                    (shape - 1.0) * a1.ln() - rate * a1
                }
                WeightPrior::AsymFixed { .. } => 0.0,
            }
    };
    match prior {
        WeightPrior::AsymFixed { .. } => Alpha1Update { value: alpha1, accepted: false },
        WeightPrior::AsymPc => {
            // logit scale over (0, U): t = ln(alpha1 / (U - alpha1))
            let ub = u as f64;
            let a = alpha1.clamp(1e-12, ub * (1.0 - 1e-12));
            let t = (a / (ub - a)).ln();
            let t_new = t + mh_step * crate::dist::sample_std_normal(rng);
            let a_new = ub / (1.0 + (-t_new).exp());
            if a_new <= 0.0 || a_new >= ub {
                return Alpha1Update { value: alpha1, accepted: false };
            }
            let log_jac = |x: f64| x.ln() + (ub - x).ln();
            let log_ratio = log_target(a_new) + log_jac(a_new) - log_target(a) - log_jac(a);
            if log_ratio >= 0.0 || rng.uniform_pos().ln() < log_ratio {
                Alpha1Update { value: a_new, accepted: true }
            } else {
                Alpha1Update { value: alpha1, accepted: false }
            }
        }
        WeightPrior::AsymGamma { .. } | WeightPrior::SymGamma { .. } => {
            // log scale over (0, inf)
            let t = alpha1.ln();
            let t_new = t + mh_step * crate::dist::sample_std_normal(rng);
            let a_new = t_new.exp();
            let log_ratio = log_target(a_new) + t_new - log_target(alpha1) - t;
            if log_ratio >= 0.0 || rng.uniform_pos().ln() < log_ratio {
                Alpha1Update { value: a_new, accepted: true }
            } else {
                Alpha1Update { value: alpha1, accepted: false }
            }
        }
    }
}

/// Chain protocol: total sweeps, burn-in, thinning.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct ChainProtocol {
    pub iters: usize,
    pub burn: usize,
    pub thin: usize,
}

impl ChainProtocol {
    pub fn validate(&self) -> Result<()> {
        if self.iters <= self.burn {
            return Err(Error::invalid(format!(
                "iters ({}) must exceed burn ({})",
                self.iters, self.burn
            )));
        }
        if self.thin < 1 {
            return Err(Error::invalid("thin must be at least 1".to_string()));
        }
        Ok(())
    }
}

/// Run one chain and accumulate posterior summaries.
///
/// `config.mu0 = None` resolves to mean(y) before sampling. Retains every
/// `thin`-th sweep after `burn`; the block-swap move runs every sweep.
pub fn run_chain(
    y: &[f64],
    config: &UnivariateModelConfig,
    pc: Option<&PcPriorSpec>,
    protocol: ChainProtocol,
    rng: &mut RngStream,
) -> Result<PosteriorSummary> {
    protocol.validate()?;
    if y.is_empty() {
        return Err(Error::domain("need at least one observation".to_string()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("observations must be finite".to_string()));
    }
    let mut config = *config;
    if config.mu0.is_none() {
        config.mu0 = Some(y.iter().sum::<f64>() / y.len() as f64);
    }
    let mut driver = SamplerDriver::new(&config, pc)?;
    let mut state = UnivariateChainState::init(y, &config);
    let mut acc = SummaryAccumulator::new(y.len(), config.k);
    let mut fitted = vec![0.0; y.len()];
    for it in 0..protocol.iters {
        if it == protocol.burn {
            driver.freeze();
        }
        driver.gibbs_step(&mut state, y, rng);
        if config.block_swap {
            driver.block_swap_move(&mut state, rng);
        }
        if it >= protocol.burn && (it - protocol.burn) % protocol.thin == 0 {
            for (f, &zi) in fitted.iter_mut().zip(&state.z) {
                *f = state.mu[zi];
            }
            acc.push(&state.z, &fitted, state.alpha1);
        }
    }
    if driver.acceptance.mh_step_final == 0.0 {
        driver.acceptance.mh_step_final = driver.mh_step;
    }
    let mut warnings = driver.warnings;
    if let Some(spec) = pc {
        warnings.boundary_clamps = spec.boundary_clamps();
    }
    acc.finalize(driver.acceptance, warnings)
}
