//! Functional clustering: per-subject B-spline regression with a vertical
//! shift, mixture clustering of the coefficient vectors, RW2 P-spline
//! smoothing of the cluster-mean coefficients with an exponential prior on
//! the smoothing scale, and uniform priors on the noise scales.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::bspline::{rw2_penalty, BsplineBasis};
use crate::datagen::FunctionalData;
use crate::dist::{mvn_prec_noise, sample_categorical_log, sample_dirichlet_log, sample_uniform};
use crate::error::{Error, Result};
use crate::pc::PcPriorSpec;
use crate::rng::RngStream;
use crate::summary::{AcceptanceStats, PosteriorSummary, SummaryAccumulator, WarningCounters};
use crate::univariate::{alpha1_mh_step, ChainProtocol, WeightPrior};

/// Which scale the exponential smoothing prior lives on: tau itself (the
/// standard-deviation scale entering the kernel) or its reciprocal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum TauPriorScale {
    ExpOnTau,
    ExpOnInvTau,
}

/// Bounds and smoothing-prior settings of the functional model.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct FunctionalHyperparams {
    /// Upper bound of the uniform prior on the per-subject noise SD.
    pub a: f64,
    /// Upper bound of the uniform prior on the within-cluster coefficient SD.
    pub a0: f64,
    /// Tail probability of the smoothing prior.
    pub a_tau: f64,
    /// Tail threshold of the smoothing prior.
    pub u_tau: f64,
    pub tau_prior: TauPriorScale,
}

impl Default for FunctionalHyperparams {
    fn default() -> Self {
        Self {
            a: 0.001,
            a0: 0.25,
            a_tau: 1e-2,
            u_tau: 3.22,
            tau_prior: TauPriorScale::ExpOnTau,
        }
    }
}

impl FunctionalHyperparams {
    /// Exponential rate eta = -ln(a_tau) / U_tau.
    pub fn eta_tau(&self) -> f64 {
        -self.a_tau.ln() / self.u_tau
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a0 > 0.0) {
            return Err(Error::invalid("uniform prior bounds must be positive".to_string()));
        }
        if !(self.a_tau > 0.0 && self.a_tau < 1.0 && self.u_tau > 0.0) {
            return Err(Error::invalid(
                "tau prior requires a_tau in (0,1) and U_tau > 0".to_string(),
            ));
        }
        Ok(())
    }
}

/// Configuration of the functional mixture.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct FunctionalModelConfig {
    pub k: usize,
    pub u: usize,
    pub weight_prior: WeightPrior,
    pub alpha2: f64,
    pub mh_step: f64,
    pub block_swap: bool,
    /// Prior variance of the per-subject vertical shift.
    pub beta0_sigma_sq: f64,
    pub hyper: FunctionalHyperparams,
}

impl FunctionalModelConfig {
    pub fn new(u: usize, k: usize, weight_prior: WeightPrior) -> Self {
        Self {
            k,
            u,
            weight_prior,
            alpha2: 1e-5,
            mh_step: 1.0,
            block_swap: true,
            beta0_sigma_sq: 100.0,
            hyper: FunctionalHyperparams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 || self.u > self.k {
            return Err(Error::invalid(format!(
                "need K >= 2 and U <= K, got U={}, K={}",
                self.u, self.k
            )));
        }
        if !(self.alpha2 > 0.0 && self.mh_step > 0.0 && self.beta0_sigma_sq > 0.0) {
            return Err(Error::invalid("scale parameters must be positive".to_string()));
        }
        self.hyper.validate()
    }

    pub fn block1_size(&self) -> usize {
        match self.weight_prior {
            WeightPrior::SymGamma { .. } => self.k,
            _ => self.u,
        }
    }
}

/// Latent state of the functional chain.
#[derive(Debug, Clone)]
pub struct FunctionalChainState {
    pub beta: Vec<DVector<f64>>,
    pub beta0: Vec<f64>,
    pub sigma: Vec<f64>,
    pub theta: Vec<DVector<f64>>,
    pub kappa: Vec<f64>,
    pub tau: Vec<f64>,
    pub z: Vec<usize>,
    pub log_w: Vec<f64>,
    pub alpha1: f64,
}

/// Posterior summaries plus the curve-level outputs.
#[derive(Debug, Clone)]
pub struct FunctionalFit {
    pub summary: PosteriorSummary,
    pub grid: Vec<f64>,
    /// Posterior-mean fitted curve per subject (n x m).
    pub subject_fits: Vec<Vec<f64>>,
    /// Cross-sectional means of the fitted curves within each point-estimate
    /// cluster, keyed by cluster label.
    pub cluster_means: Vec<(usize, Vec<f64>)>,
}

struct FunctionalDriver<'a> {
    config: &'a FunctionalModelConfig,
    pc: Option<&'a PcPriorSpec>,
    design: &'a DMatrix<f64>, // m x (p+1), intercept column first
    xtx: DMatrix<f64>,
    xty: Vec<DVector<f64>>,
    penalty: DMatrix<f64>, // S + ridge
    s_raw: DMatrix<f64>,
    p: usize,
    m: usize,
    mh_step: f64,
    tau_step: f64,
    adapting: bool,
    acceptance: AcceptanceStats,
    warnings: WarningCounters,
    window: (u64, u64),
}

const SLICE_MAX_SHRINK: usize = 200;

/// Shrinkage slice sampler on a bounded support.
fn slice_sample_bounded(
    rng: &mut RngStream,
    logf: &dyn Fn(f64) -> f64,
    x0: f64,
    lo: f64,
    hi: f64,
) -> f64 {
    let y = logf(x0) - crate::dist::sample_exponential(rng, 1.0);
    let (mut a, mut b) = (lo, hi);
    for _ in 0..SLICE_MAX_SHRINK {
        let x1 = sample_uniform(rng, a, b);
        if logf(x1) >= y {
            return x1;
        }
        if x1 < x0 {
            a = x1;
        } else {
            b = x1;
        }
    }
    x0
}

impl<'a> FunctionalDriver<'a> {
    fn new(
        config: &'a FunctionalModelConfig,
        pc: Option<&'a PcPriorSpec>,
        design: &'a DMatrix<f64>,
        curves: &[Vec<f64>],
    ) -> Result<Self> {
        config.validate()?;
        if matches!(config.weight_prior, WeightPrior::AsymPc) && pc.is_none() {
            return Err(Error::invalid("AsymPc weight prior requires a PcPriorSpec".to_string()));
        }
        let m = design.nrows();
        let p = design.ncols() - 1;
        let s_raw = rw2_penalty(p)?;
        let ridge = 1e-6 * s_raw.trace() / p as f64;
        let penalty = &s_raw + DMatrix::identity(p, p) * ridge;
        let xtx = design.transpose() * design;
        let xty: Vec<DVector<f64>> = curves
            .iter()
            .map(|y| design.transpose() * DVector::from_column_slice(y))
            .collect();
        Ok(Self {
            config,
            pc,
            design,
            xtx,
            xty,
            penalty,
            s_raw,
            p,
            m,
            mh_step: config.mh_step,
            tau_step: 0.5,
            adapting: true,
            acceptance: AcceptanceStats::default(),
            warnings: WarningCounters::default(),
            window: (0, 0),
        })
    }

    fn freeze(&mut self) {
        self.adapting = false;
        self.acceptance.mh_step_final = self.mh_step;
    }

    fn sweep(&mut self, state: &mut FunctionalChainState, curves: &[Vec<f64>], rng: &mut RngStream) {
        let k = self.config.k;
        let n = curves.len();
        let p = self.p;

        // (a) joint (beta0_i, beta_i) per subject
        for i in 0..n {
            let zi = state.z[i];
            let kap2 = state.kappa[zi] * state.kappa[zi];
            let sig2 = state.sigma[i] * state.sigma[i];
            let mut prec = &self.xtx / sig2;
            prec[(0, 0)] += 1.0 / self.config.beta0_sigma_sq;
            for d in 0..p {
                prec[(d + 1, d + 1)] += 1.0 / kap2;
            }
            let mut rhs = &self.xty[i] / sig2;
            for d in 0..p {
                rhs[d + 1] += state.theta[zi][d] / kap2;
            }
            let chol = self.cholesky_with_retry(prec);
            let mean = chol.solve(&rhs);
            let draw = &mean + mvn_prec_noise(rng, &chol);
            state.beta0[i] = draw[0];
            for d in 0..p {
                state.beta[i][d] = draw[d + 1];
            }
        }

        // (b) allocations in coefficient space
        let log_kappa: Vec<f64> = state.kappa.iter().map(|x| x.ln()).collect();
        let mut log_probs = vec![0.0; k];
        for i in 0..n {
            for j in 0..k {
                let kap2 = state.kappa[j] * state.kappa[j];
                let d2 = (&state.beta[i] - &state.theta[j]).norm_squared();
                log_probs[j] = state.log_w[j] - p as f64 * log_kappa[j] - 0.5 * d2 / kap2;
            }
            state.z[i] = sample_categorical_log(rng, &log_probs).expect("finite weights");
        }

        let mut counts = vec![0usize; k];
        let mut beta_sums = vec![DVector::zeros(p); k];
        for (i, &zi) in state.z.iter().enumerate() {
            counts[zi] += 1;
            beta_sums[zi] += &state.beta[i];
        }

        // (c) cluster-mean coefficients
        for j in 0..k {
            let tau2 = state.tau[j] * state.tau[j];
            let kap2 = state.kappa[j] * state.kappa[j];
            let mut prec = &self.penalty / tau2;
            if counts[j] > 0 {
                for d in 0..p {
                    prec[(d, d)] += counts[j] as f64 / kap2;
                }
            }
            let chol = self.cholesky_with_retry(prec);
            let mean = if counts[j] > 0 {
                chol.solve(&(&beta_sums[j] / kap2))
            } else {
                DVector::zeros(p)
            };
            state.theta[j] = &mean + mvn_prec_noise(rng, &chol);
        }

        // (d) smoothing scales
        for j in 0..k {
            self.update_tau(state, j, rng);
        }

        // (e) per-subject noise SD by slice sampling on (0, A)
        for i in 0..n {
            let fitted = self.design
                * DVector::from_fn(p + 1, |r, _| {
                    if r == 0 {
                        state.beta0[i]
                    } else {
                        state.beta[i][r - 1]
                    }
                });
            let ss: f64 = curves[i]
                .iter()
                .zip(fitted.iter())
                .map(|(y, f)| (y - f) * (y - f))
                .sum();
            let m = self.m as f64;
            let logf = move |s: f64| -m * s.ln() - 0.5 * ss / (s * s);
            state.sigma[i] = slice_sample_bounded(
                rng,
                &logf,
                state.sigma[i].clamp(1e-300, self.config.hyper.a),
                0.0,
                self.config.hyper.a,
            );
        }

        // (f) within-cluster coefficient SD by slice sampling on (0, A0)
        for j in 0..k {
            if counts[j] == 0 {
                state.kappa[j] = sample_uniform(rng, 0.0, self.config.hyper.a0);
                continue;
            }
            let ss: f64 = state
                .z
                .iter()
                .enumerate()
                .filter(|(_, &zj)| zj == j)
                .map(|(i, _)| (&state.beta[i] - &state.theta[j]).norm_squared())
                .sum();
            let dim = (counts[j] * p) as f64;
            let logf = move |x: f64| -dim * x.ln() - 0.5 * ss / (x * x);
            state.kappa[j] = slice_sample_bounded(
                rng,
                &logf,
                state.kappa[j].clamp(1e-300, self.config.hyper.a0),
                0.0,
                self.config.hyper.a0,
            );
        }

        // (g) weights and alpha1, as in the univariate sampler
        let u_eff = self.config.block1_size();
        let shapes: Vec<f64> = (0..k)
            .map(|j| {
                let a = if j < u_eff { state.alpha1 } else { self.config.alpha2 };
                a + counts[j] as f64
            })
            .collect();
        state.log_w = sample_dirichlet_log(rng, &shapes).expect("positive shapes");
        if !matches!(self.config.weight_prior, WeightPrior::AsymFixed { .. }) {
            let sum_log_w1: f64 = state.log_w[..u_eff].iter().sum();
            let update = alpha1_mh_step(
                self.config.weight_prior,
                self.pc,
                self.config.u,
                u_eff,
                k,
                self.config.alpha2,
                sum_log_w1,
                state.alpha1,
                self.mh_step,
                rng,
            );
            state.alpha1 = update.value;
            self.acceptance.alpha1_proposals += 1;
            self.window.0 += 1;
            if update.accepted {
                self.acceptance.alpha1_accepts += 1;
                self.window.1 += 1;
            }
            if self.adapting && self.window.0 == 50 {
                let rate = self.window.1 as f64 / 50.0;
                self.mh_step = (self.mh_step * ((rate - 0.35) * 0.8).exp()).clamp(1e-3, 20.0);
                self.window = (0, 0);
            }
        }
    }

    /// MH on ln(tau). The intrinsic RW2 prior contributes rank p-2 powers of
    /// 1/tau and the quadratic form in S; the exponential prior acts on tau or
    /// 1/tau per configuration.
    fn update_tau(&mut self, state: &mut FunctionalChainState, j: usize, rng: &mut RngStream) {
        let quad = (&self.s_raw * &state.theta[j]).dot(&state.theta[j]);
        let rank = (self.p - 2) as f64;
        let eta = self.config.hyper.eta_tau();
        let log_target = |tau: f64| -> f64 {
            let base = -rank * tau.ln() - 0.5 * quad / (tau * tau);
            base + match self.config.hyper.tau_prior {
                TauPriorScale::ExpOnTau => -eta * tau,
                TauPriorScale::ExpOnInvTau => -eta / tau - 2.0 * tau.ln(),
            }
        };
        let t = state.tau[j].ln();
        let t_new = t + self.tau_step * crate::dist::sample_std_normal(rng);
        let tau_new = t_new.exp();
        let log_ratio = log_target(tau_new) + t_new - log_target(state.tau[j]) - t;
        self.acceptance.tau_proposals += 1;
        if log_ratio >= 0.0 || rng.uniform_pos().ln() < log_ratio {
            state.tau[j] = tau_new;
            self.acceptance.tau_accepts += 1;
        }
    }

    /// Swap all component-level quantities of a block-1 and a block-2
    /// component along with their weights; the MH ratio is the weight-prior
    /// density ratio.
    fn block_swap(&mut self, state: &mut FunctionalChainState, rng: &mut RngStream) {
        let u_eff = self.config.block1_size();
        let k = self.config.k;
        if u_eff == 0 || u_eff >= k {
            return;
        }
        let j1 = ((rng.uniform() * u_eff as f64) as usize).min(u_eff - 1);
        let j2 = (u_eff + (rng.uniform() * (k - u_eff) as f64) as usize).min(k - 1);
        let log_ratio = (state.alpha1 - self.config.alpha2) * (state.log_w[j2] - state.log_w[j1]);
        self.acceptance.swap_proposals += 1;
        if log_ratio >= 0.0 || rng.uniform_pos().ln() < log_ratio {
            self.acceptance.swap_accepts += 1;
            state.log_w.swap(j1, j2);
            state.theta.swap(j1, j2);
            state.kappa.swap(j1, j2);
            state.tau.swap(j1, j2);
            for zi in state.z.iter_mut() {
                if *zi == j1 {
                    *zi = j2;
                } else if *zi == j2 {
                    *zi = j1;
                }
            }
        }
    }

    fn cholesky_with_retry(&mut self, mut prec: DMatrix<f64>) -> Cholesky<f64, Dyn> {
        let mut ridge = 1e-6 * prec.trace() / prec.nrows() as f64;
        loop {
            match Cholesky::new(prec.clone()) {
                Some(c) => return c,
                None => {
                    self.warnings.ridge_retries += 1;
                    ridge *= 10.0;
                    for d in 0..prec.nrows() {
                        prec[(d, d)] += ridge;
                    }
                }
            }
        }
    }
}

/// Deterministic initialization: per-subject ridge least-squares coefficient
/// fits, clustered by farthest-point seeding plus a few Lloyd iterations into
/// min(K, n, max(2U, 2)) groups; the largest groups occupy block 1. Starting
/// over-segmented lets the sampler prune superfluous clusters, which mixes
/// far better than growing into empty low-weight components.
fn init_state(
    config: &FunctionalModelConfig,
    driver: &FunctionalDriver,
    curves: &[Vec<f64>],
) -> FunctionalChainState {
    let n = curves.len();
    let p = driver.p;
    let k = config.k;
    let ridge = 1e-6 * driver.xtx.trace() / (p + 1) as f64;
    let reg = &driver.xtx + DMatrix::identity(p + 1, p + 1) * ridge;
    let chol = Cholesky::new(reg).expect("ridged normal equations");
    let coefs: Vec<DVector<f64>> = (0..n).map(|i| chol.solve(&driver.xty[i])).collect();
    let feats: Vec<DVector<f64>> = coefs
        .iter()
        .map(|c| DVector::from_fn(p, |d, _| c[d + 1]))
        .collect();

    let groups = k.min(n).min((2 * config.u).max(2));
    // farthest-point seeding
    let mut centers: Vec<DVector<f64>> = vec![feats[0].clone()];
    while centers.len() < groups {
        let far = (0..n)
            .max_by(|&a, &b| {
                let da = centers
                    .iter()
                    .map(|c| (&feats[a] - c).norm_squared())
                    .fold(f64::INFINITY, f64::min);
                let db = centers
                    .iter()
                    .map(|c| (&feats[b] - c).norm_squared())
                    .fold(f64::INFINITY, f64::min);
                da.partial_cmp(&db).expect("finite")
            })
            .expect("non-empty");
        centers.push(feats[far].clone());
    }
    let mut assign = vec![0usize; n];
    for _ in 0..10 {
        for i in 0..n {
            assign[i] = (0..centers.len())
                .min_by(|&a, &b| {
                    (&feats[i] - &centers[a])
                        .norm_squared()
                        .partial_cmp(&(&feats[i] - &centers[b]).norm_squared())
                        .expect("finite")
                })
                .expect("non-empty");
        }
        for (g, center) in centers.iter_mut().enumerate() {
            let members: Vec<usize> = (0..n).filter(|&i| assign[i] == g).collect();
            if members.is_empty() {
                continue;
            }
            let mut mean = DVector::zeros(p);
            for &i in &members {
                mean += &feats[i];
            }
            *center = mean / members.len() as f64;
        }
    }
    // order groups by size, biggest first into block 1
    let mut sizes: Vec<(usize, usize)> = (0..centers.len())
        .map(|g| (g, assign.iter().filter(|&&a| a == g).count()))
        .collect();
    sizes.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut slot_of_group = vec![0usize; centers.len()];
    for (slot, (g, _)) in sizes.iter().enumerate() {
        slot_of_group[*g] = slot;
    }
    let z: Vec<usize> = assign.iter().map(|&g| slot_of_group[g]).collect();

    let mut theta = vec![DVector::zeros(p); k];
    let mut counts = vec![0usize; k];
    for (i, &zi) in z.iter().enumerate() {
        counts[zi] += 1;
        theta[zi] += &feats[i];
    }
    for j in 0..k {
        if counts[j] > 0 {
            theta[j] /= counts[j] as f64;
        }
    }
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
    FunctionalChainState {
        beta: feats,
        beta0: coefs.iter().map(|c| c[0]).collect(),
        sigma: vec![config.hyper.a / 2.0; n],
        theta,
        kappa: vec![config.hyper.a0 / 2.0; k],
        tau: vec![1.0; k],
        z,
        log_w,
        alpha1,
    }
}

/// Fit the functional mixture to curves observed on a shared grid.
pub fn fit_functional(
    data: &FunctionalData,
    basis: &BsplineBasis,
    config: &FunctionalModelConfig,
    pc: Option<&PcPriorSpec>,
    protocol: ChainProtocol,
    rng: &mut RngStream,
) -> Result<FunctionalFit> {
    protocol.validate()?;
    let n = data.curves.len();
    if n == 0 {
        return Err(Error::domain("need at least one curve".to_string()));
    }
    let m = data.grid.len();
    if data.curves.iter().any(|c| c.len() != m) {
        return Err(Error::domain("all curves must share the common grid".to_string()));
    }
    // design with the intercept column restored in front
    let x = basis.design_matrix(&data.grid)?;
    let p = basis.p;
    let mut design = DMatrix::zeros(m, p + 1);
    for r in 0..m {
        design[(r, 0)] = 1.0;
        for c in 0..p {
            design[(r, c + 1)] = x[(r, c)];
        }
    }
    let mut driver = FunctionalDriver::new(config, pc, &design, &data.curves)?;
    let mut state = init_state(config, &driver, &data.curves);
    let mut acc = SummaryAccumulator::new(n, config.k);
    let mut fit_sum = vec![vec![0.0; m]; n];
    let mut level = vec![0.0; n];
    for it in 0..protocol.iters {
        if it == protocol.burn {
            driver.freeze();
        }
        driver.sweep(&mut state, &data.curves, rng);
        if config.block_swap {
            driver.block_swap(&mut state, rng);
        }
        if it >= protocol.burn && (it - protocol.burn) % protocol.thin == 0 {
            for i in 0..n {
                let coefs = DVector::from_fn(p + 1, |r, _| {
                    if r == 0 {
                        state.beta0[i]
                    } else {
                        state.beta[i][r - 1]
                    }
                });
                let fitted = &design * coefs;
                for (t, f) in fitted.iter().enumerate() {
                    fit_sum[i][t] += f;
                }
                level[i] = fitted.iter().sum::<f64>() / m as f64;
            }
            acc.push(&state.z, &level, state.alpha1);
        }
    }
    if driver.acceptance.mh_step_final == 0.0 {
        driver.acceptance.mh_step_final = driver.mh_step;
    }
    let mut warnings = driver.warnings;
    if let Some(spec) = pc {
        warnings.boundary_clamps = spec.boundary_clamps();
    }
    let retained = acc.retained().max(1) as f64;
    let summary = acc.finalize(driver.acceptance, warnings)?;
    let subject_fits: Vec<Vec<f64>> = fit_sum
        .into_iter()
        .map(|row| row.into_iter().map(|v| v / retained).collect())
        .collect();
    let labels = summary.point_partition.labels().to_vec();
    let n_clusters = summary.point_partition.n_clusters();
    let mut cluster_means = Vec::with_capacity(n_clusters);
    for cluster in 1..=n_clusters {
        let members: Vec<usize> = (0..n).filter(|&i| labels[i] == cluster).collect();
        let mut mean = vec![0.0; m];
        for &i in &members {
            for t in 0..m {
                mean[t] += subject_fits[i][t];
            }
        }
        for v in mean.iter_mut() {
            *v /= members.len() as f64;
        }
        cluster_means.push((cluster, mean));
    }
    Ok(FunctionalFit {
        summary,
        grid: data.grid.clone(),
        subject_fits,
        cluster_means,
    })
}
