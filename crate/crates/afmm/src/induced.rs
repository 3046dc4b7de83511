//! Monte Carlo computation of the prior on K+ (the number of occupied
//! components among n allocations) induced by a weight-prior family.

use rayon::prelude::*;

use crate::asym::AsymDirichletParams;
use crate::dist::{sample_gamma, GammaParams};
use crate::error::{Error, Result};
use crate::pc::{simulate_kplus_asym, simulate_kplus_from_log_weights, PcPriorSpec};
use crate::rng::RngStream;

/// Weight-prior families whose induced K+ prior can be simulated.
#[derive(Debug, Clone)]
pub enum WeightPriorFamily {
    /// Asymmetric Dirichlet with both concentrations fixed.
    AsymFixed(AsymDirichletParams),
    /// Asymmetric Dirichlet with alpha1 drawn from the PC prior.
    AsymPc(PcPriorSpec),
    /// Symmetric Dirichlet over K components with fixed concentration.
    SymStatic { k: usize, alpha: f64 },
    /// Symmetric Dirichlet with alpha ~ Gamma(shape, rate).
    SymGamma { k: usize, gamma: GammaParams },
    /// Dirichlet process: K+ is the table count after seating n customers by
    /// the Chinese-restaurant rule.
    Dpm { concentration: f64 },
    /// Static mixture-of-finite-mixtures comparator: K ~ Uniform{1..k_max},
    /// then a symmetric Dirichlet(alpha) over those K components.
    MfmmUniformK { k_max: usize, alpha: f64 },
}

impl WeightPriorFamily {
    /// Largest possible K+ for n observations.
    pub fn support_max(&self, n: usize) -> usize {
        match self {
            WeightPriorFamily::AsymFixed(p) => p.k.min(n),
            WeightPriorFamily::AsymPc(spec) => spec.k().min(n),
            WeightPriorFamily::SymStatic { k, .. } => (*k).min(n),
            WeightPriorFamily::SymGamma { k, .. } => (*k).min(n),
            WeightPriorFamily::Dpm { .. } => n,
            WeightPriorFamily::MfmmUniformK { k_max, .. } => (*k_max).min(n),
        }
    }

    /// Short descriptor used in manifests and CSV headers.
    pub fn describe(&self) -> String {
        match self {
            WeightPriorFamily::AsymFixed(p) => format!(
                "asym-fixed(K={}, U={}, alpha1={}, alpha2={})",
                p.k, p.u, p.alpha1, p.alpha2
            ),
            WeightPriorFamily::AsymPc(spec) => format!(
                "asym-pc(K={}, U={}, alpha2={}, lambda={})",
                spec.k(),
                spec.u(),
                spec.alpha2_fixed(),
                spec.lambda()
            ),
            WeightPriorFamily::SymStatic { k, alpha } => format!("sym(K={k}, alpha={alpha})"),
            WeightPriorFamily::SymGamma { k, gamma } => format!(
                "sym-gamma(K={k}, shape={}, rate={})",
                gamma.shape, gamma.rate
            ),
            WeightPriorFamily::Dpm { concentration } => format!("dpm(alpha={concentration})"),
            WeightPriorFamily::MfmmUniformK { k_max, alpha } => {
                format!("mfmm-unifK(K_max={k_max}, alpha={alpha})")
            }
        }
    }

    fn simulate_one(&self, rng: &mut RngStream, n: usize) -> usize {
        match self {
            WeightPriorFamily::AsymFixed(p) => {
                simulate_kplus_asym(rng, p.k, p.u, p.alpha1, p.alpha2, n)
            }
            WeightPriorFamily::AsymPc(spec) => {
                let alpha1 = spec.sample_alpha1(rng);
                simulate_kplus_asym(rng, spec.k(), spec.u(), alpha1, spec.alpha2_fixed(), n)
            }
            WeightPriorFamily::SymStatic { k, alpha } => {
                simulate_kplus_asym(rng, *k, 0, 1.0, *alpha, n)
            }
            WeightPriorFamily::SymGamma { k, gamma } => {
                let alpha = sample_gamma(rng, *gamma).max(f64::MIN_POSITIVE);
                simulate_kplus_asym(rng, *k, 0, 1.0, alpha, n)
            }
            WeightPriorFamily::Dpm { concentration } => crp_table_count(rng, *concentration, n),
            WeightPriorFamily::MfmmUniformK { k_max, alpha } => {
                let k = (1 + (rng.uniform() * *k_max as f64) as usize).min(*k_max);
                if k == 1 {
                    1
                } else {
                    let log_w =
                        crate::dist::sample_dirichlet_log(rng, &vec![*alpha; k]).expect("valid");
                    simulate_kplus_from_log_weights(rng, &log_w, n)
                }
            }
        }
    }
}

/// Seat n customers by the Chinese-restaurant rule and count tables.
fn crp_table_count(rng: &mut RngStream, concentration: f64, n: usize) -> usize {
    if n == 0 {
        return 0;
    }
    let mut tables = 1usize; // first customer opens the first table
    for i in 1..n {
        let p_new = concentration / (concentration + i as f64);
        if rng.uniform() < p_new {
            tables += 1;
        }
    }
    tables
}

/// Monte Carlo estimate of the induced prior pmf of K+.
#[derive(Debug, Clone, serde::Serialize)]
pub struct InducedPriorResult {
    /// pmf[j] = Pr(K+ = j+1); support 1..=support_max.
    pub pmf: Vec<f64>,
    /// Monte Carlo standard error per bin.
    pub mc_se: Vec<f64>,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub stream_id: u64,
    pub family: String,
}

impl InducedPriorResult {
    /// The K+ value with the largest estimated mass.
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.pmf.iter().enumerate() {
            if p > self.pmf[best] {
                best = i;
            }
        }
        best + 1
    }

    pub fn prob(&self, kplus: usize) -> f64 {
        if kplus == 0 || kplus > self.pmf.len() {
            0.0
        } else {
            self.pmf[kplus - 1]
        }
    }

    /// Pr(K+ < u).
    pub fn tail_below(&self, u: usize) -> f64 {
        self.pmf.iter().take(u.saturating_sub(1)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .map(|(i, &p)| (i + 1) as f64 * p)
            .sum()
    }
}

const PAR_BATCH: usize = 1024;

/// Simulate the induced prior of K+ under `family` with `replicates` draws.
///
/// Replicate j always uses substream j+1 of `rng`, so the result does not
/// depend on thread scheduling and reruns are identical.
pub fn induced_kplus_prior(
    family: &WeightPriorFamily,
    n: usize,
    replicates: usize,
    rng: &RngStream,
) -> Result<InducedPriorResult> {
    if n < 1 || replicates < 1 {
        return Err(Error::invalid(
            "induced prior requires n >= 1 and replicates >= 1".to_string(),
        ));
    }
    let support = family.support_max(n);
    let n_batches = replicates.div_ceil(PAR_BATCH);
    let counts = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let lo = b * PAR_BATCH;
            let hi = ((b + 1) * PAR_BATCH).min(replicates);
            let mut counts = vec![0u64; support + 1];
            for j in lo..hi {
                let mut rng_j = rng.substream(1 + j as u64);
                let kplus = family.simulate_one(&mut rng_j, n).min(support);
                counts[kplus] += 1;
            }
            counts
        })
        .reduce(
            || vec![0u64; support + 1],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    let r = replicates as f64;
    let pmf: Vec<f64> = (1..=support).map(|k| counts[k] as f64 / r).collect();
    let mc_se: Vec<f64> = pmf.iter().map(|&p| (p * (1.0 - p) / r).sqrt()).collect();
    Ok(InducedPriorResult {
        pmf,
        mc_se,
        n,
        replicates,
        seed: rng.seed(),
        stream_id: rng.stream_id(),
        family: family.describe(),
    })
}
