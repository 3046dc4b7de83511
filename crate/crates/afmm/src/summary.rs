//! Accumulation of retained MCMC draws into relabel-invariant posterior
//! summaries: the K+ pmf, the co-clustering matrix, partition draws, fitted
//! values, and the Binder-loss point partition.

use crate::error::Result;
use crate::metrics::{binder_point_partition, Partition};

/// Counters for numerical edge events hit during a run.
#[derive(Debug, Clone, Copy, Default, serde::Serialize, serde::Deserialize)]
pub struct WarningCounters {
    pub variance_floors: u64,
    pub ridge_retries: u64,
    pub boundary_clamps: u64,
    pub insufficient_draws: bool,
}

/// Metropolis-Hastings bookkeeping.
#[derive(Debug, Clone, Copy, Default, serde::Serialize, serde::Deserialize)]
pub struct AcceptanceStats {
    pub alpha1_proposals: u64,
    pub alpha1_accepts: u64,
    pub swap_proposals: u64,
    pub swap_accepts: u64,
    pub tau_proposals: u64,
    pub tau_accepts: u64,
    pub mh_step_final: f64,
}

impl AcceptanceStats {
    pub fn alpha1_rate(&self) -> f64 {
        if self.alpha1_proposals == 0 {
            return 0.0;
        }
        self.alpha1_accepts as f64 / self.alpha1_proposals as f64
    }

    pub fn swap_rate(&self) -> f64 {
        if self.swap_proposals == 0 {
            return 0.0;
        }
        self.swap_accepts as f64 / self.swap_proposals as f64
    }
}

/// Posterior summaries of a finished chain.
#[derive(Debug, Clone)]
pub struct PosteriorSummary {
    /// kplus_pmf[j] = Pr(K+ = j+1 | y), support 1..=K.
    pub kplus_pmf: Vec<f64>,
    /// n x n matrix of pairwise co-clustering probabilities.
    pub coclustering: Vec<Vec<f64>>,
    /// Retained partitions, canonicalized by first appearance.
    pub partition_draws: Vec<Partition>,
    /// The retained draw minimizing the Binder loss.
    pub point_partition: Partition,
    /// Per-observation posterior mean fit.
    pub fitted: Vec<f64>,
    /// Retained alpha1 draws (constant when alpha1 is fixed).
    pub alpha1_draws: Vec<f64>,
    pub retained: usize,
    pub acceptance: AcceptanceStats,
    pub warnings: WarningCounters,
}

impl PosteriorSummary {
    pub fn kplus_mode(&self) -> usize {
        let mut mode = 0usize;
        for (i, &p) in self.kplus_pmf.iter().enumerate() {
            if p > self.kplus_pmf[mode] {
                mode = i;
            }
        }
        mode + 1
    }
}

/// Streaming accumulator fed one retained draw at a time.
pub struct SummaryAccumulator {
    n: usize,
    k: usize,
    kplus_counts: Vec<u64>,
    cocluster_sum: Vec<f64>, // row-major n x n
    fitted_sum: Vec<f64>,
    draws: Vec<Partition>,
    alpha1_draws: Vec<f64>,
    retained: usize,
}

impl SummaryAccumulator {
    pub fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            k,
            kplus_counts: vec![0; k + 1],
            cocluster_sum: vec![0.0; n * n],
            fitted_sum: vec![0.0; n],
            draws: Vec::new(),
            alpha1_draws: Vec::new(),
            retained: 0,
        }
    }

    /// Record one retained draw: raw allocation labels, the per-observation
    /// fitted value at this draw, and the current alpha1.
    pub fn push(&mut self, labels: &[usize], fitted: &[f64], alpha1: f64) {
        debug_assert_eq!(labels.len(), self.n);
        debug_assert_eq!(fitted.len(), self.n);
        let partition = Partition::new(labels);
        let kplus = partition.n_clusters().min(self.k);
        self.kplus_counts[kplus] += 1;
        for i in 0..self.n {
            self.cocluster_sum[i * self.n + i] += 1.0;
            for j in 0..i {
                if partition.same_cluster(i, j) {
                    self.cocluster_sum[i * self.n + j] += 1.0;
                    self.cocluster_sum[j * self.n + i] += 1.0;
                }
            }
        }
        for (acc, &f) in self.fitted_sum.iter_mut().zip(fitted) {
            *acc += f;
        }
        self.draws.push(partition);
        self.alpha1_draws.push(alpha1);
        self.retained += 1;
    }

    pub fn retained(&self) -> usize {
        self.retained
    }

    pub fn finalize(
        self,
        acceptance: AcceptanceStats,
        mut warnings: WarningCounters,
    ) -> Result<PosteriorSummary> {
        let d = self.retained.max(1) as f64;
        if self.retained < 50 {
            warnings.insufficient_draws = true;
        }
        let kplus_pmf: Vec<f64> = (1..=self.k)
            .map(|k| self.kplus_counts[k] as f64 / d)
            .collect();
        let coclustering: Vec<Vec<f64>> = (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| self.cocluster_sum[i * self.n + j] / d)
                    .collect()
            })
            .collect();
        let fitted: Vec<f64> = self.fitted_sum.iter().map(|s| s / d).collect();
        let point_partition = binder_point_partition(&self.draws, &coclustering)?;
        Ok(PosteriorSummary {
            kplus_pmf,
            coclustering,
            partition_draws: self.draws,
            point_partition,
            fitted,
            alpha1_draws: self.alpha1_draws,
            retained: self.retained,
            acceptance,
            warnings,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accumulates_simple_draws() {
        let mut acc = SummaryAccumulator::new(3, 4);
        acc.push(&[0, 0, 1], &[1.0, 1.0, 2.0], 0.5);
        acc.push(&[0, 1, 1], &[1.0, 3.0, 2.0], 0.7);
        let s = acc.finalize(AcceptanceStats::default(), WarningCounters::default()).unwrap();
        assert_eq!(s.retained, 2);
        assert!((s.kplus_pmf[1] - 1.0).abs() < 1e-15); // both draws have K+=2
        assert_eq!(s.kplus_mode(), 2);
        assert!((s.coclustering[0][1] - 0.5).abs() < 1e-15);
        assert!((s.coclustering[1][2] - 0.5).abs() < 1e-15);
        assert!((s.coclustering[0][2] - 0.0).abs() < 1e-15);
        assert!((s.fitted[1] - 2.0).abs() < 1e-15);
        assert!(s.warnings.insufficient_draws);
    }

    #[test]
    fn coclustering_symmetric_unit_diagonal() {
        let mut acc = SummaryAccumulator::new(4, 5);
        acc.push(&[2, 2, 0, 1], &[0.0; 4], 1.0);
        acc.push(&[1, 2, 0, 1], &[0.0; 4], 1.0);
        acc.push(&[0, 0, 0, 0], &[0.0; 4], 1.0);
        let s = acc.finalize(AcceptanceStats::default(), WarningCounters::default()).unwrap();
        for i in 0..4 {
            assert_eq!(s.coclustering[i][i], 1.0);
            for j in 0..4 {
                assert_eq!(s.coclustering[i][j], s.coclustering[j][i]);
                assert!((0.0..=1.0).contains(&s.coclustering[i][j]));
            }
        }
    }

    #[test]
    fn relabeled_draws_give_identical_summaries() {
        let mut a = SummaryAccumulator::new(3, 3);
        let mut b = SummaryAccumulator::new(3, 3);
        a.push(&[0, 1, 0], &[0.0; 3], 1.0);
        b.push(&[2, 0, 2], &[0.0; 3], 1.0); // same partition, different labels
        let sa = a.finalize(AcceptanceStats::default(), WarningCounters::default()).unwrap();
        let sb = b.finalize(AcceptanceStats::default(), WarningCounters::default()).unwrap();
        assert_eq!(sa.kplus_pmf, sb.kplus_pmf);
        assert_eq!(sa.coclustering, sb.coclustering);
        assert_eq!(sa.point_partition, sb.point_partition);
    }
}
