//! Clustering evaluation metrics: pwss, co-clustering error, U-adjusted MSE,
//! co-clustering purity, adjusted Rand index, and the Binder-loss point
//! partition shared by the samplers.

use crate::error::{Error, Result};

/// A partition of n units, canonicalized so labels are 1..=K+ in order of
/// first appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<usize>,
    n_clusters: usize,
}

impl Partition {
    /// Canonicalize arbitrary labels by order of first appearance.
    pub fn new(raw: &[usize]) -> Self {
        let mut mapping: Vec<(usize, usize)> = Vec::new();
        let mut labels = Vec::with_capacity(raw.len());
        for &r in raw {
            let canon = match mapping.iter().find(|(orig, _)| *orig == r) {
                Some((_, c)) => *c,
                None => {
                    let c = mapping.len() + 1;
                    mapping.push((r, c));
                    c
                }
            };
            labels.push(canon);
        }
        Self {
            labels,
            n_clusters: mapping.len(),
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of clusters K+.
    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn same_cluster(&self, i: usize, j: usize) -> bool {
        self.labels[i] == self.labels[j]
    }

    /// Cluster sizes indexed by label-1.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.n_clusters];
        for &l in &self.labels {
            sizes[l - 1] += 1;
        }
        sizes
    }
}

/// Posterior-probability-weighted squared error of K+ around the truth:
/// sum_k (k - kplus_true)^2 Pr(K+ = k | y).
pub fn pwss(kplus_pmf: &[f64], kplus_true: usize) -> Result<f64> {
    if kplus_true < 1 || kplus_true > kplus_pmf.len() {
        return Err(Error::domain(format!(
            "kplus_true = {kplus_true} outside the pmf support 1..={}",
            kplus_pmf.len()
        )));
    }
    let total: f64 = kplus_pmf.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::domain(format!("pmf sums to {total}, expected 1")));
    }
    Ok(kplus_pmf
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let k = (i + 1) as f64;
            let d = k - kplus_true as f64;
            d * d * p
        })
        .sum())
}

/// Sum over unordered pairs of squared deviations between the co-clustering
/// indicator of `truth` and the posterior co-clustering probabilities.
pub fn ccprob_error(coclustering: &[Vec<f64>], truth: &Partition) -> Result<f64> {
    let n = truth.len();
    validate_coclustering(coclustering, n)?;
    let mut total = 0.0;
    for j in 0..n {
        for l in 0..j {
            let ind = if truth.same_cluster(j, l) { 1.0 } else { 0.0 };
            let d = ind - coclustering[j][l];
            total += d * d;
        }
    }
    Ok(total)
}

/// U-adjusted mean squared error: sum of squared residuals over n(K - U).
pub fn u_adjusted_mse(y: &[f64], y_hat: &[f64], k: usize, u: usize) -> Result<f64> {
    if y.len() != y_hat.len() {
        return Err(Error::domain("y and y_hat must have equal length".to_string()));
    }
    if k <= u {
        return Err(Error::domain(format!("requires K > U, got K={k}, U={u}")));
    }
    let ss: f64 = y
        .iter()
        .zip(y_hat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(ss / (y.len() as f64 * (k - u) as f64))
}

/// Mean over units of the standard deviation of their co-clustering
/// probabilities with all other units. Population (divide-by-count) standard
/// deviation; the diagonal self-pair is excluded.
pub fn sd_ccp(coclustering: &[Vec<f64>]) -> Result<f64> {
    let n = coclustering.len();
    validate_coclustering(coclustering, n)?;
    if n < 2 {
        return Err(Error::domain("sd_ccp needs at least two units".to_string()));
    }
    let mut total = 0.0;
    let m = (n - 1) as f64;
    for i in 0..n {
        let mut s = 0.0;
        for l in 0..n {
            if l != i {
                s += coclustering[i][l];
            }
        }
        let mean = s / m;
        let mut var = 0.0;
        for l in 0..n {
            if l != i {
                let d = coclustering[i][l] - mean;
                var += d * d;
            }
        }
        total += (var / m).sqrt();
    }
    Ok(total / n as f64)
}

/// Hubert-Arabie adjusted Rand index between two partitions.
pub fn ari(a: &Partition, b: &Partition) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::domain("partitions must have equal length".to_string()));
    }
    let n = a.len();
    if n == 0 {
        return Err(Error::domain("partitions must be non-empty".to_string()));
    }
    let ka = a.n_clusters();
    let kb = b.n_clusters();
    let mut contingency = vec![vec![0u64; kb]; ka];
    for i in 0..n {
        contingency[a.labels[i] - 1][b.labels[i] - 1] += 1;
    }
    let choose2 = |x: u64| (x * x.saturating_sub(1) / 2) as f64;
    let sum_ij: f64 = contingency
        .iter()
        .flat_map(|row| row.iter())
        .map(|&c| choose2(c))
        .sum();
    let sum_a: f64 = a.cluster_sizes().iter().map(|&c| choose2(c as u64)).sum();
    let sum_b: f64 = b.cluster_sizes().iter().map(|&c| choose2(c as u64)).sum();
    let total_pairs = choose2(n as u64);
    let expected = sum_a * sum_b / total_pairs;
    let maximum = 0.5 * (sum_a + sum_b);
    if (maximum - expected).abs() < 1e-15 {
        // both partitions degenerate (all-singletons or one block): identical
        // partitions score 1 by convention
        return Ok(if a.labels == b.labels { 1.0 } else { 0.0 });
    }
    Ok((sum_ij - expected) / (maximum - expected))
}

/// The retained draw minimizing the Binder loss against the co-clustering
/// matrix: sum_{j<l} (I[j~l] - c_{jl})^2. Ties break toward the earliest draw.
pub fn binder_point_partition(
    partition_draws: &[Partition],
    coclustering: &[Vec<f64>],
) -> Result<Partition> {
    let first = partition_draws
        .first()
        .ok_or_else(|| Error::domain("need at least one partition draw".to_string()))?;
    let n = first.len();
    validate_coclustering(coclustering, n)?;
    let mut best: Option<(f64, &Partition)> = None;
    for draw in partition_draws {
        let mut loss = 0.0;
        for j in 0..n {
            for l in 0..j {
                let ind = if draw.same_cluster(j, l) { 1.0 } else { 0.0 };
                let d = ind - coclustering[j][l];
                loss += d * d;
            }
        }
        match best {
            Some((b, _)) if loss >= b => {}
            _ => best = Some((loss, draw)),
        }
    }
    Ok(best.expect("non-empty draws").1.clone())
}

/// Bias of the posterior mode of K+: mode - kplus_true.
pub fn mode_bias(kplus_pmf: &[f64], kplus_true: usize) -> i64 {
    let mut mode = 0usize;
    for (i, &p) in kplus_pmf.iter().enumerate() {
        if p > kplus_pmf[mode] {
            mode = i;
        }
    }
    (mode + 1) as i64 - kplus_true as i64
}

/// Bundle of metrics for a fitted run compared against a known truth.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MetricsReport {
    pub pwss: Option<f64>,
    pub ccprob_error: Option<f64>,
    pub mode_bias: Option<i64>,
    pub mse: Option<f64>,
    pub sd_ccp: Option<f64>,
    pub ari: Option<f64>,
}

fn validate_coclustering(coclustering: &[Vec<f64>], n: usize) -> Result<()> {
    if coclustering.len() != n {
        return Err(Error::domain(format!(
            "co-clustering matrix has {} rows, expected {n}",
            coclustering.len()
        )));
    }
    for (i, row) in coclustering.iter().enumerate() {
        if row.len() != n {
            return Err(Error::domain("co-clustering matrix must be square".to_string()));
        }
        if (row[i] - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!(
                "co-clustering diagonal must be 1, got {} at {i}",
                row[i]
            )));
        }
        for (j, &p) in row.iter().enumerate() {
            if !(0.0..=1.0 + 1e-9).contains(&p) {
                return Err(Error::domain(format!(
                    "co-clustering probability out of [0,1] at ({i},{j}): {p}"
                )));
            }
            if (p - coclustering[j][i]).abs() > 1e-9 {
                return Err(Error::domain(format!(
                    "co-clustering matrix must be symmetric; mismatch at ({i},{j})"
                )));
            }
        }
    }
    Ok(())
}
