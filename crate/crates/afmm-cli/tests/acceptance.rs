//! Acceptance suite: one test per shipping criterion, each printing a
//! PASS line with the measured quantities and runtime. Run with
//! `cargo test -p afmm-cli --test acceptance -- --nocapture` to see them.

use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use afmm::asym::AsymDirichletParams;
use afmm::induced::{induced_kplus_prior, WeightPriorFamily};
use afmm::metrics;
use afmm::numeric::{adaptive_simpson, ks_pvalue, ks_statistic};
use afmm::pc::{asym_dirichlet_kld, calibrate_lambda, CalibrationConfig, PcPriorSpec};
use afmm::rng::RngStream;
use afmm::univariate::{
    run_chain, ChainProtocol, SamplerDriver, UnivariateChainState, UnivariateModelConfig,
    WeightPrior,
};

fn afmm_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_afmm"))
}

fn galaxy_csv() -> PathBuf {
    match std::env::var_os("GALAXY_CSV") {
        Some(p) => PathBuf::from(p),
        None => PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/galaxy.csv"),
    }
}

fn budget(name: &str, started: Instant, limit_s: f64) {
    let elapsed = started.elapsed().as_secs_f64();
    assert!(
        elapsed < limit_s,
        "{name} exceeded its runtime budget: {elapsed:.1}s > {limit_s}s"
    );
}

#[test]
fn criterion_01_point_mass_at_u_in_the_limit_regime() {
    let t0 = Instant::now();
    let family =
        WeightPriorFamily::AsymFixed(AsymDirichletParams::new(30, 10, 100.0, 1e-5).unwrap());
    let rng = RngStream::new(1001, 0);
    let result = induced_kplus_prior(&family, 100, 100_000, &rng).unwrap();
    let p10 = result.prob(10);
    assert!(p10 > 0.95, "Pr(K+=10) = {p10}");
    budget("criterion 1", t0, 30.0);
    println!(
        "ACCEPTANCE 1 PASS: Pr(K+=10) = {p10:.4} > 0.95 under alpha1=100, alpha2=1e-5 ({:.1}s)",
        t0.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_02_spike_at_u_for_moderate_concentrations() {
    let t0 = Instant::now();
    let family =
        WeightPriorFamily::AsymFixed(AsymDirichletParams::new(30, 10, 10.0, 0.001).unwrap());
    let rng = RngStream::new(1002, 0);
    let result = induced_kplus_prior(&family, 100, 100_000, &rng).unwrap();
    assert_eq!(result.mode(), 10, "mode {}", result.mode());
    let p10 = result.prob(10);
    assert!(p10 > 0.5, "Pr(K+=10) = {p10}");
    println!(
        "ACCEPTANCE 2 PASS: induced prior mode = 10 with Pr(K+=10) = {p10:.4} ({:.1}s)",
        t0.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_03_kld_equivalence() {
    let t0 = Instant::now();
    // independent special functions (statrs) drive the generic formula
    use statrs::function::gamma::{digamma, ln_gamma};
    let generic = |a: &[f64], b: &[f64]| -> f64 {
        let sa: f64 = a.iter().sum();
        let sb: f64 = b.iter().sum();
        let mut v = ln_gamma(sa) - ln_gamma(sb);
        for (&ai, &bi) in a.iter().zip(b) {
            v += ln_gamma(bi) - ln_gamma(ai) + (ai - bi) * (digamma(ai) - digamma(sa));
        }
        v
    };
    let mut rng = RngStream::new(1003, 0);
    let mut max_rel = 0.0f64;
    for _ in 0..100 {
        let u = 1 + (rng.uniform() * 14.0) as usize;
        let k = u + 1 + (rng.uniform() * 20.0) as usize;
        let a1 = 10f64.powf(-3.0 + 5.0 * rng.uniform());
        let a2 = 10f64.powf(-5.0 + 5.0 * rng.uniform());
        let b1 = 10f64.powf(-2.0 + 4.0 * rng.uniform());
        let b2 = 10f64.powf(-5.0 + 3.0 * rng.uniform());
        let got = asym_dirichlet_kld(a1, a2, b1, b2, u, k).unwrap();
        let mut av = vec![a1; u];
        av.resize(k, a2);
        let mut bv = vec![b1; u];
        bv.resize(k, b2);
        let want = generic(&av, &bv);
        let rel = (got - want).abs() / want.abs().max(1e-6);
        max_rel = max_rel.max(rel);
        assert!(rel <= 1e-9, "relative error {rel} at U={u} K={k}");
    }
    // Monte Carlo KLD oracle on five settings
    for (u, k, a1, a2, b1, b2) in [
        (2usize, 5usize, 1.0, 0.5, 2.0, 0.5),
        (3, 10, 2.0, 0.1, 3.0, 0.05),
        (5, 12, 0.8, 0.3, 5.0, 0.3),
        (4, 8, 3.0, 1.0, 4.0, 0.5),
        (2, 6, 0.5, 0.2, 2.0, 0.1),
    ] {
        let p = AsymDirichletParams::new(k, u, a1, a2).unwrap();
        let g = AsymDirichletParams::new(k, u, b1, b2).unwrap();
        let want = asym_dirichlet_kld(a1, a2, b1, b2, u, k).unwrap();
        let n = 1_000_000usize;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..n {
            let lw = afmm::asym::sample(&mut rng, &p).unwrap();
            let diff = afmm::asym::log_density(&p, &lw).unwrap()
                - afmm::asym::log_density(&g, &lw).unwrap();
            sum += diff;
            sum_sq += diff * diff;
        }
        let mean = sum / n as f64;
        let se = ((sum_sq / n as f64 - mean * mean).max(0.0) / n as f64).sqrt();
        assert!(
            (mean - want).abs() <= 4.0 * se,
            "MC check failed at U={u} K={k}: {mean} +- {se} vs {want}"
        );
    }
    budget("criterion 3", t0, 60.0);
    println!(
        "ACCEPTANCE 3 PASS: blocked KLD matches the generic Dirichlet-KL formula \
         (max rel err {max_rel:.2e} over 100 settings) and Monte Carlo on 5 settings ({:.1}s)",
        t0.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_04_pc_density_correctness() {
    let t0 = Instant::now();
    // work at the tp=0.1-calibrated decay rate for U=5, K=25, n=100
    let cfg = CalibrationConfig::new(5, 25, 100, 0.1);
    let cal = calibrate_lambda(&cfg, &RngStream::new(1004, 0)).unwrap();
    let spec = PcPriorSpec::new(5, 25, cal.lambda_star).unwrap();

    // (a) normalized density integrates to 1 over (1e-8, U]
    let m = 200_001usize;
    let lo = spec.alpha1_floor().ln();
    let hi = 5f64.ln();
    let h = (hi - lo) / (m - 1) as f64;
    let mut integral = 0.0;
    for i in 0..m {
        let a = (lo + h * i as f64).exp().clamp(spec.alpha1_floor(), 5.0);
        let v = spec.log_pc_density(a).unwrap().exp() * a;
        let w = if i == 0 || i == m - 1 { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        integral += w * v;
    }
    integral *= h / 3.0;
    assert!((integral - 1.0).abs() <= 1e-6, "density integral {integral}");

    // (b) sampler-vs-density total variation on a 200-bin grid at N = 1e5
    let mut rng = RngStream::new(1005, 0);
    let n = 100_000usize;
    let bins = 200usize;
    let width = 5.0 / bins as f64;
    let mut hist = vec![0usize; bins];
    let mut dvals = Vec::with_capacity(n);
    for _ in 0..n {
        let a = spec.sample_alpha1(&mut rng);
        hist[((a / width) as usize).min(bins - 1)] += 1;
        dvals.push(spec.distance(a).unwrap());
    }
    let mut tv = 0.0;
    for (b, &count) in hist.iter().enumerate() {
        let blo = (b as f64 * width).max(spec.alpha1_floor());
        let bhi = ((b + 1) as f64 * width).min(5.0);
        let p = adaptive_simpson(&|a| spec.log_pc_density(a).unwrap().exp(), blo, bhi, 1e-9);
        tv += (count as f64 / n as f64 - p).abs();
    }
    tv *= 0.5;
    assert!(tv < 0.02, "sampler-vs-density TV = {tv}");

    // (c) push-forward distances are Exp(lambda)
    dvals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lambda = spec.lambda();
    let d = ks_statistic(&dvals, &|x| 1.0 - (-lambda * x).exp());
    let p = ks_pvalue(d, n);
    assert!(p >= 0.01, "KS test rejects Exp(lambda): D = {d}, p = {p}");
    println!(
        "ACCEPTANCE 4 PASS: integral = {integral:.8}, TV = {tv:.4}, KS p = {p:.3} \
         at lambda* = {lambda:.4} ({:.1}s)",
        t0.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_05_calibration_accuracy_grid() {
    let t0 = Instant::now();
    let mut lines = Vec::new();
    for &u in &[2usize, 5, 10] {
        for &tp in &[0.1, 0.5, 0.9] {
            let cfg = CalibrationConfig::new(u, 25, 100, tp);
            let cal = calibrate_lambda(&cfg, &RngStream::new(1006, 0)).unwrap();
            // independent validation seed
            let spec = PcPriorSpec::new(u, 25, cal.lambda_star).unwrap();
            let fam = WeightPriorFamily::AsymPc(spec);
            let check =
                induced_kplus_prior(&fam, 100, 50_000, &RngStream::new(987_654, 0)).unwrap();
            let tail = check.tail_below(u);
            assert!(
                (tail - tp).abs() <= 0.02,
                "U={u} tp={tp}: validated tail {tail} (lambda* {})",
                cal.lambda_star
            );
            if (tp - 0.1).abs() < 1e-12 {
                assert_eq!(check.mode(), u, "U={u} tp=0.1: induced mode {}", check.mode());
            }
            lines.push(format!("U={u} tp={tp}: tail {tail:.3} mode {}", check.mode()));
        }
    }
    budget("criterion 5", t0, 300.0);
    println!(
        "ACCEPTANCE 5 PASS: {} ({:.1}s)",
        lines.join("; "),
        t0.elapsed().as_secs_f64()
    );
}

// exact allocation posterior for the 4-observation instance: Dirichlet-
// multinomial prior times per-block marginal likelihoods with sigma^2
// integrated out by panelized quadrature
mod enumeration {
    use super::*;

    pub const MU0: f64 = 0.0;
    pub const SIGMA0_SQ: f64 = 4.0;
    pub const A0: f64 = 3.0;
    pub const B0: f64 = 2.0;

    fn integrate_panels(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
        let panels = 64;
        let h = (hi - lo) / panels as f64;
        (0..panels)
            .map(|i| adaptive_simpson(f, lo + i as f64 * h, lo + (i + 1) as f64 * h, 1e-15))
            .sum()
    }

    fn block_marginal(y: &[f64]) -> f64 {
        if y.is_empty() {
            return 1.0;
        }
        let s = y.len() as f64;
        let mean = y.iter().sum::<f64>() / s;
        let css: f64 = y.iter().map(|v| (v - MU0) * (v - MU0)).sum();
        let loglik = |v: f64| {
            let det = v.powf(s - 1.0) * (v + s * SIGMA0_SQ);
            let quad =
                (css - SIGMA0_SQ * s * s * (mean - MU0) * (mean - MU0) / (v + s * SIGMA0_SQ)) / v;
            -0.5 * s * (2.0 * std::f64::consts::PI).ln() - 0.5 * det.ln() - 0.5 * quad
        };
        let ig = |v: f64| {
            A0 * B0.ln() - afmm::special::log_gamma(A0).unwrap() - (A0 + 1.0) * v.ln() - B0 / v
        };
        integrate_panels(
            &|t: f64| {
                let v = t.exp();
                (loglik(v) + ig(v)).exp() * v
            },
            (1e-8f64).ln(),
            (1e6f64).ln(),
        )
    }

    pub fn posterior(y: &[f64], shapes: &[f64]) -> Vec<f64> {
        let n = y.len();
        let k = shapes.len();
        let lg = |x: f64| afmm::special::log_gamma(x).unwrap();
        let total: f64 = shapes.iter().sum();
        let mut log_post = Vec::new();
        for code in 0..k.pow(n as u32) {
            let mut z = vec![0usize; n];
            let mut c = code;
            for zi in z.iter_mut() {
                *zi = c % k;
                c /= k;
            }
            let mut counts = vec![0usize; k];
            for &zi in &z {
                counts[zi] += 1;
            }
            let mut lp = lg(total) - lg(total + n as f64);
            for (&cnt, &a) in counts.iter().zip(shapes) {
                lp += lg(a + cnt as f64) - lg(a);
            }
            for comp in 0..k {
                let block: Vec<f64> = y
                    .iter()
                    .zip(&z)
                    .filter(|(_, &zi)| zi == comp)
                    .map(|(&v, _)| v)
                    .collect();
                lp += block_marginal(&block).ln();
            }
            log_post.push(lp);
        }
        let max = log_post.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut post: Vec<f64> = log_post.iter().map(|lp| (lp - max).exp()).collect();
        let total: f64 = post.iter().sum();
        post.iter_mut().for_each(|p| *p /= total);
        post
    }
}

#[test]
fn criterion_06_gibbs_matches_bruteforce_enumeration() {
    let t0 = Instant::now();
    let y = vec![-1.5, -1.2, 1.0, 1.3];
    let oracle = enumeration::posterior(&y, &[1.0, 1.0]);
    let mut config = UnivariateModelConfig::new(2, 2, WeightPrior::AsymFixed { alpha1: 1.0 });
    config.mu0 = Some(enumeration::MU0);
    config.sigma0_sq = enumeration::SIGMA0_SQ;
    config.a0 = enumeration::A0;
    config.b0 = enumeration::B0;
    config.block_swap = false;
    let mut driver = SamplerDriver::new(&config, None).unwrap();
    let mut state = UnivariateChainState::init(&y, &config);
    let mut rng = RngStream::new(1007, 0);
    let burn = 2_000;
    let sweeps = 100_000;
    let mut counts = vec![0u64; 16];
    for it in 0..burn + sweeps {
        if it == burn {
            driver.freeze();
        }
        driver.gibbs_step(&mut state, &y, &mut rng);
        if it >= burn {
            let code = state.z.iter().rev().fold(0usize, |acc, &zi| acc * 2 + zi);
            counts[code] += 1;
        }
    }
    let tv: f64 = counts
        .iter()
        .zip(&oracle)
        .map(|(&c, &p)| (c as f64 / sweeps as f64 - p).abs())
        .sum::<f64>()
        / 2.0;
    assert!(tv <= 0.02, "TV between Gibbs and enumeration: {tv}");
    println!(
        "ACCEPTANCE 6 PASS: allocation posterior TV = {tv:.4} over 16 allocations, \
         100k sweeps ({:.1}s)",
        t0.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_07_scaled_simulation_study() {
    let t0 = Instant::now();
    let mut summary_lines = Vec::new();
    for &kplus_true in &[2usize, 5] {
        let u = kplus_true;
        let k = 25;
        let cal_cfg = CalibrationConfig::new(u, k, 100, 0.1);
        let cal = calibrate_lambda(&cal_cfg, &RngStream::new(1008, 0)).unwrap();
        let spec = PcPriorSpec::new(u, k, cal.lambda_star).unwrap();
        let mut correct = 0;
        let mut pwss_values = Vec::new();
        for rep in 0..10u64 {
            let data_spec = afmm::datagen::DataType1Spec::new(kplus_true, 100);
            let mut data_rng = RngStream::new(1009, 10 * kplus_true as u64 + rep);
            let (y, _) = afmm::datagen::gen_type1(&data_spec, &mut data_rng).unwrap();
            let config = UnivariateModelConfig::new(u, k, WeightPrior::AsymPc);
            let mut chain_rng = RngStream::new(1010, 10 * kplus_true as u64 + rep);
            let summary = run_chain(
                &y,
                &config,
                Some(&spec),
                ChainProtocol { iters: 15_000, burn: 10_000, thin: 5 },
                &mut chain_rng,
            )
            .unwrap();
            if summary.kplus_mode() == kplus_true {
                correct += 1;
            }
            pwss_values.push(metrics::pwss(&summary.kplus_pmf, kplus_true).unwrap());
        }
        pwss_values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median_pwss = 0.5 * (pwss_values[4] + pwss_values[5]);
        assert!(
            correct >= 8,
            "K+ true {kplus_true}: only {correct}/10 replicates recovered the mode"
        );
        assert!(
            median_pwss < 1.0,
            "K+ true {kplus_true}: median pwss {median_pwss}"
        );
        summary_lines.push(format!(
            "K+={kplus_true}: {correct}/10 modes correct, median pwss {median_pwss:.3}"
        ));
    }
    budget("criterion 7", t0, 1800.0);
    println!(
        "ACCEPTANCE 7 PASS: {} ({:.1}s)",
        summary_lines.join("; "),
        t0.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_08_galaxy_six_clusters() {
    let t0 = Instant::now();
    let galaxy = galaxy_csv();
    assert!(
        galaxy.exists(),
        "galaxy data not found at {} (set GALAXY_CSV to override)",
        galaxy.display()
    );
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("galaxy");
    let status = afmm_bin()
        .args(["fit", "--data"])
        .arg(&galaxy)
        .args([
            "--u", "6", "--tp", "0.1", "--k", "25", "--iters", "30000", "--burn", "10000",
            "--thin", "20", "--seed", "42", "--out-dir",
        ])
        .arg(&run)
        .status()
        .unwrap();
    assert!(status.success());
    let (_, partition) = afmm::runio::read_partition_csv(&run.join("partition.csv")).unwrap();
    assert_eq!(
        partition.n_clusters(),
        6,
        "Binder point partition has {} clusters",
        partition.n_clusters()
    );
    let (_, cc) = afmm::runio::read_coclustering_csv(&run.join("coclustering.csv")).unwrap();
    // the three well-separated outer velocity groups: 7 low, 2 near 16, 3 high
    let y = afmm::runio::read_univariate_csv(&galaxy).unwrap();
    let low: Vec<usize> = (0..y.len()).filter(|&i| y[i] < 11.0).collect();
    let mid: Vec<usize> = (0..y.len()).filter(|&i| (16.0..17.0).contains(&y[i])).collect();
    let high: Vec<usize> = (0..y.len()).filter(|&i| y[i] > 31.0).collect();
    assert_eq!((low.len(), mid.len(), high.len()), (7, 2, 3));
    let mut min_within = 1.0f64;
    for group in [&low, &mid, &high] {
        for (a, &i) in group.iter().enumerate() {
            for &j in group.iter().skip(a + 1) {
                min_within = min_within.min(cc[i][j]);
            }
        }
    }
    assert!(
        min_within > 0.9,
        "outer-group co-clustering dropped to {min_within}"
    );
    budget("criterion 8", t0, 600.0);
    println!(
        "ACCEPTANCE 8 PASS: galaxy U=6 gives a 6-cluster point partition; \
         outer-group co-clustering >= {min_within:.3} ({:.1}s)",
        t0.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_09_functional_recovery_and_soft_bound() {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();

    // 3 templates, U=5: recover exactly 3 clusters with ARI > 0.9
    let sim3 = dir.path().join("sim3");
    afmm_bin()
        .args([
            "simulate", "--kind", "functional", "--kplus", "3", "--n", "60", "--points", "50",
            "--seed", "1021", "--out-dir",
        ])
        .arg(&sim3)
        .status()
        .unwrap();
    let run3 = dir.path().join("run3");
    let status = afmm_bin()
        .args(["fit-functional", "--data"])
        .arg(sim3.join("data.csv"))
        .args([
            "--u", "5", "--tp", "0.1", "--k", "25", "--iters", "20000", "--burn", "8000",
            "--thin", "12", "--seed", "1022", "--calib-reps", "10000", "--out-dir",
        ])
        .arg(&run3)
        .status()
        .unwrap();
    assert!(status.success());
    let pmf = afmm::runio::read_kplus_csv(&run3.join("kplus_posterior.csv")).unwrap();
    let mode3 = pmf
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i + 1)
        .unwrap();
    assert_eq!(mode3, 3, "posterior mode K+ = {mode3}");
    let (_, point) = afmm::runio::read_partition_csv(&run3.join("partition.csv")).unwrap();
    let (_, truth) = afmm::runio::read_truth_csv(&sim3.join("truth.csv")).unwrap();
    let ari = metrics::ari(&point, &truth).unwrap();
    assert!(ari > 0.9, "ARI = {ari}");

    // 6 templates squeezed under U=3: the bound is soft, the mode exceeds it
    let sim6 = dir.path().join("sim6");
    afmm_bin()
        .args([
            "simulate", "--kind", "functional", "--kplus", "6", "--n", "60", "--points", "50",
            "--seed", "1023", "--out-dir",
        ])
        .arg(&sim6)
        .status()
        .unwrap();
    let run6 = dir.path().join("run6");
    let status = afmm_bin()
        .args(["fit-functional", "--data"])
        .arg(sim6.join("data.csv"))
        .args([
            "--u", "3", "--tp", "0.1", "--k", "25", "--iters", "20000", "--burn", "8000",
            "--thin", "12", "--seed", "1024", "--calib-reps", "10000", "--out-dir",
        ])
        .arg(&run6)
        .status()
        .unwrap();
    assert!(status.success());
    let pmf6 = afmm::runio::read_kplus_csv(&run6.join("kplus_posterior.csv")).unwrap();
    let mode6 = pmf6
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i + 1)
        .unwrap();
    assert!(mode6 > 3, "soft bound not exceeded: mode K+ = {mode6}");
    budget("criterion 9", t0, 1200.0);
    println!(
        "ACCEPTANCE 9 PASS: 3-template ARI = {ari:.3} with mode K+ = 3 at U=5; \
         6-template mode K+ = {mode6} > U=3 ({:.1}s)",
        t0.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_10_metric_identities() {
    let t0 = Instant::now();
    // pwss mean-variance decomposition to 1e-12
    let pmf = vec![0.05, 0.15, 0.4, 0.25, 0.15];
    for truth in 1..=5usize {
        let v = metrics::pwss(&pmf, truth).unwrap();
        let mean: f64 = pmf.iter().enumerate().map(|(i, p)| (i + 1) as f64 * p).sum();
        let var: f64 = pmf
            .iter()
            .enumerate()
            .map(|(i, p)| ((i + 1) as f64 - mean).powi(2) * p)
            .sum();
        assert!((v - ((mean - truth as f64).powi(2) + var)).abs() <= 1e-12);
    }
    // ARI hand instance
    let a = metrics::Partition::new(&[1, 1, 2]);
    let b = metrics::Partition::new(&[1, 2, 2]);
    assert!((metrics::ari(&a, &b).unwrap() + 0.5).abs() < 1e-15);
    // U-adjusted mse hand instances
    let y = vec![1.0; 10];
    let yh = vec![0.0; 10];
    assert!((metrics::u_adjusted_mse(&y, &yh, 25, 5).unwrap() - 0.05).abs() < 1e-15);
    let r7 = metrics::u_adjusted_mse(&y, &yh, 25, 7).unwrap();
    let r6 = metrics::u_adjusted_mse(&y, &yh, 25, 6).unwrap();
    assert!((r7 / r6 - 19.0 / 18.0).abs() < 1e-12);
    // sd_ccp hand instance: constant off-diagonal is zero, pure blocks beat blends
    let n = 4;
    let mut flat = vec![vec![0.3; n]; n];
    for (i, row) in flat.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    assert!(metrics::sd_ccp(&flat).unwrap().abs() < 1e-12);
    println!(
        "ACCEPTANCE 10 PASS: pwss decomposition, ARI = -0.5 hand case, mse and sd_ccp \
         identities ({:.2}s)",
        t0.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_11_byte_identical_reruns() {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();

    // representative pipeline: simulate, calibrated fit, induced prior
    let run_all = |tag: &str| -> PathBuf {
        let base = dir.path().join(tag);
        let sim = base.join("sim");
        afmm_bin()
            .args(["simulate", "--kind", "type2", "--u", "3", "--n", "80", "--seed", "51", "--out-dir"])
            .arg(&sim)
            .status()
            .unwrap();
        let run = base.join("run");
        afmm_bin()
            .args(["fit", "--data"])
            .arg(sim.join("data.csv"))
            .args([
                "--u", "3", "--k", "15", "--iters", "2000", "--burn", "500", "--thin", "3",
                "--seed", "52", "--calib-reps", "4000", "--out-dir",
            ])
            .arg(&run)
            .status()
            .unwrap();
        afmm_bin()
            .args([
                "induced-prior", "--family", "asym-pc", "--k", "15", "--u", "3", "--n", "80",
                "--lambda", "0.7", "--reps", "20000", "--seed", "53", "--out",
            ])
            .arg(base.join("prior.csv"))
            .status()
            .unwrap();
        base
    };
    let a = run_all("a");
    let b = run_all("b");
    let files = [
        "sim/data.csv",
        "sim/truth.csv",
        "run/kplus_posterior.csv",
        "run/coclustering.csv",
        "run/partition.csv",
        "run/fitted.csv",
        "run/alpha1_trace.csv",
        "run/acceptance.json",
        "prior.csv",
    ];
    for file in files {
        let xa = std::fs::read(a.join(file)).unwrap();
        let xb = std::fs::read(b.join(file)).unwrap();
        assert_eq!(xa, xb, "{file} is not byte-identical across reruns");
    }
    // manifests match after dropping wall-clock timestamps and the command
    // line (which embeds the caller's own paths)
    for file in ["sim/manifest.json", "run/manifest.json"] {
        let strip = |p: &PathBuf| -> serde_json::Value {
            let mut v: serde_json::Value =
                serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
            let obj = v.as_object_mut().unwrap();
            obj.remove("started_at_unix_ms");
            obj.remove("finished_at_unix_ms");
            obj.remove("command");
            v
        };
        assert_eq!(strip(&a.join(file)), strip(&b.join(file)), "{file} differs");
    }
    println!(
        "ACCEPTANCE 11 PASS: simulate/fit/induced-prior reruns are byte-identical \
         ({:.1}s)",
        t0.elapsed().as_secs_f64()
    );
}
