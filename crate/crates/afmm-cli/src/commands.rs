//! Subcommand implementations.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};

use afmm::asym::AsymDirichletParams;
use afmm::datagen;
use afmm::functional::{fit_functional as fit_functional_model, FunctionalModelConfig, TauPriorScale};
use afmm::induced::{induced_kplus_prior, WeightPriorFamily};
use afmm::metrics::{self, MetricsReport, Partition};
use afmm::pc::{calibrate_lambda, CalibrationConfig, PcPriorSpec};
use afmm::runio::{self, RunManifest};
use afmm::summary::PosteriorSummary;
use afmm::univariate::{run_chain, ChainProtocol, UnivariateModelConfig, WeightPrior};
use afmm::{Error, Result, RngStream};

use crate::config::ConfigFile;

// substream layout under the root stream of a run
const STREAM_CHAIN: u64 = 1;
const STREAM_CALIBRATE: u64 = 2;
const STREAM_SIMULATE: u64 = 3;
const STREAM_INDUCED: u64 = 4;

fn root_rng(seed: u64) -> RngStream {
    RngStream::new(seed, 0)
}

fn ids_1_to_n(n: usize) -> Vec<String> {
    (1..=n).map(|i| i.to_string()).collect()
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    /// Asymmetric Dirichlet, both concentrations fixed.
    Asym,
    /// Asymmetric Dirichlet with alpha1 under the PC prior.
    AsymPc,
    /// Symmetric Dirichlet with fixed concentration (taken from --alpha2).
    Sym,
    /// Symmetric Dirichlet with alpha ~ Gamma(10, 10K).
    SymGamma,
    /// Dirichlet process (concentration from --alpha1).
    Dpm,
    /// K ~ Uniform{1..K} then symmetric Dirichlet (alpha from --alpha2).
    MfmmUnifk,
}

#[derive(Args)]
pub struct InducedPriorArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    #[arg(long, default_value_t = 25)]
    pub k: usize,
    #[arg(long)]
    pub u: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long)]
    pub alpha1: Option<f64>,
    #[arg(long)]
    pub alpha2: Option<f64>,
    /// PC decay rate; mutually exclusive with --tp.
    #[arg(long, conflicts_with = "tp")]
    pub lambda: Option<f64>,
    /// Calibrate lambda to this tail probability first.
    #[arg(long)]
    pub tp: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "prior.csv")]
    pub out: PathBuf,
}

pub fn induced_prior(args: InducedPriorArgs) -> Result<()> {
    let rng = root_rng(args.seed);
    let alpha2 = args.alpha2.unwrap_or(1e-5);
    let family = match args.family {
        FamilyArg::Asym => {
            let u = require(args.u, "--u")?;
            let alpha1 = require(args.alpha1, "--alpha1")?;
            WeightPriorFamily::AsymFixed(AsymDirichletParams::new(args.k, u, alpha1, alpha2)?)
        }
        FamilyArg::AsymPc => {
            let u = require(args.u, "--u")?;
            let lambda = match (args.lambda, args.tp) {
                (Some(l), _) => l,
                (None, Some(tp)) => {
                    let cfg = CalibrationConfig {
                        alpha2_fixed: alpha2,
                        ..CalibrationConfig::new(u, args.k, args.n, tp)
                    };
                    let result = calibrate_lambda(&cfg, &rng.substream(STREAM_CALIBRATE))?;
                    eprintln!(
                        "calibrated lambda = {} (tail {})",
                        result.lambda_star, result.achieved_tail
                    );
                    result.lambda_star
                }
                (None, None) => return Err(Error::invalid("asym-pc needs --lambda or --tp".to_string())),
            };
            WeightPriorFamily::AsymPc(PcPriorSpec::with_alpha2(u, args.k, alpha2, lambda)?)
        }
        FamilyArg::Sym => WeightPriorFamily::SymStatic {
            k: args.k,
            alpha: require(args.alpha2, "--alpha2")?,
        },
        FamilyArg::SymGamma => WeightPriorFamily::SymGamma {
            k: args.k,
            gamma: afmm::dist::GammaParams::new(10.0, 10.0 * args.k as f64)?,
        },
        FamilyArg::Dpm => WeightPriorFamily::Dpm {
            concentration: require(args.alpha1, "--alpha1")?,
        },
        FamilyArg::MfmmUnifk => WeightPriorFamily::MfmmUniformK {
            k_max: if args.k == 25 { 20 } else { args.k },
            alpha: require(args.alpha2, "--alpha2")?,
        },
    };
    let result = induced_kplus_prior(&family, args.n, args.reps, &rng.substream(STREAM_INDUCED))?;
    runio::write_prior_csv(&args.out, &result)?;
    write_sibling_manifest(
        &args.out,
        "induced-prior",
        args.seed,
        serde_json::json!({
            "family": result.family,
            "n": args.n,
            "replicates": args.reps,
        }),
    )?;
    println!(
        "induced prior written to {} (mode K+ = {}, mean K+ = {:.3})",
        args.out.display(),
        result.mode(),
        result.mean()
    );
    Ok(())
}

#[derive(Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub u: usize,
    #[arg(long)]
    pub tp: f64,
    #[arg(long, default_value_t = 25)]
    pub k: usize,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub alpha2: f64,
    #[arg(long, default_value_t = 20_000)]
    pub reps: usize,
    #[arg(long, default_value_t = 0.02)]
    pub tol: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "calibration.json")]
    pub out: PathBuf,
}

pub fn calibrate(args: CalibrateArgs) -> Result<()> {
    let cfg = CalibrationConfig {
        u: args.u,
        k: args.k,
        n: args.n,
        tp: args.tp,
        alpha2_fixed: args.alpha2,
        mc_replicates: args.reps,
        tolerance: args.tol,
    };
    let rng = root_rng(args.seed);
    let result = calibrate_lambda(&cfg, &rng.substream(STREAM_CALIBRATE))?;
    if let Some(parent) = args.out.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let file = std::fs::File::create(&args.out)?;
    serde_json::to_writer_pretty(file, &result)?;
    write_sibling_manifest(&args.out, "calibrate", args.seed, serde_json::to_value(&cfg)?)?;
    println!(
        "lambda* = {} (achieved tail {} after {} evaluations)",
        result.lambda_star, result.achieved_tail, result.iterations
    );
    Ok(())
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SimulateKind {
    Type1,
    Type2,
    Functional,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub kind: SimulateKind,
    /// True number of clusters (type1) or template count (functional).
    #[arg(long)]
    pub kplus: Option<usize>,
    /// Centering value U (type2).
    #[arg(long)]
    pub u: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Grid size for functional curves.
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    #[arg(long, default_value_t = 0.05)]
    pub kappa: f64,
    #[arg(long, default_value_t = 0.0005)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "simulated")]
    pub out_dir: PathBuf,
}

pub fn simulate(args: SimulateArgs) -> Result<()> {
    let rng = root_rng(args.seed);
    let mut gen_rng = rng.substream(STREAM_SIMULATE);
    std::fs::create_dir_all(&args.out_dir)?;
    let config_json;
    match args.kind {
        SimulateKind::Type1 => {
            let spec = datagen::DataType1Spec::new(require(args.kplus, "--kplus")?, args.n);
            let (y, truth) = datagen::gen_type1(&spec, &mut gen_rng)?;
            let ids = ids_1_to_n(y.len());
            runio::write_univariate_csv(&args.out_dir.join("data.csv"), &y)?;
            runio::write_truth_csv(&args.out_dir.join("truth.csv"), &truth, &ids)?;
            config_json = serde_json::to_value(&spec)?;
        }
        SimulateKind::Type2 => {
            let spec = datagen::DataType2Spec::new(require(args.u, "--u")?, args.n);
            let (y, truth) = datagen::gen_type2(&spec, &mut gen_rng)?;
            let ids = ids_1_to_n(y.len());
            runio::write_univariate_csv(&args.out_dir.join("data.csv"), &y)?;
            runio::write_truth_csv(&args.out_dir.join("truth.csv"), &truth, &ids)?;
            config_json = serde_json::to_value(&spec)?;
        }
        SimulateKind::Functional => {
            let templates_n = require(args.kplus, "--kplus")?;
            let grid: Vec<f64> = (0..args.points)
                .map(|i| i as f64 / (args.points - 1) as f64)
                .collect();
            let (basis, design) = afmm::bspline::build_basis(&grid, 3, 7)?;
            let templates = datagen::default_templates(templates_n, basis.p);
            let data = datagen::gen_functional(
                &templates,
                args.n,
                args.kappa,
                args.sigma,
                &grid,
                &design,
                &mut gen_rng,
            )?;
            let ids = ids_1_to_n(args.n);
            runio::write_functional_csv(&args.out_dir.join("data.csv"), &data, &ids)?;
            runio::write_truth_csv(&args.out_dir.join("truth.csv"), &data.truth, &ids)?;
            config_json = serde_json::json!({
                "templates": templates_n,
                "n": args.n,
                "kappa": args.kappa,
                "sigma": args.sigma,
                "points": args.points,
            });
        }
    }
    let mut manifest = RunManifest::new(
        format!("afmm simulate --kind {:?} --seed {}", args.kind, args.seed),
        args.seed,
        config_json,
    );
    manifest.finalize(&args.out_dir, None)?;
    println!("simulated data written to {}", args.out_dir.display());
    Ok(())
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum PriorArg {
    /// alpha1 ~ PC(U, tp), alpha2 fixed.
    Pc,
    /// alpha1 ~ Gamma(10, 1/(10 U)), alpha2 fixed.
    Gamma,
    /// alpha1 fixed at --alpha1.
    Fixed,
    /// Sparse symmetric mixture: alpha ~ Gamma(10, 10 K), all K components.
    SymGamma,
}

#[derive(Args)]
pub struct FitArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub u: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub tp: f64,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub burn: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = PriorArg::Pc)]
    pub prior: PriorArg,
    /// Fixed alpha1 (required for --prior fixed).
    #[arg(long)]
    pub alpha1: Option<f64>,
    #[arg(long)]
    pub alpha2: Option<f64>,
    /// Use this PC decay rate instead of calibrating to --tp.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Calibration replicates for the PC prior.
    #[arg(long, default_value_t = 20_000)]
    pub calib_reps: usize,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

struct ResolvedFit {
    config: UnivariateModelConfig,
    pc: Option<PcPriorSpec>,
    protocol: ChainProtocol,
    lambda: Option<f64>,
}

fn resolve_fit(
    args: &FitArgs,
    n: usize,
    default_protocol: ChainProtocol,
    u_override: Option<usize>,
) -> Result<ResolvedFit> {
    let file = ConfigFile::load(args.config.as_deref())?;
    let u = match u_override {
        Some(u) => u,
        None => file.resolve(args.u, "u", 0)?,
    };
    if u == 0 && !matches!(args.prior, PriorArg::SymGamma) {
        return Err(Error::invalid("--u is required for asymmetric priors".to_string()));
    }
    let k = file.resolve(args.k, "k", 25)?;
    let alpha2 = file.resolve(args.alpha2, "alpha2", 1e-5)?;
    let tp = file.resolve(Some(args.tp), "tp", 0.1)?;
    let protocol = ChainProtocol {
        iters: file.resolve(args.iters, "iters", default_protocol.iters)?,
        burn: file.resolve(args.burn, "burn", default_protocol.burn)?,
        thin: file.resolve(args.thin, "thin", default_protocol.thin)?,
    };
    let rng = root_rng(args.seed);
    let (weight_prior, pc, lambda) = match args.prior {
        PriorArg::Pc => {
            let lambda = match args.lambda {
                Some(l) => l,
                None => {
                    let cfg = CalibrationConfig {
                        alpha2_fixed: alpha2,
                        mc_replicates: args.calib_reps,
                        ..CalibrationConfig::new(u, k, n, tp)
                    };
                    let result = calibrate_lambda(&cfg, &rng.substream(STREAM_CALIBRATE))?;
                    eprintln!(
                        "calibrated lambda = {} (tail {})",
                        result.lambda_star, result.achieved_tail
                    );
                    result.lambda_star
                }
            };
            let spec = PcPriorSpec::with_alpha2(u, k, alpha2, lambda)?;
            (WeightPrior::AsymPc, Some(spec), Some(lambda))
        }
        PriorArg::Gamma => (WeightPrior::asym_gamma_default(u), None, None),
        PriorArg::Fixed => (
            WeightPrior::AsymFixed {
                alpha1: require(args.alpha1, "--alpha1")?,
            },
            None,
            None,
        ),
        PriorArg::SymGamma => (WeightPrior::sym_gamma_default(k), None, None),
    };
    let mut config = UnivariateModelConfig::new(u, k, weight_prior);
    config.alpha2 = alpha2;
    Ok(ResolvedFit {
        config,
        pc,
        protocol,
        lambda,
    })
}

pub fn fit(args: FitArgs) -> Result<()> {
    let y = runio::read_univariate_csv(&args.data)?;
    let default_protocol = ChainProtocol {
        iters: 110_000,
        burn: 10_000,
        thin: 100,
    };
    let resolved = resolve_fit(&args, y.len(), default_protocol, None)?;
    let mut manifest = RunManifest::new(
        format!(
            "afmm fit --data {} --seed {} --prior {:?}",
            args.data.display(),
            args.seed,
            args.prior
        ),
        args.seed,
        serde_json::json!({
            "model": resolved.config,
            "protocol": resolved.protocol,
            "lambda": resolved.lambda,
            "n": y.len(),
        }),
    );
    manifest.write(&args.out_dir)?;
    let mut rng = root_rng(args.seed).substream(STREAM_CHAIN);
    let summary = run_chain(
        &y,
        &resolved.config,
        resolved.pc.as_ref(),
        resolved.protocol,
        &mut rng,
    )?;
    let ids = ids_1_to_n(y.len());
    runio::write_run_directory(&args.out_dir, &summary, &ids)?;
    manifest.finalize(&args.out_dir, Some(summary.warnings))?;
    print_fit_summary(&summary, &args.out_dir);
    Ok(())
}

#[derive(Args)]
pub struct FitFunctionalArgs {
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long, default_value_t = 3)]
    pub degree: usize,
    #[arg(long, default_value_t = 7)]
    pub knots: usize,
    /// Upper bound of the uniform prior on the noise SD.
    #[arg(long, default_value_t = 0.001)]
    pub a: f64,
    /// Upper bound of the uniform prior on the within-cluster SD.
    #[arg(long, default_value_t = 0.25)]
    pub a0: f64,
    #[arg(long, default_value_t = 0.01)]
    pub a_tau: f64,
    #[arg(long, default_value_t = 3.22)]
    pub u_tau: f64,
    /// Scale carrying the exponential smoothing prior.
    #[arg(long, value_enum, default_value_t = TauScaleArg::Tau)]
    pub tau_prior: TauScaleArg,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum TauScaleArg {
    Tau,
    InvTau,
}

pub fn fit_functional(args: FitFunctionalArgs) -> Result<()> {
    let (ids, data, rescale) = runio::read_functional_csv(&args.fit.data)?;
    let default_protocol = ChainProtocol {
        iters: 150_000,
        burn: 50_000,
        thin: 100,
    };
    let resolved = resolve_fit(&args.fit, data.curves.len(), default_protocol, None)?;
    let (basis, _) = afmm::bspline::build_basis(&data.grid, args.degree, args.knots)?;
    let mut config = FunctionalModelConfig::new(resolved.config.u, resolved.config.k, resolved.config.weight_prior);
    config.alpha2 = resolved.config.alpha2;
    config.hyper.a = args.a;
    config.hyper.a0 = args.a0;
    config.hyper.a_tau = args.a_tau;
    config.hyper.u_tau = args.u_tau;
    config.hyper.tau_prior = match args.tau_prior {
        TauScaleArg::Tau => TauPriorScale::ExpOnTau,
        TauScaleArg::InvTau => TauPriorScale::ExpOnInvTau,
    };
    let mut manifest = RunManifest::new(
        format!(
            "afmm fit-functional --data {} --seed {}",
            args.fit.data.display(),
            args.fit.seed
        ),
        args.fit.seed,
        serde_json::json!({
            "model": config,
            "protocol": resolved.protocol,
            "lambda": resolved.lambda,
            "subjects": data.curves.len(),
            "degree": args.degree,
            "knots": args.knots,
            "time_rescaling": { "lo": rescale.0, "hi": rescale.1 },
        }),
    );
    manifest.write(&args.fit.out_dir)?;
    let mut rng = root_rng(args.fit.seed).substream(STREAM_CHAIN);
    let fit = fit_functional_model(
        &data,
        &basis,
        &config,
        resolved.pc.as_ref(),
        resolved.protocol,
        &mut rng,
    )?;
    runio::write_functional_run_directory(&args.fit.out_dir, &fit, &ids)?;
    manifest.finalize(&args.fit.out_dir, Some(fit.summary.warnings))?;
    print_fit_summary(&fit.summary, &args.fit.out_dir);
    Ok(())
}

#[derive(Args)]
pub struct SensitivityArgs {
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long)]
    pub u_min: usize,
    #[arg(long)]
    pub u_max: usize,
}

pub fn sensitivity(args: SensitivityArgs) -> Result<()> {
    if args.u_min < 1 || args.u_min > args.u_max {
        return Err(Error::invalid("need 1 <= u-min <= u-max".to_string()));
    }
    let y = runio::read_univariate_csv(&args.fit.data)?;
    let out_dir = args.fit.out_dir.clone();
    std::fs::create_dir_all(&out_dir)?;
    let default_protocol = ChainProtocol {
        iters: 110_000,
        burn: 10_000,
        thin: 100,
    };
    let mut manifest = RunManifest::new(
        format!(
            "afmm sensitivity --data {} --u-min {} --u-max {} --seed {}",
            args.fit.data.display(),
            args.u_min,
            args.u_max,
            args.fit.seed
        ),
        args.fit.seed,
        serde_json::json!({
            "u_min": args.u_min,
            "u_max": args.u_max,
            "tp": args.fit.tp,
            "n": y.len(),
        }),
    );
    manifest.write(&out_dir)?;

    use rayon::prelude::*;
    let rows: Result<Vec<(usize, Option<f64>, PosteriorSummary)>> = (args.u_min..=args.u_max)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&u| {
            let resolved = resolve_fit(&args.fit, y.len(), default_protocol, Some(u))?;
            let mut rng = root_rng(args.fit.seed).substream(1000 + u as u64);
            let summary = run_chain(
                &y,
                &resolved.config,
                resolved.pc.as_ref(),
                resolved.protocol,
                &mut rng,
            )?;
            let u_dir = out_dir.join(format!("U={u}"));
            let ids = ids_1_to_n(y.len());
            runio::write_run_directory(&u_dir, &summary, &ids)?;
            Ok((u, resolved.lambda, summary))
        })
        .collect();
    let rows = rows?;

    let k = rows
        .first()
        .map(|(_, _, s)| s.kplus_pmf.len())
        .unwrap_or(25);
    let path = out_dir.join("summary.csv");
    let mut f = std::fs::File::create(&path)?;
    use std::io::Write as _;
    writeln!(f, "u,lambda,kplus_mode,mse,sd_ccp")?;
    for (u, lambda, summary) in &rows {
        let mse = metrics::u_adjusted_mse(&y, &summary.fitted, k, *u)?;
        let sd = metrics::sd_ccp(&summary.coclustering)?;
        writeln!(
            f,
            "{u},{},{},{},{}",
            lambda.map(runio::fmt_f64).unwrap_or_default(),
            summary.kplus_mode(),
            runio::fmt_f64(mse),
            runio::fmt_f64(sd)
        )?;
    }
    manifest.finalize(&out_dir, None)?;
    println!(
        "sensitivity sweep over U in [{}, {}] written to {}",
        args.u_min,
        args.u_max,
        out_dir.display()
    );
    Ok(())
}

#[derive(Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub run_dir: PathBuf,
    /// Truth labels (id,label); enables pwss, ccprob_error, mode_bias, ari.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Override the true number of clusters (defaults to the truth file's).
    #[arg(long)]
    pub kplus_true: Option<usize>,
    /// Original data CSV; enables the U-adjusted mse.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub u: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn metrics(args: MetricsArgs) -> Result<()> {
    let kplus_pmf = runio::read_kplus_csv(&args.run_dir.join("kplus_posterior.csv"))?;
    let (_, coclustering) = runio::read_coclustering_csv(&args.run_dir.join("coclustering.csv"))?;
    let (_, point_partition) = runio::read_partition_csv(&args.run_dir.join("partition.csv"))?;
    let truth = args
        .truth
        .as_deref()
        .map(runio::read_truth_csv)
        .transpose()?
        .map(|(_, t)| t);
    let kplus_true = args
        .kplus_true
        .or_else(|| truth.as_ref().map(Partition::n_clusters));
    let mut report = MetricsReport {
        pwss: None,
        ccprob_error: None,
        mode_bias: None,
        mse: None,
        sd_ccp: Some(metrics::sd_ccp(&coclustering)?),
        ari: None,
    };
    if let Some(kt) = kplus_true {
        report.pwss = Some(metrics::pwss(&kplus_pmf, kt)?);
        report.mode_bias = Some(metrics::mode_bias(&kplus_pmf, kt));
    }
    if let Some(t) = &truth {
        report.ccprob_error = Some(metrics::ccprob_error(&coclustering, t)?);
        report.ari = Some(metrics::ari(&point_partition, t)?);
    }
    if let Some(data_path) = &args.data {
        let y = runio::read_univariate_csv(data_path)?;
        let fitted = runio::read_fitted_csv(&args.run_dir.join("fitted.csv"))?;
        let k = args.k.unwrap_or(kplus_pmf.len());
        if let Some(u) = args.u {
            report.mse = Some(metrics::u_adjusted_mse(&y, &fitted, k, u)?);
        }
    }
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| args.run_dir.join("metrics.json"));
    runio::write_metrics_json(&out, &report)?;
    println!("metrics written to {}", out.display());
    Ok(())
}

fn print_fit_summary(summary: &PosteriorSummary, out_dir: &Path) {
    println!(
        "run complete: {} retained draws, mode K+ = {}, point partition has {} clusters \
         (alpha1 acceptance {:.2}, outputs in {})",
        summary.retained,
        summary.kplus_mode(),
        summary.point_partition.n_clusters(),
        summary.acceptance.alpha1_rate(),
        out_dir.display()
    );
}

fn write_sibling_manifest(
    out: &Path,
    command: &str,
    seed: u64,
    config: serde_json::Value,
) -> Result<()> {
    let mut manifest = RunManifest::new(format!("afmm {command} --seed {seed}"), seed, config);
    manifest.finished_at_unix_ms = Some(manifest.started_at_unix_ms);
    let name = format!(
        "{}.manifest.json",
        out.file_stem().and_then(|s| s.to_str()).unwrap_or("out")
    );
    let path = out.parent().map(|p| p.join(&name)).unwrap_or_else(|| PathBuf::from(&name));
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(file, &manifest)?;
    Ok(())
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| Error::invalid(format!("{flag} is required for this command")))
}
