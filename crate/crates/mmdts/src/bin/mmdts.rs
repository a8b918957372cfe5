//! Command-line front end: simulate model paths, run the estimators and
//! baselines, select lags, run diagnostics, and drive benchmark configs.
//! All outputs are deterministic functions of the arguments.

use clap::{Parser, Subcommand};
use mmdts::baselines::{
    arma_qml, garch_qml, nlma_moment, ricker_sl_mle, sv_pf_mle, ParticleFilterConfig,
    SyntheticLikConfig,
};
use mmdts::bench::{emit_outputs, run_benchmark, BenchmarkConfig};
use mmdts::diagnostics::{
    averaging_chain, estimate_rho, mc_mmd_decay, mc_rmse_scaling, ScalingOptimizer,
};
use mmdts::estimators::{estimate_mmd, OptimConfig, Resample, SchemeKind, SimScheme};
use mmdts::innovations::{standard_normal, InnovationDist, SeedPath};
use mmdts::io::{read_series_csv, write_json, write_series_csv};
use mmdts::kernel::KernelSpec;
use mmdts::lag_selection::select_lag;
use mmdts::models::{ModelKind, ModelSpec, DEFAULT_BURN_IN};
use mmdts::{MmdError, Result};
use serde_json::json;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "mmdts", about = "Simulation-based minimum-MMD estimation for time series")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate a model path and write it as CSV.
    Simulate {
        #[arg(long)]
        model: String,
        /// Comma-separated parameter vector.
        #[arg(long)]
        theta: String,
        #[arg(long = "T")]
        t: usize,
        #[arg(long, default_value = "gaussian")]
        dist: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a model to a series CSV by minimum MMD.
    Estimate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: String,
        #[arg(long, default_value = "ismmd")]
        scheme: String,
        #[arg(long, default_value = "per-iter")]
        resample: String,
        #[arg(long = "N", default_value_t = 1000)]
        n: usize,
        #[arg(long)]
        p: usize,
        #[arg(long, default_value_t = 500)]
        iters: usize,
        #[arg(long, default_value_t = 100)]
        t0: usize,
        #[arg(long, default_value_t = DEFAULT_BURN_IN)]
        burn_in: usize,
        #[arg(long, default_value_t = 10)]
        blocks: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a comparison estimator on a series CSV.
    Baseline {
        #[arg(long)]
        method: String,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 5000)]
        particles: usize,
        #[arg(long, default_value_t = 1000)]
        replicates: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Choose the lag order on a train/test split.
    Lagselect {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: String,
        #[arg(long)]
        pmax: usize,
        #[arg(long = "N", default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        t0: usize,
        #[arg(long, default_value_t = 50)]
        iters: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo checks: dependence profile, MMD decay, error scaling.
    Diagnose {
        /// rho | decay | scaling
        #[arg(long)]
        check: String,
        /// chain | iid (for rho and decay)
        #[arg(long, default_value = "chain")]
        process: String,
        #[arg(long, default_value_t = 10)]
        tmax: usize,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long, default_value_t = 2000)]
        tref: usize,
        /// Comma-separated T grid (decay and scaling).
        #[arg(long, default_value = "256,1024")]
        t_grid: String,
        #[arg(long, default_value_t = 100_000)]
        ref_size: usize,
        #[arg(long, default_value_t = 20_000)]
        ref_cap: usize,
        /// Model and true theta (scaling only).
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        theta: Option<String>,
        #[arg(long, default_value_t = 10)]
        batches: usize,
        #[arg(long, default_value_t = 10)]
        n_factor: usize,
        #[arg(long, default_value_t = 1)]
        p: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a TOML-described experiment grid.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn parse_model(name: &str) -> Result<ModelKind> {
    ModelKind::parse(name).ok_or_else(|| MmdError::Parse(format!("unknown model {name:?}")))
}

fn parse_theta(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| MmdError::Parse(format!("bad theta entry {s:?}")))
        })
        .collect()
}

fn parse_grid(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| MmdError::Parse(format!("bad grid entry {s:?}")))
        })
        .collect()
}

fn parse_dist(name: &str) -> Result<InnovationDist> {
    InnovationDist::parse(name)
        .ok_or_else(|| MmdError::Parse(format!("unknown distribution {name:?}")))
}

/// A valid parameter at the center of the model's box, used as the default
/// starting point when only the model family is given.
fn midpoint_spec(kind: ModelKind) -> ModelSpec {
    let mids: Vec<f64> = kind.bounds().iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect();
    let probe = ModelSpec {
        kind,
        theta: mids.clone(),
    };
    ModelSpec {
        kind,
        theta: probe.project(&mids),
    }
}

fn build_scheme(scheme: &str, resample: &str, n: usize, t0: usize, burn_in: usize, blocks: usize) -> Result<SimScheme> {
    let resample = match resample {
        "fixed" => Resample::Fixed,
        "per-iter" | "per-iteration" | "sgd" => Resample::PerIteration,
        other => return Err(MmdError::Parse(format!("unknown resample policy {other:?}"))),
    };
    let kind = match scheme {
        "ismmd" => SchemeKind::Ismmd { n, t0 },
        "psmmd" => SchemeKind::Psmmd { n, burn_in },
        "csmmd" => SchemeKind::Csmmd {
            m: blocks,
            n_bar: n.div_ceil(blocks),
            burn_in,
        },
        other => return Err(MmdError::Parse(format!("unknown scheme {other:?}"))),
    };
    Ok(SimScheme { kind, resample })
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Simulate { model, theta, t, dist, seed, out } => {
            let kind = parse_model(&model)?;
            let spec = ModelSpec::new(kind, parse_theta(&theta)?)?;
            let series = spec.simulate(t, parse_dist(&dist)?, &SeedPath::new(seed))?;
            let mut meta = BTreeMap::new();
            meta.insert("model".to_string(), kind.name().to_string());
            meta.insert("theta".to_string(), theta.clone());
            meta.insert("T".to_string(), t.to_string());
            write_series_csv(&out, &series, &meta)?;
        }
        Cmd::Estimate {
            data, model, scheme, resample, n, p, iters, t0, burn_in, blocks, seed, out,
        } => {
            let (series, _) = read_series_csv(&data)?;
            let spec = midpoint_spec(parse_model(&model)?);
            let sim = build_scheme(&scheme, &resample, n, t0, burn_in, blocks)?;
            let cfg = OptimConfig::for_model(&spec).with_iterations(iters);
            let result = estimate_mmd(
                &series,
                &spec,
                &sim,
                p,
                &cfg,
                InnovationDist::Gaussian,
                &SeedPath::new(seed),
            )?;
            write_json(
                &out,
                &json!({
                    "model": spec.kind.name(),
                    "p": p,
                    "iters": iters,
                    "seed": seed,
                    "result": result,
                }),
            )?;
        }
        Cmd::Baseline { method, data, seed, particles, replicates, out } => {
            let (series, _) = read_series_csv(&data)?;
            let root = SeedPath::new(seed);
            let fit = match method.as_str() {
                "garch-qml" => garch_qml(&series)?,
                "arma-qml" => arma_qml(&series)?,
                "sv-pf" => sv_pf_mle(
                    &series,
                    &ParticleFilterConfig::new(root.clone()).with_particles(particles),
                )?,
                "nlma-moment" => {
                    let psi = nlma_moment(&series)?;
                    mmdts::baselines::BaselineFit {
                        theta_hat: vec![psi],
                        value: 0.0,
                        converged: true,
                        mc_size: None,
                    }
                }
                "ricker-sl" => ricker_sl_mle(
                    &series,
                    &SyntheticLikConfig::new(root.clone()).with_replicates(replicates),
                )?,
                other => return Err(MmdError::Parse(format!("unknown method {other:?}"))),
            };
            write_json(
                &out,
                &json!({ "method": method, "seed": seed, "fit": fit }),
            )?;
        }
        Cmd::Lagselect { data, model, pmax, n, t0, iters, seed, out } => {
            let (series, _) = read_series_csv(&data)?;
            let spec = midpoint_spec(parse_model(&model)?);
            let scheme = SimScheme::ismmd(n, t0, Resample::PerIteration);
            let cfg = OptimConfig::for_model(&spec).with_iterations(iters);
            let report = select_lag(
                &series,
                &spec,
                &scheme,
                pmax,
                &cfg,
                InnovationDist::Gaussian,
                &SeedPath::new(seed),
            )?;
            write_json(
                &out,
                &json!({ "model": spec.kind.name(), "seed": seed, "report": report }),
            )?;
        }
        Cmd::Diagnose {
            check, process, tmax, reps, tref, t_grid, ref_size, ref_cap,
            model, theta, batches, n_factor, p, seed, out,
        } => {
            let root = SeedPath::new(seed);
            let gen: Box<dyn Fn(usize, &SeedPath) -> Result<Vec<f64>>> = match process.as_str() {
                "chain" => Box::new(averaging_chain),
                "iid" => Box::new(|t_len, s: &SeedPath| {
                    let mut rng = s.rng();
                    Ok((0..t_len).map(|_| standard_normal(&mut rng)).collect())
                }),
                other => return Err(MmdError::Parse(format!("unknown process {other:?}"))),
            };
            let mut csv = format!("# seed={seed}\n");
            match check.as_str() {
                "rho" => {
                    let kernel = KernelSpec::new(0.5)?;
                    let prof = estimate_rho(&*gen, 0, &kernel, tmax, reps, tref, &root)?;
                    csv.push_str("t,rho,sigma,stderr\n");
                    for i in 0..prof.rho.len() {
                        let _ = writeln!(
                            csv,
                            "{},{:?},{:?},{:?}",
                            i + 1,
                            prof.rho[i],
                            prof.sigma_t[i],
                            prof.mc_stderr[i]
                        );
                    }
                }
                "decay" => {
                    let grid = parse_grid(&t_grid)?;
                    let rows = mc_mmd_decay(&*gen, 0, &grid, reps, ref_size, ref_cap, &root)?;
                    csv.push_str("T,mean_d,stderr,bound\n");
                    for r in rows {
                        let _ =
                            writeln!(csv, "{},{:?},{:?},{:?}", r.t, r.mean_d, r.stderr, r.bound);
                    }
                }
                "scaling" => {
                    let kind = parse_model(model.as_deref().ok_or_else(|| {
                        MmdError::Parse("scaling needs --model".into())
                    })?)?;
                    let theta = parse_theta(theta.as_deref().ok_or_else(|| {
                        MmdError::Parse("scaling needs --theta".into())
                    })?)?;
                    let spec = ModelSpec::new(kind, theta.clone())?;
                    let grid: Vec<(usize, usize)> = parse_grid(&t_grid)?
                        .into_iter()
                        .map(|t| (t, n_factor * t))
                        .collect();
                    let rows = mc_rmse_scaling(
                        &spec,
                        &theta,
                        &grid,
                        &|n| SimScheme::ismmd(n, 100, Resample::Fixed),
                        &ScalingOptimizer::Newton { steps: 2, h: 5e-3 },
                        p,
                        batches,
                        InnovationDist::Gaussian,
                        &root,
                    )?;
                    csv.push_str("T,N,rmse,failures\n");
                    for r in rows {
                        let _ = writeln!(csv, "{},{},{:?},{}", r.t, r.n, r.rmse, r.failures);
                    }
                }
                other => return Err(MmdError::Parse(format!("unknown check {other:?}"))),
            }
            std::fs::write(&out, csv).map_err(MmdError::Io)?;
        }
        Cmd::Bench { config, out_dir } => {
            let text = std::fs::read_to_string(&config)?;
            let cfg = BenchmarkConfig::from_toml(&text)?;
            let report = run_benchmark(&cfg)?;
            emit_outputs(&report, &out_dir)?;
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
