//! Experiment harness: batched data generation, estimation across a lag
//! grid, baseline fits, l2-error aggregation, and CSV/SVG/JSON emission.
//!
//! Case 1 draws the data with Gaussian innovations; Case 2 draws it with
//! scaled t(3) innovations while the estimator still simulates Gaussian
//! paths internally, so Case 2 measures behavior under misspecification.
//! Errors are always measured against the generating parameter.

use crate::baselines::{
    arma_qml, garch_qml, nlma_moment, ricker_sl_mle, sv_pf_mle, ParticleFilterConfig,
    SyntheticLikConfig,
};
use crate::error::{MmdError, Result};
use crate::estimators::{estimate_mmd, OptimConfig, Resample, SchemeKind, SimScheme};
use crate::innovations::{InnovationDist, SeedPath};
use crate::models::{ModelKind, ModelSpec, DEFAULT_BURN_IN};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

fn default_case() -> u8 {
    1
}
fn default_batches() -> usize {
    100
}
fn default_n_list() -> Vec<usize> {
    vec![1000]
}
fn default_scheme() -> String {
    "ismmd".to_string()
}
fn default_resample() -> String {
    "per-iter".to_string()
}
fn default_iters() -> usize {
    100
}
fn default_t0() -> usize {
    100
}
fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}
fn default_blocks() -> usize {
    10
}
fn default_true() -> bool {
    true
}
fn default_pf_particles() -> usize {
    5000
}
fn default_sl_replicates() -> usize {
    1000
}

/// TOML-deserializable experiment description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub model: String,
    pub theta_star: Vec<f64>,
    /// 1 = Gaussian data, 2 = scaled t(3) data (misspecification).
    #[serde(default = "default_case")]
    pub case: u8,
    pub t: usize,
    #[serde(default = "default_batches")]
    pub batches: usize,
    /// Empty means the per-model default grid (1..=40 for the non-linear
    /// MA, 1..=15 otherwise).
    #[serde(default)]
    pub p_grid: Vec<usize>,
    #[serde(default = "default_n_list")]
    pub n_list: Vec<usize>,
    #[serde(default = "default_scheme")]
    pub scheme: String,
    /// "fixed" or "per-iter".
    #[serde(default = "default_resample")]
    pub resample: String,
    #[serde(default = "default_iters")]
    pub iters: usize,
    #[serde(default = "default_t0")]
    pub t0: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    /// Block count for the concatenated scheme.
    #[serde(default = "default_blocks")]
    pub blocks: usize,
    #[serde(default = "default_true")]
    pub baseline: bool,
    #[serde(default = "default_pf_particles")]
    pub pf_particles: usize,
    #[serde(default = "default_sl_replicates")]
    pub sl_replicates: usize,
    pub seed: u64,
}

impl BenchmarkConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| MmdError::Parse(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.batches == 0 {
            return Err(MmdError::InvalidParameter("batches must be >= 1".into()));
        }
        if self.kind().is_none() {
            return Err(MmdError::Parse(format!("unknown model {:?}", self.model)));
        }
        if self.case != 1 && self.case != 2 {
            return Err(MmdError::InvalidParameter(format!("case must be 1 or 2, got {}", self.case)));
        }
        if self.n_list.is_empty() {
            return Err(MmdError::InvalidParameter("n_list must be nonempty".into()));
        }
        Ok(())
    }

    pub fn kind(&self) -> Option<ModelKind> {
        ModelKind::parse(&self.model)
    }

    pub fn effective_p_grid(&self) -> Vec<usize> {
        if !self.p_grid.is_empty() {
            return self.p_grid.clone();
        }
        match self.kind() {
            Some(ModelKind::Nlma) => (1..=40).collect(),
            _ => (1..=15).collect(),
        }
    }

    fn data_dist(&self) -> InnovationDist {
        if self.case == 2 {
            InnovationDist::ScaledT3
        } else {
            InnovationDist::Gaussian
        }
    }

    fn sim_scheme(&self, n: usize) -> Result<SimScheme> {
        let resample = match self.resample.as_str() {
            "fixed" => Resample::Fixed,
            "per-iter" | "per-iteration" | "sgd" => Resample::PerIteration,
            other => return Err(MmdError::Parse(format!("unknown resample policy {other:?}"))),
        };
        let kind = match self.scheme.as_str() {
            "ismmd" => SchemeKind::Ismmd { n, t0: self.t0 },
            "psmmd" => SchemeKind::Psmmd { n, burn_in: self.burn_in },
            "csmmd" => SchemeKind::Csmmd {
                m: self.blocks,
                n_bar: n.div_ceil(self.blocks),
                burn_in: self.burn_in,
            },
            other => return Err(MmdError::Parse(format!("unknown scheme {other:?}"))),
        };
        Ok(SimScheme { kind, resample })
    }

    fn method_name(&self) -> String {
        match self.resample.as_str() {
            "fixed" => self.scheme.clone(),
            _ => format!("{}-sgd", self.scheme),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: String,
    pub p: usize,
    pub n: usize,
    pub mean_l2: f64,
    pub stderr: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub config: BenchmarkConfig,
    pub rows: Vec<BenchRow>,
}

fn aggregate(method: &str, p: usize, n: usize, errs: &[f64], failures: usize) -> BenchRow {
    let b = errs.len();
    let mean = if b > 0 {
        errs.iter().sum::<f64>() / b as f64
    } else {
        f64::NAN
    };
    let stderr = if b > 1 {
        let var = errs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (b - 1) as f64;
        (var / b as f64).sqrt()
    } else {
        f64::INFINITY
    };
    BenchRow {
        method: method.to_string(),
        p,
        n,
        mean_l2: mean,
        stderr,
        failures,
    }
}

fn baseline_fit(
    kind: ModelKind,
    data: &crate::models::Series,
    cfg: &BenchmarkConfig,
    seed: &SeedPath,
) -> (String, Result<Vec<f64>>) {
    match kind {
        ModelKind::Garch => ("garch-qml".into(), garch_qml(data).map(|f| f.theta_hat)),
        ModelKind::Arma => ("arma-qml".into(), arma_qml(data).map(|f| f.theta_hat)),
        ModelKind::Sv => (
            "sv-pf".into(),
            sv_pf_mle(
                data,
                &ParticleFilterConfig::new(seed.clone()).with_particles(cfg.pf_particles),
            )
            .map(|f| f.theta_hat),
        ),
        ModelKind::Nlma => ("nlma-moment".into(), nlma_moment(data).map(|m| vec![m])),
        ModelKind::Ricker => (
            "ricker-sl".into(),
            ricker_sl_mle(
                data,
                &SyntheticLikConfig::new(seed.clone()).with_replicates(cfg.sl_replicates),
            )
            .map(|f| f.theta_hat),
        ),
    }
}

/// Run the full batch x method x p grid and aggregate l2 errors.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let kind = cfg.kind().expect("validated");
    let spec = ModelSpec::new(kind, cfg.theta_star.clone())?;
    let p_grid = cfg.effective_p_grid();
    let root = SeedPath::new(cfg.seed);
    let optim = OptimConfig::for_model(&spec).with_iterations(cfg.iters);
    let method = cfg.method_name();

    let l2 = |theta: &[f64]| {
        theta
            .iter()
            .zip(&cfg.theta_star)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    };

    // errs[(n_idx, p_idx)] across batches.
    let mut cell_errs: Vec<Vec<Vec<f64>>> =
        vec![vec![Vec::with_capacity(cfg.batches); p_grid.len()]; cfg.n_list.len()];
    let mut cell_fail: Vec<Vec<usize>> = vec![vec![0; p_grid.len()]; cfg.n_list.len()];
    let mut base_errs: Vec<f64> = Vec::with_capacity(cfg.batches);
    let mut base_fail = 0usize;
    let mut base_name = String::new();

    for b in 0..cfg.batches {
        let batch_seed = root.derive(b as u32);
        let data = spec.simulate(cfg.t, cfg.data_dist(), &batch_seed.derive(0))?;

        if cfg.baseline {
            let (name, fit) = baseline_fit(kind, &data, cfg, &batch_seed.derive(1));
            base_name = name;
            match fit {
                Ok(theta) => base_errs.push(l2(&theta)),
                Err(_) => base_fail += 1,
            }
        }

        for (ni, &n) in cfg.n_list.iter().enumerate() {
            let scheme = cfg.sim_scheme(n)?;
            for (pi, &p) in p_grid.iter().enumerate() {
                let cell = batch_seed.derive(2).derive(ni as u32).derive(pi as u32);
                match estimate_mmd(&data, &spec, &scheme, p, &optim, InnovationDist::Gaussian, &cell)
                {
                    Ok(r) => cell_errs[ni][pi].push(l2(&r.theta_hat)),
                    Err(_) => cell_fail[ni][pi] += 1,
                }
            }
        }
    }

    let mut rows = Vec::new();
    for (ni, &n) in cfg.n_list.iter().enumerate() {
        for (pi, &p) in p_grid.iter().enumerate() {
            rows.push(aggregate(&method, p, n, &cell_errs[ni][pi], cell_fail[ni][pi]));
        }
    }
    if cfg.baseline {
        // Baselines do not use the embedding, so the same aggregate repeats
        // across the p grid for plotting next to the estimator curves.
        for &p in &p_grid {
            rows.push(aggregate(&base_name, p, 0, &base_errs, base_fail));
        }
    }
    Ok(BenchmarkReport {
        config: cfg.clone(),
        rows,
    })
}

/// CSV with fixed column order; `inf` marks undefined standard errors.
pub fn report_csv_string(report: &BenchmarkReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# seed={}", report.config.seed);
    out.push_str("method,p,N,mean_l2,stderr,failures\n");
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{:?},{:?},{}",
            r.method, r.p, r.n, r.mean_l2, r.stderr, r.failures
        );
    }
    out
}

/// Parse the CSV emitted by `report_csv_string` back into rows.
pub fn parse_report_csv(text: &str) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("method,") {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 6 {
            return Err(MmdError::Parse(format!("bad report row: {line:?}")));
        }
        let field = |i: usize| -> Result<f64> {
            parts[i]
                .parse()
                .map_err(|_| MmdError::Parse(format!("bad number {:?}", parts[i])))
        };
        rows.push(BenchRow {
            method: parts[0].to_string(),
            p: parts[1].parse().map_err(|_| MmdError::Parse(line.into()))?,
            n: parts[2].parse().map_err(|_| MmdError::Parse(line.into()))?,
            mean_l2: field(3)?,
            stderr: field(4)?,
            failures: parts[5].parse().map_err(|_| MmdError::Parse(line.into()))?,
        });
    }
    Ok(rows)
}

const SVG_COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

/// Minimal SVG line plot: mean l2 error against p, one polyline per method.
pub fn report_svg_string(report: &BenchmarkReport) -> String {
    let (w, h, ml, mb) = (640.0, 480.0, 60.0, 40.0);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(out, "<!-- seed={} -->", report.config.seed);

    let finite: Vec<&BenchRow> = report.rows.iter().filter(|r| r.mean_l2.is_finite()).collect();
    let p_max = finite.iter().map(|r| r.p).max().unwrap_or(1) as f64;
    let p_min = finite.iter().map(|r| r.p).min().unwrap_or(0) as f64;
    let y_max = finite.iter().map(|r| r.mean_l2).fold(0.0f64, f64::max).max(1e-12);
    let x = |p: f64| ml + (p - p_min) / (p_max - p_min).max(1.0) * (w - ml - 20.0);
    let y = |v: f64| (h - mb) - v / y_max * (h - mb - 20.0);

    let _ = writeln!(
        out,
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        h - mb,
        w - 20.0,
        h - mb
    );
    let _ = writeln!(
        out,
        "<line x1=\"{ml}\" y1=\"20\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>",
        h - mb
    );

    let mut methods: Vec<String> = Vec::new();
    for r in &finite {
        if !methods.contains(&r.method) {
            methods.push(r.method.clone());
        }
    }
    for (mi, m) in methods.iter().enumerate() {
        let pts: String = finite
            .iter()
            .filter(|r| &r.method == m)
            .map(|r| format!("{:.2},{:.2}", x(r.p as f64), y(r.mean_l2)))
            .collect::<Vec<_>>()
            .join(" ");
        let color = SVG_COLORS[mi % SVG_COLORS.len()];
        let _ = writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{pts}\"/>"
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\" font-size=\"12\">{m}</text>",
            w - 130.0,
            30.0 + 16.0 * mi as f64
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Write `report.csv`, `report.svg`, and `report.json` into `out_dir`.
pub fn emit_outputs(report: &BenchmarkReport, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("report.csv"), report_csv_string(report))?;
    fs::write(out_dir.join("report.svg"), report_svg_string(report))?;
    crate::io::write_json(&out_dir.join("report.json"), report)?;
    Ok(())
}
