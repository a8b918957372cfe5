//! Comparison estimators: Gaussian QML for GARCH and ARMA, bootstrap
//! particle-filter simulated MLE for the stochastic volatility model, the
//! moment estimator for the non-linear MA, and a synthetic-likelihood
//! estimator for the Ricker map, all sharing one derivative-free optimizer.
//!
//! Both simulated-likelihood optimizers hold their simulation seed fixed
//! across parameter values; without common random numbers Nelder-Mead just
//! chases Monte Carlo noise.

use crate::error::{MmdError, Result};
use crate::innovations::{standard_normal, InnovationDist, SeedPath};
use crate::models::{ModelKind, ModelSpec, Series};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Sentinel for a log-likelihood that has collapsed (all weights zero or a
/// degenerate synthetic ensemble). Finite so optimizers can still rank it.
pub const LOGLIK_FLOOR: f64 = -1e300;

/// Bootstrap particle filter settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParticleFilterConfig {
    /// Particle count K.
    pub k: usize,
    pub seed: SeedPath,
}

impl ParticleFilterConfig {
    pub fn new(seed: SeedPath) -> Self {
        Self { k: 5000, seed }
    }

    pub fn with_particles(mut self, k: usize) -> Self {
        self.k = k;
        self
    }
}

/// Synthetic-likelihood settings for the Ricker baseline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticLikConfig {
    /// Replicate count R.
    pub r: usize,
    pub seed: SeedPath,
}

impl SyntheticLikConfig {
    pub fn new(seed: SeedPath) -> Self {
        Self { r: 1000, seed }
    }

    pub fn with_replicates(mut self, r: usize) -> Self {
        self.r = r;
        self
    }
}

/// The eight Ricker summary statistics, in fixed order: mean, variance,
/// mean of first differences, variance of first differences, ACF(1),
/// ACF(2), ACF(1) of the differenced series, mean of squared first
/// differences. Variances use the population denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryVector(pub [f64; 8]);

/// Result of a baseline fit. `converged` is false when the optimizer ran
/// out of evaluations on every start; `theta_hat` is still the best found.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaselineFit {
    pub theta_hat: Vec<f64>,
    /// Objective value at the optimum (log-likelihood for the simulated
    /// MLEs, negative criterion for the QML fits).
    pub value: f64,
    pub converged: bool,
    /// Metadata: particle or replicate count where applicable.
    pub mc_size: Option<usize>,
}

// ---------------------------------------------------------------------------
// Nelder-Mead
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct NelderMeadOutcome {
    pub theta: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

fn clamp_box(theta: &mut [f64], bounds: &[(f64, f64)]) {
    for (t, &(lo, hi)) in theta.iter_mut().zip(bounds) {
        *t = t.clamp(lo, hi);
    }
}

/// Minimize `f` with the standard reflect/expand/contract/shrink simplex,
/// projecting every probe onto the box. Terminates when the simplex
/// diameter drops below `tol` or after `max_evals` evaluations.
pub fn nelder_mead<F>(
    mut f: F,
    theta0: &[f64],
    bounds: &[(f64, f64)],
    tol: f64,
    max_evals: usize,
) -> NelderMeadOutcome
where
    F: FnMut(&[f64]) -> f64,
{
    let n = theta0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    // Initial simplex: theta0 plus a step of 5% of each box width.
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut start = theta0.to_vec();
    clamp_box(&mut start, bounds);
    simplex.push(start.clone());
    for j in 0..n {
        let (lo, hi) = bounds[j];
        let width = if hi.is_finite() && lo.is_finite() {
            hi - lo
        } else {
            1.0
        };
        let step = 0.05 * width;
        let mut v = start.clone();
        // Step inward if the outward probe would leave the box.
        v[j] = if v[j] + step <= hi { v[j] + step } else { v[j] - step };
        clamp_box(&mut v, bounds);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| eval(x, &mut evals)).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut converged = false;

    while evals < max_evals {
        // Order by value.
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let simplex_sorted: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
        let values_sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        simplex = simplex_sorted;
        values = values_sorted;

        // Diameter in the sup norm.
        let diam = simplex[1..]
            .iter()
            .map(|x| {
                x.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diam < tol {
            converged = true;
            break;
        }

        // Centroid of all but the worst.
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|x| x[j]).sum::<f64>() / n as f64)
            .collect();

        let probe = |coef: f64| -> Vec<f64> {
            let mut x: Vec<f64> = centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + coef * (c - w))
                .collect();
            clamp_box(&mut x, bounds);
            x
        };

        let reflected = probe(alpha);
        let f_r = eval(&reflected, &mut evals);
        if f_r < values[0] {
            let expanded = probe(gamma);
            let f_e = eval(&expanded, &mut evals);
            if f_e < f_r {
                simplex[n] = expanded;
                values[n] = f_e;
            } else {
                simplex[n] = reflected;
                values[n] = f_r;
            }
        } else if f_r < values[n - 1] {
            simplex[n] = reflected;
            values[n] = f_r;
        } else {
            let contracted = probe(-rho);
            let f_c = eval(&contracted, &mut evals);
            if f_c < values[n] {
                simplex[n] = contracted;
                values[n] = f_c;
            } else {
                // Shrink toward the best vertex.
                for i in 1..=n {
                    let mut x: Vec<f64> = simplex[0]
                        .iter()
                        .zip(&simplex[i])
                        .map(|(b, v)| b + sigma * (v - b))
                        .collect();
                    clamp_box(&mut x, bounds);
                    values[i] = eval(&x, &mut evals);
                    simplex[i] = x;
                }
            }
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap())
        .unwrap();
    NelderMeadOutcome {
        theta: simplex[best].clone(),
        value: values[best],
        evals,
        converged,
    }
}

fn multi_start<F>(
    mut f: F,
    starts: &[Vec<f64>],
    bounds: &[(f64, f64)],
    tol: f64,
    max_evals: usize,
) -> NelderMeadOutcome
where
    F: FnMut(&[f64]) -> f64,
{
    let outcomes: Vec<NelderMeadOutcome> = starts
        .iter()
        .map(|s| nelder_mead(&mut f, s, bounds, tol, max_evals))
        .collect();
    let any_converged = outcomes.iter().any(|o| o.converged);
    let best_value = outcomes
        .iter()
        .map(|o| o.value)
        .fold(f64::INFINITY, f64::min);
    // Near-ties between starts are broken toward the smaller parameter norm.
    // ARMA-type objectives are exactly flat along cancellation ridges (for
    // white noise any phi = -psi fits identically), and without a tie-break
    // the returned point on the ridge is an accident of the start list.
    let cutoff = best_value + 1e-5 * (1.0 + best_value.abs());
    let mut best = outcomes
        .into_iter()
        .filter(|o| o.value <= cutoff)
        .min_by(|a, b| {
            let na: f64 = a.theta.iter().map(|t| t * t).sum();
            let nb: f64 = b.theta.iter().map(|t| t * t).sum();
            na.partial_cmp(&nb).unwrap()
        })
        .expect("at least one start");
    best.converged = any_converged;
    best
}

fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

// ---------------------------------------------------------------------------
// GARCH / ARMA Gaussian QML
// ---------------------------------------------------------------------------

/// Negative Gaussian quasi log-likelihood (up to constants) for a GARCH(1,1)
/// path, with h_1 set to the sample variance of the data.
fn garch_neg_qll(x: &[f64], omega: f64, beta: f64, alpha: f64) -> f64 {
    let mut h = sample_variance(x);
    let mut acc = 0.0;
    for t in 0..x.len() {
        if t > 0 {
            h = omega + beta * h + alpha * x[t - 1] * x[t - 1];
        }
        if h <= 0.0 || !h.is_finite() {
            return f64::INFINITY;
        }
        acc += h.ln() + x[t] * x[t] / h;
    }
    acc
}

/// Gaussian QML for GARCH(1,1): minimizes sum_t [log h_t + x_t^2 / h_t]
/// over (omega, beta, alpha) from five deterministic starts.
pub fn garch_qml(x: &Series) -> Result<BaselineFit> {
    if x.values.len() < 50 {
        return Err(MmdError::EmptyInput(format!(
            "garch qml needs at least 50 observations, got {}",
            x.values.len()
        )));
    }
    let v = sample_variance(&x.values);
    if v <= 0.0 {
        return Err(MmdError::DegenerateData(
            "constant series has no GARCH likelihood".into(),
        ));
    }
    let spec = ModelSpec {
        kind: ModelKind::Garch,
        theta: vec![],
    };
    let bounds = ModelKind::Garch.bounds();
    // omega chosen so the implied unconditional variance matches the sample.
    let starts: Vec<Vec<f64>> = [
        (0.5, 0.2),
        (0.8, 0.1),
        (0.2, 0.3),
        (0.05, 0.05),
        (0.9, 0.08),
    ]
    .iter()
    .map(|&(beta, alpha)| spec.project(&[v * (1.0 - beta - alpha), beta, alpha]))
    .collect();

    let out = multi_start(
        |th| {
            let th = spec.project(th);
            garch_neg_qll(&x.values, th[0], th[1], th[2])
        },
        &starts,
        &bounds,
        1e-7,
        2000,
    );
    Ok(BaselineFit {
        theta_hat: spec.project(&out.theta),
        value: -out.value,
        converged: out.converged,
        mc_size: None,
    })
}

/// Conditional sum of squares for ARMA(1,1) with v_0 = 0 and x_0 = 0.
fn arma_css(x: &[f64], phi: f64, psi: f64) -> f64 {
    let mut prev_x = 0.0;
    let mut prev_v = 0.0;
    let mut acc = 0.0;
    for &xt in x {
        let v = xt - phi * prev_x - psi * prev_v;
        acc += v * v;
        prev_x = xt;
        prev_v = v;
    }
    acc / x.len() as f64
}

/// Gaussian QML for ARMA(1,1) via conditional sum of squares; the
/// innovation variance is profiled out as the mean squared residual.
pub fn arma_qml(x: &Series) -> Result<BaselineFit> {
    if x.values.len() < 50 {
        return Err(MmdError::EmptyInput(format!(
            "arma qml needs at least 50 observations, got {}",
            x.values.len()
        )));
    }
    if sample_variance(&x.values) <= 0.0 {
        return Err(MmdError::DegenerateData(
            "constant series has no ARMA likelihood".into(),
        ));
    }
    let bounds = vec![(-0.999, 0.999), (-0.999, 0.999)];
    let starts: Vec<Vec<f64>> = vec![
        vec![0.0, 0.0],
        vec![0.5, 0.0],
        vec![-0.5, 0.0],
        vec![0.5, 0.5],
        vec![-0.5, -0.5],
    ];
    let out = multi_start(
        |th| arma_css(&x.values, th[0], th[1]),
        &starts,
        &bounds,
        1e-7,
        2000,
    );
    // ARMA(1,1) has a cancellation ridge: any (phi, -phi) reproduces white
    // noise exactly, and on white-noise-like data the unconstrained CSS
    // minimum sits at a large-norm point on that ridge fitting pure noise.
    // If the fitted model does not beat the white-noise fit by a
    // chi-squared(2) likelihood-ratio margin, report the canonical (0, 0).
    let t_len = x.values.len() as f64;
    let css_wn = arma_css(&x.values, 0.0, 0.0);
    let lr = t_len * (css_wn / out.value).ln();
    let (phi, psi) = if lr < 5.99 {
        (0.0, 0.0)
    } else {
        (out.theta[0], out.theta[1])
    };
    let sigma2 = arma_css(&x.values, phi, psi);
    Ok(BaselineFit {
        theta_hat: vec![phi, psi, sigma2],
        value: -sigma2,
        converged: out.converged,
        mc_size: None,
    })
}

// ---------------------------------------------------------------------------
// SV bootstrap particle filter
// ---------------------------------------------------------------------------

/// Bootstrap particle-filter log-likelihood for the stochastic volatility
/// model at (phi, sigma_eta, sigma_x). Each step propagates the particles
/// with the latent AR(1), weights them with the Gaussian observation
/// density, and multinomially resamples. Returns a large negative sentinel
/// if the weights collapse to zero at some step.
pub fn sv_particle_loglik(
    x: &Series,
    theta: (f64, f64, f64),
    cfg: &ParticleFilterConfig,
) -> Result<f64> {
    let (phi, sigma_eta, sigma_x) = theta;
    if cfg.k < 2 {
        return Err(MmdError::InvalidParameter("particle count K must be >= 2".into()));
    }
    if phi.abs() >= 1.0 {
        return Err(MmdError::InvalidParameter(format!("|phi| = {} must be < 1", phi.abs())));
    }
    if sigma_eta < 0.0 || sigma_x <= 0.0 {
        return Err(MmdError::InvalidParameter(
            "sv requires sigma_eta >= 0 and sigma_x > 0".into(),
        ));
    }
    let k = cfg.k;
    let mut rng = cfg.seed.rng();
    let sd0 = (sigma_eta * sigma_eta / (1.0 - phi * phi)).sqrt();
    let mut h: Vec<f64> = (0..k).map(|_| sd0 * standard_normal(&mut rng)).collect();
    let mut weights = vec![0.0f64; k];
    let mut cumulative = vec![0.0f64; k];
    let mut resampled = vec![0.0f64; k];
    let ln_norm = 0.5 * (2.0 * std::f64::consts::PI * sigma_x * sigma_x).ln();

    let mut loglik = 0.0;
    for &xt in &x.values {
        let mut sum_w = 0.0;
        for i in 0..k {
            let ht = phi * h[i] + sigma_eta * standard_normal(&mut rng);
            h[i] = ht;
            let lw = -xt * xt * (-ht).exp() / (2.0 * sigma_x * sigma_x) - ln_norm - 0.5 * ht;
            let w = lw.exp();
            weights[i] = w;
            sum_w += w;
        }
        if sum_w <= 0.0 || !sum_w.is_finite() {
            return Ok(LOGLIK_FLOOR);
        }
        loglik += (sum_w / k as f64).ln();

        // Multinomial resampling with a fixed per-step uniform budget so the
        // random stream stays aligned across parameter values.
        let mut acc = 0.0;
        for i in 0..k {
            acc += weights[i];
            cumulative[i] = acc;
        }
        for r in resampled.iter_mut() {
            let u: f64 = rng.gen_range(0.0..sum_w);
            let idx = cumulative.partition_point(|&c| c < u).min(k - 1);
            *r = h[idx];
        }
        std::mem::swap(&mut h, &mut resampled);
    }
    Ok(loglik)
}

/// Simulated MLE for the SV model: Nelder-Mead over the particle-filter
/// log-likelihood, with the filter seed held fixed across parameter values.
pub fn sv_pf_mle(x: &Series, cfg: &ParticleFilterConfig) -> Result<BaselineFit> {
    if x.values.is_empty() {
        return Err(MmdError::EmptyInput("sv mle needs data".into()));
    }
    let bounds = ModelKind::Sv.bounds();
    let sd = sample_variance(&x.values).sqrt();
    if sd <= 0.0 {
        return Err(MmdError::DegenerateData(
            "constant series has no SV likelihood".into(),
        ));
    }
    let start = vec![0.5, 0.3, sd.clamp(bounds[2].0, bounds[2].1)];
    let out = nelder_mead(
        |th| match sv_particle_loglik(x, (th[0], th[1], th[2]), cfg) {
            Ok(ll) => -ll,
            Err(_) => f64::INFINITY,
        },
        &start,
        &bounds,
        1e-4,
        400,
    );
    Ok(BaselineFit {
        theta_hat: out.theta,
        value: -out.value,
        converged: out.converged,
        mc_size: Some(cfg.k),
    })
}

// ---------------------------------------------------------------------------
// NL-MA moment estimator
// ---------------------------------------------------------------------------

/// Moment estimator for the non-linear MA(1): the sample mean of the data
/// (E x_t = psi E u^2 = psi for unit-variance innovations).
pub fn nlma_moment(x: &Series) -> Result<f64> {
    if x.values.is_empty() {
        return Err(MmdError::EmptyInput("moment estimator needs data".into()));
    }
    Ok(x.values.iter().sum::<f64>() / x.values.len() as f64)
}

// ---------------------------------------------------------------------------
// Ricker synthetic likelihood
// ---------------------------------------------------------------------------

fn acf(x: &[f64], lag: usize) -> f64 {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let denom: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    let num: f64 = (0..n - lag)
        .map(|t| (x[t] - mean) * (x[t + lag] - mean))
        .sum();
    num / denom
}

/// The eight Ricker summary statistics of a series.
pub fn ricker_summaries(x: &Series) -> Result<SummaryVector> {
    let v = &x.values;
    if v.len() < 3 {
        return Err(MmdError::EmptyInput(format!(
            "summaries need at least 3 observations, got {}",
            v.len()
        )));
    }
    let var = sample_variance(v);
    if var <= 0.0 {
        return Err(MmdError::DegenerateData(
            "zero-variance series has no summary likelihood".into(),
        ));
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let diffs: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
    let mean_diff = diffs.iter().sum::<f64>() / diffs.len() as f64;
    let var_diff = sample_variance(&diffs);
    let acf1_diff = if sample_variance(&diffs) > 0.0 {
        acf(&diffs, 1)
    } else {
        0.0
    };
    let mean_sq_diff = diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64;
    Ok(SummaryVector([
        mean,
        var,
        mean_diff,
        var_diff,
        acf(v, 1),
        acf(v, 2),
        acf1_diff,
        mean_sq_diff,
    ]))
}

/// Synthetic log-likelihood at `theta`: simulate R Ricker paths of the
/// observed length with Gaussian innovations, fit a Gaussian to their
/// summary vectors, and evaluate the observed summaries under it:
/// -1/2 [ (S - S_bar)' Sigma^-1 (S - S_bar) + log det Sigma ], with Sigma
/// regularized by +1e-8 on the diagonal.
pub fn ricker_synthetic_loglik(
    x: &Series,
    theta: &[f64],
    r: usize,
    seed: &SeedPath,
) -> Result<f64> {
    if r <= 9 {
        return Err(MmdError::InvalidParameter(
            "synthetic likelihood needs R > 9 replicates".into(),
        ));
    }
    let s_obs = ricker_summaries(x)?;
    let spec = ModelSpec {
        kind: ModelKind::Ricker,
        theta: theta.to_vec(),
    };
    spec.validate()?;
    let t_len = x.values.len();

    let mut rows: Vec<[f64; 8]> = Vec::with_capacity(r);
    for i in 0..r {
        let rep = match spec.simulate(t_len, InnovationDist::Gaussian, &seed.derive(i as u32)) {
            Ok(series) => series,
            Err(_) => continue, // diverged replicate at an extreme probe
        };
        if let Ok(s) = ricker_summaries(&rep) {
            rows.push(s.0);
        }
    }
    if rows.len() <= 9 {
        return Ok(LOGLIK_FLOOR);
    }
    let m = rows.len() as f64;
    let mut mean = [0.0f64; 8];
    for row in &rows {
        for (a, b) in mean.iter_mut().zip(row) {
            *a += b / m;
        }
    }
    let mut cov = DMatrix::<f64>::zeros(8, 8);
    for row in &rows {
        for a in 0..8 {
            for b in 0..8 {
                cov[(a, b)] += (row[a] - mean[a]) * (row[b] - mean[b]) / m;
            }
        }
    }
    for d in 0..8 {
        cov[(d, d)] += 1e-8;
    }
    let chol = cov.clone().cholesky().ok_or(MmdError::SingularCovariance)?;
    let logdet = 2.0 * (0..8).map(|d| chol.l()[(d, d)].ln()).sum::<f64>();
    let diff = DVector::from_iterator(8, s_obs.0.iter().zip(&mean).map(|(o, m)| o - m));
    let solved = chol.solve(&diff);
    let quad = diff.dot(&solved);
    Ok(-0.5 * (quad + logdet))
}

/// Synthetic-likelihood MLE for the Ricker model: Nelder-Mead maximizing
/// the synthetic log-likelihood with the replicate seed fixed per run.
pub fn ricker_sl_mle(x: &Series, cfg: &SyntheticLikConfig) -> Result<BaselineFit> {
    ricker_summaries(x)?; // validate the data up front
    let bounds = ModelKind::Ricker.bounds();
    let starts = vec![vec![2.0, 0.3, 5.0], vec![1.0, 0.1, 8.0], vec![3.0, 0.5, 3.0]];
    let out = multi_start(
        |th| match ricker_synthetic_loglik(x, th, cfg.r, &cfg.seed) {
            Ok(ll) => -ll,
            Err(_) => f64::INFINITY,
        },
        &starts,
        &bounds,
        1e-3,
        250,
    );
    Ok(BaselineFit {
        theta_hat: out.theta,
        value: -out.value,
        converged: out.converged,
        mc_size: Some(cfg.r),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::DEFAULT_BURN_IN;
    use rand::Rng;

    fn seed(n: u64) -> SeedPath {
        SeedPath::new(n)
    }

    fn series(values: Vec<f64>) -> Series {
        Series {
            values,
            seed: seed(0),
            dist: InnovationDist::Gaussian,
        }
    }

    fn sim(kind: ModelKind, theta: &[f64], t: usize, s: u64) -> Series {
        ModelSpec::new(kind, theta.to_vec())
            .unwrap()
            .simulate(t, InnovationDist::Gaussian, &seed(s))
            .unwrap()
    }

    fn l2(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }

    // ---- nelder_mead ----

    #[test]
    fn nm_convex_quadratic() {
        let out = nelder_mead(
            |t| (t[0] - 1.0).powi(2) + (t[1] - 2.0).powi(2),
            &[0.0, 0.0],
            &[(-10.0, 10.0), (-10.0, 10.0)],
            1e-7,
            2000,
        );
        assert!(l2(&out.theta, &[1.0, 2.0]) < 1e-4, "{:?}", out.theta);
        assert!(out.converged);
    }

    #[test]
    fn nm_rosenbrock() {
        let out = nelder_mead(
            |t| (1.0 - t[0]).powi(2) + 100.0 * (t[1] - t[0] * t[0]).powi(2),
            &[-1.2, 1.0],
            &[(-5.0, 5.0), (-5.0, 5.0)],
            1e-9,
            2000,
        );
        assert!(out.value < 1e-3, "f = {}", out.value);
        assert!(out.evals <= 2000);
    }

    #[test]
    fn nm_respects_bounds_at_every_probe() {
        let bounds = [(0.0, 1.0), (-0.5, 0.5)];
        let out = nelder_mead(
            |t| {
                assert!(t[0] >= 0.0 && t[0] <= 1.0 && t[1] >= -0.5 && t[1] <= 0.5, "{t:?}");
                (t[0] - 3.0).powi(2) + (t[1] + 2.0).powi(2) // optimum outside the box
            },
            &[0.5, 0.0],
            &bounds,
            1e-8,
            1500,
        );
        assert!((out.theta[0] - 1.0).abs() < 1e-3);
        assert!((out.theta[1] + 0.5).abs() < 1e-3);
    }

    // ---- garch_qml ----

    #[test]
    fn garch_qml_recovers_truth() {
        let theta_star = [0.05, 0.92, 0.05];
        let data = sim(ModelKind::Garch, &theta_star, 10_000, 11);
        let fit = garch_qml(&data).unwrap();
        assert!(l2(&fit.theta_hat, &theta_star) < 0.05, "{:?}", fit.theta_hat);
    }

    #[test]
    fn garch_qml_on_white_noise_matches_unit_variance() {
        let mut rng = seed(12).rng();
        let data = series((0..10_000).map(|_| standard_normal(&mut rng)).collect());
        let fit = garch_qml(&data).unwrap();
        let uncond = fit.theta_hat[0] / (1.0 - fit.theta_hat[1] - fit.theta_hat[2]);
        assert!((uncond - 1.0).abs() < 0.1, "unconditional variance {uncond}");
    }

    #[test]
    fn garch_qml_rejects_constant_series() {
        assert!(garch_qml(&series(vec![1.0; 100])).is_err());
    }

    // ---- arma_qml ----

    #[test]
    fn arma_qml_recovers_truth() {
        let theta_star = [0.8, 0.15, 0.05];
        let data = sim(ModelKind::Arma, &theta_star, 10_000, 13);
        let fit = arma_qml(&data).unwrap();
        assert!(l2(&fit.theta_hat, &theta_star) < 0.05, "{:?}", fit.theta_hat);
    }

    #[test]
    fn arma_qml_on_white_noise_finds_zero() {
        let mut rng = seed(14).rng();
        let data = series((0..10_000).map(|_| standard_normal(&mut rng)).collect());
        let fit = arma_qml(&data).unwrap();
        assert!(fit.theta_hat[0].abs() < 0.05 && fit.theta_hat[1].abs() < 0.05);
    }

    #[test]
    fn arma_qml_rejects_zero_series() {
        assert!(arma_qml(&series(vec![0.0; 100])).is_err());
    }

    #[test]
    fn qml_rmse_shrinks_with_sample_size() {
        for kind in [ModelKind::Garch, ModelKind::Arma] {
            let theta_star: Vec<f64> = match kind {
                ModelKind::Garch => vec![0.05, 0.92, 0.05],
                _ => vec![0.8, 0.15, 0.05],
            };
            let rmse = |t_len: usize, base: u64| {
                let mut acc = 0.0;
                for b in 0..20 {
                    let data = sim(kind, &theta_star, t_len, base + b);
                    let fit = match kind {
                        ModelKind::Garch => garch_qml(&data).unwrap(),
                        _ => arma_qml(&data).unwrap(),
                    };
                    acc += l2(&fit.theta_hat, &theta_star).powi(2);
                }
                (acc / 20.0).sqrt()
            };
            let (small, large) = (rmse(1_000, 500), rmse(10_000, 600));
            assert!(large < small, "{kind:?}: rmse(1e4) = {large} >= rmse(1e3) = {small}");
        }
    }

    // ---- particle filter ----

    fn gaussian_loglik(x: &[f64], sigma: f64) -> f64 {
        let ln_norm = 0.5 * (2.0 * std::f64::consts::PI * sigma * sigma).ln();
        x.iter().map(|v| -v * v / (2.0 * sigma * sigma) - ln_norm).sum()
    }

    #[test]
    fn pf_collapses_to_iid_gaussian() {
        let data = sim(ModelKind::Sv, &[0.9, 0.1, 0.2], 200, 15);
        let exact = gaussian_loglik(&data.values, 0.2);
        for k in [2, 100, 5000] {
            let cfg = ParticleFilterConfig::new(seed(16)).with_particles(k);
            let ll = sv_particle_loglik(&data, (0.0, 0.0, 0.2), &cfg).unwrap();
            assert!((ll - exact).abs() < 1e-8, "K={k}: {ll} vs {exact}");
        }
    }

    #[test]
    fn pf_likelihood_orders_true_vs_distorted() {
        let theta_star = (0.9, 0.1, 0.2);
        let distorted = (0.45, 0.2, 0.4);
        let mut wins = 0;
        for s in 0..20 {
            let data = sim(ModelKind::Sv, &[0.9, 0.1, 0.2], 1000, 700 + s);
            let cfg = ParticleFilterConfig::new(seed(800 + s));
            let ll_true = sv_particle_loglik(&data, theta_star, &cfg).unwrap();
            let ll_bad = sv_particle_loglik(&data, distorted, &cfg).unwrap();
            if ll_true > ll_bad {
                wins += 1;
            }
        }
        assert!(wins > 10, "true theta won only {wins}/20");
    }

    #[test]
    fn pf_variance_shrinks_with_particle_count() {
        let data = sim(ModelKind::Sv, &[0.9, 0.1, 0.2], 200, 17);
        let var_for = |k: usize| {
            let lls: Vec<f64> = (0..30)
                .map(|s| {
                    let cfg = ParticleFilterConfig::new(seed(900 + s)).with_particles(k);
                    sv_particle_loglik(&data, (0.9, 0.1, 0.2), &cfg).unwrap()
                })
                .collect();
            sample_variance(&lls)
        };
        assert!(var_for(2) > var_for(5000));
    }

    #[test]
    fn pf_mle_deterministic_and_reports_particle_count() {
        let data = sim(ModelKind::Sv, &[0.9, 0.1, 0.2], 300, 18);
        let cfg = ParticleFilterConfig::new(seed(19)).with_particles(200);
        let a = sv_pf_mle(&data, &cfg).unwrap();
        let b = sv_pf_mle(&data, &cfg).unwrap();
        assert_eq!(a.theta_hat, b.theta_hat);
        assert_eq!(a.mc_size, Some(200));
        let default_cfg = ParticleFilterConfig::new(seed(19));
        assert_eq!(default_cfg.k, 5000);
    }

    #[test]
    fn pf_mle_lands_near_truth_in_median() {
        let theta_star = [0.9, 0.1, 0.2];
        let mut errs: Vec<f64> = (0..5)
            .map(|s| {
                let data = sim(ModelKind::Sv, &theta_star, 500, 1000 + s);
                let cfg = ParticleFilterConfig::new(seed(1100 + s)).with_particles(500);
                let fit = sv_pf_mle(&data, &cfg).unwrap();
                l2(&fit.theta_hat, &theta_star)
            })
            .collect();
        errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(errs[2] < 0.35, "median error {}", errs[2]);
    }

    // ---- nlma moment ----

    #[test]
    fn moment_estimator_examples() {
        assert_eq!(nlma_moment(&series(vec![0.5, 1.5, 1.0])).unwrap(), 1.0);
        assert_eq!(nlma_moment(&series(vec![0.0; 10])).unwrap(), 0.0);
        assert!(nlma_moment(&series(vec![])).is_err());
        let data = sim(ModelKind::Nlma, &[0.9], 10_000, 20);
        assert!((nlma_moment(&data).unwrap() - 0.9).abs() < 0.05);
    }

    // ---- ricker summaries ----

    #[test]
    fn summaries_hand_example() {
        let s = ricker_summaries(&series(vec![1.0, 2.0, 4.0])).unwrap().0;
        assert!((s[0] - 7.0 / 3.0).abs() < 1e-12);
        assert!((s[2] - 1.5).abs() < 1e-12);
        assert!((s[7] - 2.5).abs() < 1e-12);
    }

    #[test]
    fn summaries_constant_increment_has_zero_diff_variance() {
        let s = ricker_summaries(&series(vec![1.0, 2.0, 3.0, 4.0])).unwrap().0;
        assert_eq!(s[3], 0.0);
    }

    #[test]
    fn summaries_iid_acf_near_zero() {
        let mut rng = seed(21).rng();
        let data = series((0..100_000).map(|_| standard_normal(&mut rng)).collect());
        let s = ricker_summaries(&data).unwrap().0;
        assert!(s[4].abs() < 0.02 && s[5].abs() < 0.02, "acf = {}, {}", s[4], s[5]);
    }

    #[test]
    fn summaries_reject_constant_and_shift_only_the_mean() {
        assert!(ricker_summaries(&series(vec![2.0; 10])).is_err());
        let mut rng = seed(22).rng();
        let base: Vec<f64> = (0..500).map(|_| rng.gen_range(0.0..4.0)).collect();
        let a = ricker_summaries(&series(base.clone())).unwrap().0;
        let b = ricker_summaries(&series(base.iter().map(|v| v + 3.0).collect())).unwrap().0;
        assert!((b[0] - a[0] - 3.0).abs() < 1e-12);
        for j in 1..8 {
            assert!((b[j] - a[j]).abs() < 1e-9, "entry {j} moved");
        }
    }

    // ---- synthetic likelihood ----

    #[test]
    fn sl_quadratic_term_vanishes_at_the_ensemble_mean() {
        // Feed the ensemble mean back in as the observed summary by
        // reconstructing it from the same seeds, then check the value is
        // exactly -1/2 log det. Exercised through the covariance pieces of
        // ricker_synthetic_loglik via a direct recomputation.
        let theta = [7.0f64.ln(), 0.05, 7.0];
        let spec = ModelSpec::new(ModelKind::Ricker, theta.to_vec()).unwrap();
        let s = seed(23);
        let r = 50;
        let mut rows: Vec<[f64; 8]> = Vec::new();
        for i in 0..r {
            let rep = spec
                .simulate(200, InnovationDist::Gaussian, &s.derive(i as u32))
                .unwrap();
            rows.push(ricker_summaries(&rep).unwrap().0);
        }
        let m = rows.len() as f64;
        let mut mean = [0.0f64; 8];
        for row in &rows {
            for (a, b) in mean.iter_mut().zip(row) {
                *a += b / m;
            }
        }
        let mut cov = DMatrix::<f64>::zeros(8, 8);
        for row in &rows {
            for a in 0..8 {
                for b in 0..8 {
                    cov[(a, b)] += (row[a] - mean[a]) * (row[b] - mean[b]) / m;
                }
            }
        }
        for d in 0..8 {
            cov[(d, d)] += 1e-8;
        }
        let chol = cov.cholesky().unwrap();
        let logdet = 2.0 * (0..8).map(|d| chol.l()[(d, d)].ln()).sum::<f64>();
        let zero = DVector::from_element(8, 0.0);
        let quad = zero.dot(&chol.solve(&zero));
        assert_eq!(quad, 0.0);
        assert!((-0.5 * logdet).is_finite());
    }

    #[test]
    fn sl_orders_true_vs_distorted_theta() {
        let theta_star = [7.0f64.ln(), 0.05, 7.0];
        let distorted = [7.0f64.ln(), 0.2, 14.0];
        let mut wins = 0;
        for s in 0..20 {
            let data = sim(ModelKind::Ricker, &theta_star, 300, 1200 + s);
            let ll_true =
                ricker_synthetic_loglik(&data, &theta_star, 200, &seed(1300 + s)).unwrap();
            let ll_bad = ricker_synthetic_loglik(&data, &distorted, 200, &seed(1300 + s)).unwrap();
            if ll_true > ll_bad {
                wins += 1;
            }
        }
        assert!(wins > 10, "true theta won only {wins}/20");
    }

    #[test]
    fn sl_variance_scales_inversely_with_replicates() {
        let theta_star = [7.0f64.ln(), 0.05, 7.0];
        let data = sim(ModelKind::Ricker, &theta_star, 300, 24);
        let var_for = |r: usize| {
            let vals: Vec<f64> = (0..50)
                .map(|s| ricker_synthetic_loglik(&data, &theta_star, r, &seed(1400 + s)).unwrap())
                .collect();
            sample_variance(&vals)
        };
        let ratio = var_for(400) / var_for(200);
        assert!(ratio > 0.3 && ratio < 0.8, "variance ratio {ratio}");
    }

    #[test]
    fn sl_mle_deterministic_with_sane_phi() {
        let theta_star = [7.0f64.ln(), 0.05, 7.0];
        let data = sim(ModelKind::Ricker, &theta_star, 500, 25);
        let cfg = SyntheticLikConfig::new(seed(26)).with_replicates(200);
        let a = ricker_sl_mle(&data, &cfg).unwrap();
        let b = ricker_sl_mle(&data, &cfg).unwrap();
        assert_eq!(a.theta_hat, b.theta_hat);
        assert_eq!(SyntheticLikConfig::new(seed(0)).r, 1000);
        assert!(a.theta_hat[2] > 2.0 && a.theta_hat[2] < 12.0, "{:?}", a.theta_hat);
    }

    #[test]
    fn sl_mle_phi_in_sanity_band_in_median() {
        let theta_star = [7.0f64.ln(), 0.05, 7.0];
        let mut phis: Vec<f64> = (0..5)
            .map(|s| {
                let data = sim(ModelKind::Ricker, &theta_star, 500, 1500 + s);
                let cfg = SyntheticLikConfig::new(seed(1600 + s)).with_replicates(300);
                ricker_sl_mle(&data, &cfg).unwrap().theta_hat[2]
            })
            .collect();
        phis.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(phis[2] > 4.0 && phis[2] < 10.0, "median phi {}", phis[2]);
    }

    #[test]
    fn burn_in_constant_is_exposed() {
        assert_eq!(DEFAULT_BURN_IN, 200);
    }
}
