//! Forward simulators for the five data-generating processes.
//!
//! Each model is a map x_t = psi(theta; innovations), so the same code path
//! produces observed data and synthetic samples inside the estimator. All
//! simulators are pure functions of (theta, seed): calling twice with the
//! same arguments yields identical paths.

use crate::error::{MmdError, Result};
use crate::innovations::{standard_normal, InnovationDist, SeedPath};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// Burn-in discarded before recording ARMA, GARCH and PSMMD-style paths.
/// The SV simulator draws its latent state from the exact stationary law and
/// the Ricker model starts at N_0 = 1, so neither uses a burn-in.
pub const DEFAULT_BURN_IN: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    Sv,
    Garch,
    Arma,
    Nlma,
    Ricker,
}

impl ModelKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sv" => Some(Self::Sv),
            "garch" => Some(Self::Garch),
            "arma" => Some(Self::Arma),
            "nlma" | "nl-ma" => Some(Self::Nlma),
            "ricker" => Some(Self::Ricker),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Sv => "sv",
            Self::Garch => "garch",
            Self::Arma => "arma",
            Self::Nlma => "nlma",
            Self::Ricker => "ricker",
        }
    }

    /// Parameter dimension.
    pub fn dim(&self) -> usize {
        match self {
            Self::Nlma => 1,
            _ => 3,
        }
    }

    /// Per-coordinate closed box constraints used for validation and for
    /// projecting optimizer iterates.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        match self {
            // (phi, sigma_eta, sigma_x)
            Self::Sv => vec![(-0.999, 0.999), (0.0, 1.0), (1e-3, 1.0)],
            // (omega, beta, alpha); alpha + beta <= 0.999 enforced in project()
            Self::Garch => vec![(1e-6, 1.0), (0.0, 0.999), (0.0, 0.999)],
            // (phi, psi, sigma2_u)
            Self::Arma => vec![(-0.999, 0.999), (-0.999, 0.999), (1e-6, 1.0)],
            // psi
            Self::Nlma => vec![(-2.0, 2.0)],
            // (log r, sigma_u, phi)
            Self::Ricker => vec![(0.0, 5.0), (0.0, 1.0), (1e-3, 15.0)],
        }
    }
}

/// A parametric model with its current parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub theta: Vec<f64>,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, theta: Vec<f64>) -> Result<Self> {
        let spec = Self { kind, theta };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_theta(&self, theta: &[f64]) -> Self {
        Self {
            kind: self.kind,
            theta: theta.to_vec(),
        }
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.kind.bounds()
    }

    pub fn validate(&self) -> Result<()> {
        let bounds = self.bounds();
        if self.theta.len() != bounds.len() {
            return Err(MmdError::DimensionMismatch {
                expected: bounds.len(),
                got: self.theta.len(),
            });
        }
        for (j, (&t, &(lo, hi))) in self.theta.iter().zip(&bounds).enumerate() {
            if !t.is_finite() || t < lo || t > hi {
                return Err(MmdError::InvalidParameter(format!(
                    "{} theta[{j}] = {t} outside [{lo}, {hi}]",
                    self.kind.name()
                )));
            }
        }
        if self.kind == ModelKind::Garch && self.theta[1] + self.theta[2] >= 1.0 {
            return Err(MmdError::InvalidParameter(format!(
                "garch alpha + beta = {} >= 1",
                self.theta[1] + self.theta[2]
            )));
        }
        Ok(())
    }

    /// Project a candidate parameter onto the feasible box, including the
    /// GARCH stationarity region alpha + beta <= 0.999.
    pub fn project(&self, theta: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = theta
            .iter()
            .zip(self.bounds())
            .map(|(&t, (lo, hi))| t.clamp(lo, hi))
            .collect();
        if self.kind == ModelKind::Garch {
            let s = out[1] + out[2];
            if s > 0.999 {
                out[1] *= 0.999 / s;
                out[2] *= 0.999 / s;
            }
        }
        out
    }

    /// Dispatch to the model's simulator.
    pub fn simulate(&self, t_len: usize, dist: InnovationDist, seed: &SeedPath) -> Result<Series> {
        self.validate()?;
        match self.kind {
            ModelKind::Sv => simulate_sv(
                (self.theta[0], self.theta[1], self.theta[2]),
                t_len,
                dist,
                seed,
            ),
            ModelKind::Garch => simulate_garch(
                (self.theta[0], self.theta[1], self.theta[2]),
                t_len,
                dist,
                seed,
            ),
            ModelKind::Arma => simulate_arma(
                (self.theta[0], self.theta[1], self.theta[2]),
                t_len,
                dist,
                seed,
            ),
            ModelKind::Nlma => simulate_nlma(self.theta[0], t_len, dist, seed),
            ModelKind::Ricker => simulate_ricker(
                (self.theta[0], self.theta[1], self.theta[2]),
                t_len,
                dist,
                seed,
            ),
        }
    }
}

/// A simulated or observed univariate path together with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub values: Vec<f64>,
    pub seed: SeedPath,
    pub dist: InnovationDist,
}

impl Series {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(MmdError::DegenerateData(
            "simulated path contains non-finite values".into(),
        ));
    }
    Ok(())
}

/// Stochastic volatility: x_t = sigma_x exp(h_t/2) v_t, h_t = phi h_{t-1} + sigma_eta eta_t,
/// with the latent state initialized at its stationary law. The observation
/// innovation v_t is always Gaussian; only eta_t follows `dist`.
pub fn simulate_sv(
    (phi, sigma_eta, sigma_x): (f64, f64, f64),
    t_len: usize,
    dist: InnovationDist,
    seed: &SeedPath,
) -> Result<Series> {
    if phi.abs() >= 1.0 {
        return Err(MmdError::InvalidParameter(format!("sv |phi| = {} >= 1", phi.abs())));
    }
    if sigma_eta < 0.0 || sigma_x <= 0.0 {
        return Err(MmdError::InvalidParameter(
            "sv requires sigma_eta >= 0 and sigma_x > 0".into(),
        ));
    }
    let mut rng_v = seed.derive(0).rng();
    let mut rng_eta = seed.derive(1).rng();
    let mut h = sigma_eta / (1.0 - phi * phi).sqrt() * standard_normal(&mut rng_eta);
    let mut values = Vec::with_capacity(t_len);
    for _ in 0..t_len {
        h = phi * h + sigma_eta * dist.sample(&mut rng_eta);
        values.push(sigma_x * (0.5 * h).exp() * standard_normal(&mut rng_v));
    }
    check_finite(&values)?;
    Ok(Series {
        values,
        seed: seed.clone(),
        dist,
    })
}

/// GARCH(1,1) recursion on a given innovation path, h_1 at the unconditional
/// variance omega / (1 - alpha - beta). Returns (x, h).
fn garch_recursion(omega: f64, beta: f64, alpha: f64, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut x = Vec::with_capacity(u.len());
    let mut h = Vec::with_capacity(u.len());
    let mut ht = omega / (1.0 - alpha - beta);
    let mut prev_x = 0.0;
    for (t, &ut) in u.iter().enumerate() {
        if t > 0 {
            ht = omega + beta * ht + alpha * prev_x * prev_x;
        }
        prev_x = ht.sqrt() * ut;
        x.push(prev_x);
        h.push(ht);
    }
    (x, h)
}

/// GARCH(1,1): x_t = sqrt(h_t) u_t, h_t = omega + beta h_{t-1} + alpha x_{t-1}^2.
pub fn simulate_garch(
    (omega, beta, alpha): (f64, f64, f64),
    t_len: usize,
    dist: InnovationDist,
    seed: &SeedPath,
) -> Result<Series> {
    if omega <= 0.0 {
        return Err(MmdError::InvalidParameter("garch omega must be positive".into()));
    }
    if alpha < 0.0 || beta < 0.0 || alpha + beta >= 1.0 {
        return Err(MmdError::InvalidParameter(format!(
            "garch requires alpha, beta >= 0 and alpha + beta < 1, got {}",
            alpha + beta
        )));
    }
    let total = t_len + DEFAULT_BURN_IN;
    let mut rng = seed.derive(0).rng();
    let u: Vec<f64> = (0..total).map(|_| dist.sample(&mut rng)).collect();
    let (x, _) = garch_recursion(omega, beta, alpha, &u);
    let values = x[DEFAULT_BURN_IN..].to_vec();
    check_finite(&values)?;
    Ok(Series {
        values,
        seed: seed.clone(),
        dist,
    })
}

fn arma_recursion(phi: f64, psi: f64, sigma2: f64, u: &[f64]) -> Vec<f64> {
    let s = sigma2.sqrt();
    let mut x = Vec::with_capacity(u.len());
    let mut prev_x = 0.0;
    let mut prev_v = 0.0;
    for &ut in u {
        let v = s * ut;
        let xt = phi * prev_x + v + psi * prev_v;
        x.push(xt);
        prev_x = xt;
        prev_v = v;
    }
    x
}

/// ARMA(1,1): x_t = phi x_{t-1} + v_t + psi v_{t-1}, v_t = sqrt(sigma2_u) u_t,
/// initialized at zero and recorded after a burn-in.
pub fn simulate_arma(
    (phi, psi, sigma2_u): (f64, f64, f64),
    t_len: usize,
    dist: InnovationDist,
    seed: &SeedPath,
) -> Result<Series> {
    if phi.abs() >= 1.0 {
        return Err(MmdError::InvalidParameter(format!("arma |phi| = {} >= 1", phi.abs())));
    }
    if sigma2_u < 0.0 {
        return Err(MmdError::InvalidParameter("arma sigma2_u must be nonnegative".into()));
    }
    let total = t_len + DEFAULT_BURN_IN;
    let mut rng = seed.derive(0).rng();
    let u: Vec<f64> = (0..total).map(|_| dist.sample(&mut rng)).collect();
    let x = arma_recursion(phi, psi, sigma2_u, &u);
    let values = x[DEFAULT_BURN_IN..].to_vec();
    check_finite(&values)?;
    Ok(Series {
        values,
        seed: seed.clone(),
        dist,
    })
}

fn nlma_map(psi: f64, u: &[f64]) -> Vec<f64> {
    // u[0] is the presample innovation; x_t = u_t + psi u_{t-1}^2.
    u.windows(2).map(|w| w[1] + psi * w[0] * w[0]).collect()
}

/// Non-linear MA(1): x_t = u_t + psi u_{t-1}^2 with one presample innovation.
pub fn simulate_nlma(
    psi: f64,
    t_len: usize,
    dist: InnovationDist,
    seed: &SeedPath,
) -> Result<Series> {
    let mut rng = seed.derive(0).rng();
    let u: Vec<f64> = (0..t_len + 1).map(|_| dist.sample(&mut rng)).collect();
    let values = nlma_map(psi, &u);
    check_finite(&values)?;
    Ok(Series {
        values,
        seed: seed.clone(),
        dist,
    })
}

/// Ricker: log N_t = log r + log N_{t-1} - N_{t-1} + sigma_u u_t, N_0 = 1,
/// observations x_t ~ Poisson(phi N_t). The latent recursion runs in the log
/// domain; each observation owns its own Poisson stream so that innovation
/// draws stay aligned across nearby parameter values.
pub fn simulate_ricker(
    (log_r, sigma_u, phi): (f64, f64, f64),
    t_len: usize,
    dist: InnovationDist,
    seed: &SeedPath,
) -> Result<Series> {
    if phi <= 0.0 {
        return Err(MmdError::InvalidParameter("ricker phi must be positive".into()));
    }
    if sigma_u < 0.0 {
        return Err(MmdError::InvalidParameter("ricker sigma_u must be nonnegative".into()));
    }
    let mut rng_u = seed.derive(0).rng();
    let pois_base = seed.derive(1).rng();
    let mut log_n = 0.0_f64; // N_0 = 1
    let mut values = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let n_prev = log_n.exp();
        log_n = log_r + log_n - n_prev + sigma_u * dist.sample(&mut rng_u);
        let intensity = phi * log_n.exp();
        if !(intensity.is_finite() && intensity <= 1e9) {
            return Err(MmdError::DivergedIntensity {
                intensity,
                step: t + 1,
            });
        }
        let mut rng_p = pois_base.clone();
        rng_p.set_stream(t as u64 + 1);
        values.push(sample_poisson(intensity, &mut rng_p) as f64);
    }
    Ok(Series {
        values,
        seed: seed.clone(),
        dist,
    })
}

/// Poisson sampling: multiplication method for small intensities, Hormann's
/// transformed rejection (PTRS) for large ones.
pub(crate) fn sample_poisson(lambda: f64, rng: &mut ChaCha12Rng) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    if lambda < 10.0 {
        let limit = (-lambda).exp();
        let mut prod: f64 = 1.0;
        let mut k = 0u64;
        loop {
            prod *= rng.gen::<f64>();
            if prod <= limit {
                return k;
            }
            k += 1;
        }
    }
    // PTRS (Hormann 1993), valid for lambda >= 10.
    let b = 0.931 + 2.53 * lambda.sqrt();
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let v_r = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.gen::<f64>() - 0.5;
        let v = rng.gen::<f64>();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + lambda + 0.43).floor();
        if us >= 0.07 && v <= v_r {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let log_accept = (v * inv_alpha / (a / (us * us) + b)).ln();
        if log_accept <= k * lambda.ln() - lambda - ln_factorial(k as u64) {
            return k as u64;
        }
    }
}

fn ln_factorial(k: u64) -> f64 {
    // Exact for small k, Stirling series beyond.
    if k < 16 {
        let mut acc = 0.0;
        for i in 2..=k {
            acc += (i as f64).ln();
        }
        return acc;
    }
    let x = (k + 1) as f64;
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x)
        - 1.0 / (360.0 * x * x * x)
}
