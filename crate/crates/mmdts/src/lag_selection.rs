//! Data-driven choice of the lag order p: estimate the model once per
//! candidate p on a training segment, then score each candidate by the MMD
//! between a long synthetic path at the fitted parameter and the held-out
//! test segment, and keep the minimizer.
//!
//! The D_p values at different p live in embedding spaces of different
//! dimension with different bandwidths; they are compared anyway, and the
//! full curve is reported so the caller can see how flat the minimum is.

use crate::embedding::embed_lags;
use crate::error::{MmdError, Result};
use crate::estimators::{estimate_mmd, generate_synthetic, OptimConfig, Resample, SchemeKind, SimScheme};
use crate::innovations::{InnovationDist, SeedPath};
use crate::kernel::{gram_self_mean, median_heuristic, mmd2_v};
use crate::models::{ModelSpec, Series, DEFAULT_BURN_IN};
use serde::{Deserialize, Serialize};

/// Synthetic sample size for scoring a fitted parameter (number of embedded
/// rows of the evaluation path).
pub const DEFAULT_N0: usize = 10_000;

/// Training fraction of the observed series.
pub const TRAIN_FRACTION: f64 = 0.75;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LagSelectionReport {
    pub p_hat: usize,
    /// One entry per candidate p in 0..=p_max; `None` marks a failed fit.
    pub curve: Vec<(usize, Option<f64>)>,
    pub split_index: usize,
    pub estimates: Vec<Option<Vec<f64>>>,
}

/// Contiguous temporal split at floor(frac * T); no shuffling.
pub fn split_train_test(x: &Series, frac: f64) -> Result<(Series, Series)> {
    if !(0.0 < frac && frac < 1.0) {
        return Err(MmdError::InvalidParameter(format!(
            "split fraction {frac} must lie in (0, 1)"
        )));
    }
    let t0 = (frac * x.values.len() as f64).floor() as usize;
    if t0 == 0 || t0 == x.values.len() {
        return Err(MmdError::InvalidParameter(format!(
            "split at {t0} leaves an empty segment (T = {})",
            x.values.len()
        )));
    }
    let train = Series {
        values: x.values[..t0].to_vec(),
        seed: x.seed.clone(),
        dist: x.dist,
    };
    let test = Series {
        values: x.values[t0..].to_vec(),
        seed: x.seed.clone(),
        dist: x.dist,
    };
    Ok((train, test))
}

/// Argmin over the defined curve entries, ties broken toward smaller p.
pub fn select_from_curve(curve: &[(usize, Option<f64>)]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &(p, d) in curve {
        if let Some(d) = d {
            let better = match best {
                None => true,
                // Strict inequality keeps the smallest p on exact ties.
                Some((_, bd)) => d < bd,
            };
            if better {
                best = Some((p, d));
            }
        }
    }
    best.map(|(p, _)| p).ok_or(MmdError::AllLagsFailed)
}

/// Select the lag order for `spec` on the series `x`.
///
/// For each p in 0..=p_max the model is fitted on the training segment with
/// `estimate_mmd`, a synthetic path of `DEFAULT_N0` embedded rows is drawn
/// at the fitted parameter, and D_p is the root MMD between that path and
/// the test embedding, with the bandwidth recomputed from the test
/// embedding at each p. Per-p failures are recorded and excluded from the
/// argmin; if every candidate fails the whole selection fails.
pub fn select_lag(
    x: &Series,
    spec: &ModelSpec,
    scheme: &SimScheme,
    p_max: usize,
    config: &OptimConfig,
    dist: InnovationDist,
    seed: &SeedPath,
) -> Result<LagSelectionReport> {
    let (train, test) = split_train_test(x, TRAIN_FRACTION)?;
    if train.values.len() < p_max + 2 || test.values.len() < p_max + 2 {
        return Err(MmdError::LagTooLarge {
            p: p_max,
            len: train.values.len().min(test.values.len()),
        });
    }
    let eval_scheme = SimScheme {
        kind: SchemeKind::Psmmd {
            n: DEFAULT_N0,
            burn_in: DEFAULT_BURN_IN,
        },
        resample: Resample::Fixed,
    };

    let mut curve = Vec::with_capacity(p_max + 1);
    let mut estimates = Vec::with_capacity(p_max + 1);
    for p in 0..=p_max {
        let fit_seed = seed.derive(2 * p as u32);
        let score_seed = seed.derive(2 * p as u32 + 1);
        let scored: Result<(Vec<f64>, f64)> = (|| {
            let fit = estimate_mmd(&train, spec, scheme, p, config, dist, &fit_seed)?;
            let test_emb = embed_lags(&test.values, p)?;
            let kernel = median_heuristic(&test_emb)?;
            let cache = gram_self_mean(&test_emb, &kernel)?;
            let synthetic =
                generate_synthetic(spec, &fit.theta_hat, &eval_scheme, p, dist, &score_seed)?;
            let d2 = mmd2_v(&synthetic, &test_emb, &kernel, &cache)?;
            Ok((fit.theta_hat, d2.max(0.0).sqrt()))
        })();
        match scored {
            Ok((theta, d)) => {
                curve.push((p, Some(d)));
                estimates.push(Some(theta));
            }
            Err(_) => {
                curve.push((p, None));
                estimates.push(None);
            }
        }
    }
    let p_hat = select_from_curve(&curve)?;
    Ok(LagSelectionReport {
        p_hat,
        curve,
        split_index: (TRAIN_FRACTION * x.values.len() as f64).floor() as usize,
        estimates,
    })
}
