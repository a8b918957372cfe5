//! Desk-scale Monte Carlo checks of the theory behind the estimator:
//! empirical serial-dependence coefficients, the root-T decay of the
//! embedded empirical distribution toward its stationary limit, and the
//! error scaling of the estimator itself across sample sizes.

use crate::embedding::{embed_lags, LagSample};
use crate::error::{MmdError, Result};
use crate::estimators::{
    estimate_mmd, generate_synthetic, numerical_gradient, OptimConfig, SimScheme,
};
use crate::innovations::{InnovationDist, SeedPath};
use crate::kernel::{gaussian_kernel, gram_self_mean, median_heuristic, mmd2_v, KernelSpec};
use crate::models::{ModelSpec, Series};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// A path generator: (length, seed) -> scalar series. Lets the diagnostics
/// run on processes outside the model zoo, like the averaging chain below.
pub type PathGen<'a> = dyn Fn(usize, &SeedPath) -> Result<Vec<f64>> + 'a;

/// The dyadic averaging chain y_{t+1} = (y_t + eta_t) / 2 with Bernoulli(1/2)
/// innovations and uniform start: a strictly stationary process whose
/// dependence coefficients decay like 2^{-t}.
pub fn averaging_chain(t_len: usize, seed: &SeedPath) -> Result<Vec<f64>> {
    let mut rng = seed.rng();
    let mut y: f64 = rng.gen_range(0.0..1.0);
    let mut out = Vec::with_capacity(t_len);
    for _ in 0..t_len {
        out.push(y);
        let eta = if rng.gen_range(0.0..1.0f64) < 0.5 { 0.0 } else { 1.0 };
        y = 0.5 * (y + eta);
    }
    Ok(out)
}

/// Empirical serial-dependence coefficients rho_t and their running sum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DependenceProfile {
    /// rho_t for t = 1..=t_max (absolute values by definition).
    pub rho: Vec<f64>,
    /// Running sums Sigma_t = rho_1 + ... + rho_t; nondecreasing.
    pub sigma_t: Vec<f64>,
    /// Monte Carlo standard error of each rho entry across replicate paths.
    pub mc_stderr: Vec<f64>,
}

/// Estimate rho_t = |E k(y_0, y_t) - E k(Y, Y')| for t = 1..=t_max.
///
/// The first moment is the lag-t kernel average along a path; the second is
/// the kernel mean over pairs further than t_ref/2 apart, which are close
/// enough to independent once the chain mixes. Both are averaged over
/// `reps` independent paths of length `t_ref`.
pub fn estimate_rho(
    gen: &PathGen,
    p: usize,
    kernel: &KernelSpec,
    t_max: usize,
    reps: usize,
    t_ref: usize,
    seed: &SeedPath,
) -> Result<DependenceProfile> {
    if t_max == 0 || reps == 0 {
        return Err(MmdError::InvalidParameter(
            "estimate_rho needs t_max >= 1 and reps >= 1".into(),
        ));
    }
    if t_max + p + 1 >= t_ref {
        return Err(MmdError::InvalidParameter(format!(
            "t_max = {t_max} must be well below the path length {t_ref}"
        )));
    }
    // Per-replicate statistics: lag averages minus the far-pair mean.
    let mut diffs: Vec<Vec<f64>> = vec![Vec::with_capacity(reps); t_max];
    let gap = t_ref / 2;
    for r in 0..reps {
        let path = gen(t_ref, &seed.derive(r as u32))?;
        let emb = embed_lags(&path, p)?;
        let m = emb.rows();

        // Far-pair kernel mean at a fixed offset beyond t_ref/2, so each
        // replicate costs O(m) kernel evaluations.
        let mut far_sum = 0.0;
        let mut far_n = 0usize;
        for s in 0..m.saturating_sub(gap + 1) {
            far_sum += gaussian_kernel(emb.row(s), emb.row(s + gap + 1), kernel)?;
            far_n += 1;
        }
        if far_n == 0 {
            return Err(MmdError::InvalidParameter(
                "path too short for the far-pair reference mean".into(),
            ));
        }
        let far_mean = far_sum / far_n as f64;

        for t in 1..=t_max {
            let mut acc = 0.0;
            for s in 0..m - t {
                acc += gaussian_kernel(emb.row(s), emb.row(s + t), kernel)?;
            }
            diffs[t - 1].push(acc / (m - t) as f64 - far_mean);
        }
    }

    let mut rho = Vec::with_capacity(t_max);
    let mut mc_stderr = Vec::with_capacity(t_max);
    for t in 0..t_max {
        let v = &diffs[t];
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        rho.push(mean.abs());
        if v.len() > 1 {
            let var =
                v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (v.len() - 1) as f64;
            mc_stderr.push((var / v.len() as f64).sqrt());
        } else {
            mc_stderr.push(f64::INFINITY);
        }
    }
    let mut sigma_t = Vec::with_capacity(t_max);
    let mut acc = 0.0;
    for &r in &rho {
        acc += r;
        sigma_t.push(acc);
    }
    Ok(DependenceProfile { rho, sigma_t, mc_stderr })
}

/// One row of the decay table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayRow {
    pub t: usize,
    pub mean_d: f64,
    pub stderr: f64,
    /// Theoretical envelope sqrt((1 + 2 Sigma) / T).
    pub bound: f64,
}

/// Decay of D(P_T, P0-proxy) with T. P0 is proxied by one long reference
/// path, subsampled to at most `ref_cap` embedded rows for the Gram terms;
/// for each T in the grid the MMD against the proxy is averaged over `reps`
/// independent paths. The bound column uses `estimate_rho` on the same
/// generator.
#[allow(clippy::too_many_arguments)]
pub fn mc_mmd_decay(
    gen: &PathGen,
    p: usize,
    t_grid: &[usize],
    reps: usize,
    ref_size: usize,
    ref_cap: usize,
    seed: &SeedPath,
) -> Result<Vec<DecayRow>> {
    if t_grid.is_empty() || reps == 0 {
        return Err(MmdError::InvalidParameter(
            "decay needs a nonempty T grid and reps >= 1".into(),
        ));
    }
    let &t_max_grid = t_grid.iter().max().unwrap();
    if ref_size < 4 * t_max_grid {
        return Err(MmdError::InvalidParameter(format!(
            "reference size {ref_size} should dominate the largest T = {t_max_grid}"
        )));
    }
    // Reference sample: one long path, strided down to at most ref_cap rows.
    let ref_path = gen(ref_size, &seed.derive(0))?;
    let ref_emb_full = embed_lags(&ref_path, p)?;
    let stride = ref_emb_full.rows().div_ceil(ref_cap).max(1);
    let ref_rows: Vec<Vec<f64>> = (0..ref_emb_full.rows())
        .step_by(stride)
        .map(|i| ref_emb_full.row(i).to_vec())
        .collect();
    let ref_emb = LagSample::from_rows(&ref_rows)?;
    let kernel = median_heuristic(&ref_emb)?;
    let cache = gram_self_mean(&ref_emb, &kernel)?;

    // Dependence profile for the bound column.
    let profile = estimate_rho(
        gen,
        p,
        &kernel,
        30.min(t_grid.iter().min().unwrap() / 2).max(1),
        20.min(reps),
        (4 * t_max_grid).min(ref_size),
        &seed.derive(1),
    )?;
    let sigma = *profile.sigma_t.last().unwrap();

    let mut rows = Vec::with_capacity(t_grid.len());
    for (gi, &t) in t_grid.iter().enumerate() {
        let mut ds = Vec::with_capacity(reps);
        for r in 0..reps {
            let path = gen(t + p, &seed.derive(2).derive(gi as u32).derive(r as u32))?;
            let emb = embed_lags(&path, p)?;
            let d2 = mmd2_v(&emb, &ref_emb, &kernel, &cache)?;
            ds.push(d2.max(0.0).sqrt());
        }
        let mean = ds.iter().sum::<f64>() / reps as f64;
        let stderr = if reps > 1 {
            let var =
                ds.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (reps - 1) as f64;
            (var / reps as f64).sqrt()
        } else {
            f64::INFINITY
        };
        rows.push(DecayRow {
            t,
            mean_d: mean,
            stderr,
            bound: ((1.0 + 2.0 * sigma) / t as f64).sqrt(),
        });
    }
    Ok(rows)
}

/// How `mc_rmse_scaling` locates the criterion minimizer for each batch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ScalingOptimizer {
    /// The full iterative estimator.
    Sgd(OptimConfig),
    /// Finite-difference Newton refinement of the fixed-innovation
    /// criterion, started at the true parameter. Roughly ten objective
    /// evaluations per step instead of thousands, which keeps large-N
    /// scaling studies tractable; it converges to the same criterion
    /// minimizer whenever that minimizer is the stationary point nearest
    /// the truth.
    Newton { steps: usize, h: f64 },
}

/// One row of the scaling table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingRow {
    pub t: usize,
    pub n: usize,
    pub rmse: f64,
    pub failures: usize,
}

fn newton_refine(
    spec: &ModelSpec,
    start: &[f64],
    scheme: &SimScheme,
    p: usize,
    steps: usize,
    h: f64,
    observed: &Series,
    dist: InnovationDist,
    seed: &SeedPath,
) -> Result<Vec<f64>> {
    let obs_emb = embed_lags(&observed.values, p)?;
    let kernel = median_heuristic(&obs_emb)?;
    let cache = gram_self_mean(&obs_emb, &kernel)?;
    let iter_seed = seed.derive(0);
    let mut objective = |th: &[f64]| -> Result<f64> {
        let syn = generate_synthetic(spec, th, scheme, p, dist, &iter_seed)?;
        mmd2_v(&syn, &obs_emb, &kernel, &cache)
    };
    let d = start.len();
    let bounds = spec.bounds();
    let cfg = OptimConfig {
        fd_step: h,
        bounds: bounds.clone(),
        ..OptimConfig::for_model(spec)
    };
    let mut theta = spec.project(start);
    for _ in 0..steps {
        let f0 = objective(&theta)?;
        let grad = numerical_gradient(&mut objective, &theta, &cfg)?;
        // Forward-difference Hessian from single-coordinate and pair probes.
        let mut f_single = vec![0.0; d];
        for j in 0..d {
            let mut probe = theta.clone();
            probe[j] += h;
            f_single[j] = objective(&probe)?;
        }
        let mut hess = DMatrix::<f64>::zeros(d, d);
        for i in 0..d {
            hess[(i, i)] = {
                let mut probe = theta.clone();
                probe[i] -= h;
                let f_down = objective(&probe)?;
                (f_single[i] - 2.0 * f0 + f_down) / (h * h)
            };
            for j in (i + 1)..d {
                let mut probe = theta.clone();
                probe[i] += h;
                probe[j] += h;
                let f_ij = objective(&probe)?;
                let v = (f_ij - f_single[i] - f_single[j] + f0) / (h * h);
                hess[(i, j)] = v;
                hess[(j, i)] = v;
            }
        }
        let g = DVector::from_column_slice(&grad);
        // Levenberg-Marquardt: if the finite-difference Hessian is not
        // positive definite (near-flat directions make small eigenvalues
        // sign-flip under probe noise), escalate a ridge until it is.
        let diag_scale = (0..d).map(|i| hess[(i, i)].abs()).fold(1e-12, f64::max);
        let mut step = g.clone() * (h / (1e-12 + g.norm()));
        let mut lambda = 0.0;
        loop {
            let damped = &hess + DMatrix::<f64>::identity(d, d) * lambda;
            if let Some(chol) = damped.cholesky() {
                step = chol.solve(&g);
                break;
            }
            lambda = if lambda == 0.0 {
                1e-6 * diag_scale
            } else {
                lambda * 10.0
            };
            if lambda > 1e6 * diag_scale {
                break;
            }
        }
        // Trust region: never move further than a fifth of the box.
        let max_move = bounds
            .iter()
            .map(|&(lo, hi)| 0.2 * (hi - lo))
            .fold(f64::INFINITY, f64::min);
        let norm = step.norm();
        let mut scale = if norm > max_move { max_move / norm } else { 1.0 };
        // Backtracking: a Newton step through a noisy flat direction can
        // overshoot badly; halve it until the objective actually drops.
        for _ in 0..8 {
            let next: Vec<f64> = theta
                .iter()
                .zip(step.iter())
                .map(|(t, s)| t - scale * s)
                .collect();
            let cand = spec.project(&next);
            if objective(&cand)? <= f0 {
                theta = cand;
                break;
            }
            scale *= 0.5;
        }
    }
    Ok(theta)
}

/// Error scaling of the estimator across T: for each (T, N) pair run
/// `batches` independent estimations on fresh data at `theta_star` and
/// report the root mean squared l2 error. Failed batches are excluded and
/// counted.
#[allow(clippy::too_many_arguments)]
pub fn mc_rmse_scaling(
    spec: &ModelSpec,
    theta_star: &[f64],
    grid: &[(usize, usize)],
    scheme_for: &dyn Fn(usize) -> SimScheme,
    optimizer: &ScalingOptimizer,
    p: usize,
    batches: usize,
    dist: InnovationDist,
    seed: &SeedPath,
) -> Result<Vec<ScalingRow>> {
    if batches == 0 {
        return Err(MmdError::InvalidParameter("batches must be >= 1".into()));
    }
    let truth = spec.with_theta(theta_star);
    truth.validate()?;
    let mut rows = Vec::with_capacity(grid.len());
    for (gi, &(t, n)) in grid.iter().enumerate() {
        let scheme = scheme_for(n);
        let mut sq_errs = Vec::with_capacity(batches);
        let mut failures = 0usize;
        for b in 0..batches {
            let cell = seed.derive(gi as u32).derive(b as u32);
            let run: Result<Vec<f64>> = (|| {
                let data = truth.simulate(t + p, dist, &cell.derive(0))?;
                match optimizer {
                    ScalingOptimizer::Sgd(cfg) => Ok(estimate_mmd(
                        &data,
                        spec,
                        &scheme,
                        p,
                        cfg,
                        InnovationDist::Gaussian,
                        &cell.derive(1),
                    )?
                    .theta_hat),
                    ScalingOptimizer::Newton { steps, h } => newton_refine(
                        spec,
                        theta_star,
                        &scheme,
                        p,
                        *steps,
                        *h,
                        &data,
                        InnovationDist::Gaussian,
                        &cell.derive(1),
                    ),
                }
            })();
            match run {
                Ok(theta_hat) => sq_errs.push(
                    theta_hat
                        .iter()
                        .zip(theta_star)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>(),
                ),
                Err(_) => failures += 1,
            }
        }
        if sq_errs.is_empty() {
            return Err(MmdError::DegenerateData(format!(
                "all {batches} batches failed at T = {t}"
            )));
        }
        rows.push(ScalingRow {
            t,
            n,
            rmse: (sq_errs.iter().sum::<f64>() / sq_errs.len() as f64).sqrt(),
            failures,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::Resample;
    use crate::innovations::standard_normal;
    use crate::models::ModelKind;

    fn seed(n: u64) -> SeedPath {
        SeedPath::new(n)
    }

    fn iid_gaussian(t_len: usize, s: &SeedPath) -> Result<Vec<f64>> {
        let mut rng = s.rng();
        Ok((0..t_len).map(|_| standard_normal(&mut rng)).collect())
    }

    #[test]
    fn chain_stays_in_unit_interval_and_mixes() {
        let path = averaging_chain(5000, &seed(40)).unwrap();
        assert!(path.iter().all(|&y| (0.0..=1.0).contains(&y)));
        // Stationary mean is 1/2.
        let mean = path.iter().sum::<f64>() / path.len() as f64;
        assert!((mean - 0.5).abs() < 0.05, "mean {mean}");
    }

    #[test]
    fn rho_vanishes_for_iid_control() {
        let kernel = KernelSpec::new(1.0).unwrap();
        let prof = estimate_rho(&iid_gaussian, 0, &kernel, 10, 200, 400, &seed(41)).unwrap();
        for t in 0..10 {
            assert!(
                prof.rho[t] <= 3.0 * prof.mc_stderr[t],
                "t = {}: rho = {}, stderr = {}",
                t + 1,
                prof.rho[t],
                prof.mc_stderr[t]
            );
        }
    }

    #[test]
    fn rho_is_bounded_by_one_and_sigma_monotone() {
        let kernel = KernelSpec::new(0.5).unwrap();
        let gen = |t_len: usize, s: &SeedPath| averaging_chain(t_len, s);
        let prof = estimate_rho(&gen, 0, &kernel, 8, 50, 400, &seed(42)).unwrap();
        for &r in &prof.rho {
            assert!((0.0..=1.0).contains(&r));
        }
        for w in prof.sigma_t.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn rho_decays_geometrically_for_the_averaging_chain() {
        let kernel = KernelSpec::new(0.25).unwrap();
        let gen = |t_len: usize, s: &SeedPath| averaging_chain(t_len, s);
        let prof = estimate_rho(&gen, 0, &kernel, 6, 200, 6000, &seed(43)).unwrap();
        for t in 0..5 {
            let ratio = prof.rho[t] / prof.rho[t + 1];
            assert!(
                (1.5..=2.7).contains(&ratio),
                "t = {}: ratio = {ratio}",
                t + 1
            );
        }
    }

    #[test]
    fn decay_table_shows_root_t_rate() {
        let gen = |t_len: usize, s: &SeedPath| averaging_chain(t_len, s);
        let rows = mc_mmd_decay(&gen, 0, &[256, 1024], 200, 120_000, 20_000, &seed(44)).unwrap();
        let ratio = rows[1].mean_d / rows[0].mean_d;
        assert!((0.4..=0.7).contains(&ratio), "ratio {ratio}");
        for row in &rows {
            assert!(
                row.mean_d <= row.bound + 2.0 * row.stderr,
                "T = {}: {} > bound {}",
                row.t,
                row.mean_d,
                row.bound
            );
        }
    }

    #[test]
    fn decay_with_single_rep_uses_infinite_stderr() {
        let gen = |t_len: usize, s: &SeedPath| averaging_chain(t_len, s);
        let rows = mc_mmd_decay(&gen, 0, &[128], 1, 10_000, 4_000, &seed(45)).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].stderr.is_infinite());
        assert!(rows[0].mean_d.is_finite());
    }

    #[test]
    fn iid_control_times_root_t_is_flat() {
        let rows =
            mc_mmd_decay(&iid_gaussian, 0, &[128, 256, 512], 100, 60_000, 15_000, &seed(46))
                .unwrap();
        let scaled: Vec<f64> = rows
            .iter()
            .map(|r| r.mean_d * (r.t as f64).sqrt())
            .collect();
        let (lo, hi) = scaled
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
        assert!(hi / lo < 1.6, "scaled means {scaled:?}");
    }

    #[test]
    fn scaling_rejects_zero_batches() {
        let spec = ModelSpec::new(ModelKind::Nlma, vec![0.9]).unwrap();
        let err = mc_rmse_scaling(
            &spec,
            &[0.9],
            &[(100, 100)],
            &|n| SimScheme::ismmd(n, 50, Resample::Fixed),
            &ScalingOptimizer::Newton { steps: 1, h: 5e-3 },
            1,
            0,
            InnovationDist::Gaussian,
            &seed(47),
        );
        assert!(err.is_err());
    }

    #[test]
    fn rmse_shrinks_with_t_for_nlma_newton() {
        let spec = ModelSpec::new(ModelKind::Nlma, vec![0.9]).unwrap();
        let rows = mc_rmse_scaling(
            &spec,
            &[0.9],
            &[(300, 600), (2400, 4800)],
            &|n| SimScheme::ismmd(n, 100, Resample::Fixed),
            &ScalingOptimizer::Newton { steps: 2, h: 5e-3 },
            1,
            10,
            InnovationDist::Gaussian,
            &seed(48),
        )
        .unwrap();
        assert_eq!(rows[0].failures + rows[1].failures, 0);
        assert!(
            rows[1].rmse < rows[0].rmse,
            "rmse did not shrink: {} vs {}",
            rows[0].rmse,
            rows[1].rmse
        );
    }
}
