//! Gaussian kernel, median-heuristic bandwidth, and the feasible squared-MMD
//! V-statistic between two lag samples.
//!
//! The criterion is the three-term double sum
//! D^2 = (1/N^2) sum k(yt_i, yt_i') - (2/(TN)) sum k(yt_i, y_t) + (1/T^2) sum k(y_t, y_t'),
//! with diagonal terms included in both self sums. The observed self term
//! does not depend on the parameter, so it is computed once per estimation
//! run and carried as a [`CachedGramMean`].

use crate::embedding::LagSample;
use crate::error::{MmdError, Result};
use crate::expsum::{sum_exp_cross, sum_exp_self_upper};
use serde::{Deserialize, Serialize};

/// Rows above which the median heuristic works on a uniformly strided
/// subsample; the median is statistically stable under subsampling and the
/// full pair set grows quadratically.
pub const MEDIAN_SUBSAMPLE_ROWS: usize = 4000;

/// Gaussian kernel k(y, y') = exp(-||y - y'||^2 / (2 sigma^2)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub sigma: f64,
}

impl KernelSpec {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(MmdError::InvalidParameter(format!(
                "bandwidth must be positive, got {sigma}"
            )));
        }
        Ok(Self { sigma })
    }

    /// Exponent scale 1 / (2 sigma^2).
    pub fn gamma(&self) -> f64 {
        1.0 / (2.0 * self.sigma * self.sigma)
    }
}

/// Pointwise kernel evaluation.
pub fn gaussian_kernel(y: &[f64], y2: &[f64], spec: &KernelSpec) -> Result<f64> {
    if y.len() != y2.len() {
        return Err(MmdError::DimensionMismatch {
            expected: y.len(),
            got: y2.len(),
        });
    }
    let d2: f64 = y.iter().zip(y2).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((-spec.gamma() * d2).exp())
}

/// Median of pairwise Euclidean distances over the sample.
pub fn median_heuristic(sample: &LagSample) -> Result<KernelSpec> {
    let rows = sample.rows();
    if rows < 2 {
        return Err(MmdError::EmptyInput(
            "median heuristic needs at least two rows".into(),
        ));
    }
    let dim = sample.dim();
    // Uniformly strided subsample above the threshold.
    let idx: Vec<usize> = if rows > MEDIAN_SUBSAMPLE_ROWS {
        (0..MEDIAN_SUBSAMPLE_ROWS)
            .map(|i| i * rows / MEDIAN_SUBSAMPLE_ROWS)
            .collect()
    } else {
        (0..rows).collect()
    };
    let m = idx.len();
    let mut d2s = Vec::with_capacity(m * (m - 1) / 2);
    for a in 0..m {
        let ra = sample.row(idx[a]);
        for b in (a + 1)..m {
            let rb = sample.row(idx[b]);
            let mut d2 = 0.0;
            for k in 0..dim {
                let t = ra[k] - rb[k];
                d2 += t * t;
            }
            d2s.push(d2);
        }
    }
    if d2s.iter().all(|&d| d == 0.0) {
        return Err(MmdError::DegenerateBandwidth);
    }
    let n = d2s.len();
    let sigma = if n % 2 == 1 {
        let (_, mid, _) = d2s.select_nth_unstable_by(n / 2, |a, b| a.partial_cmp(b).unwrap());
        mid.sqrt()
    } else {
        let (lo, hi_val, _) =
            d2s.select_nth_unstable_by(n / 2, |a, b| a.partial_cmp(b).unwrap());
        let hi = hi_val.sqrt();
        let lo_max = lo
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
            .sqrt();
        0.5 * (lo_max + hi)
    };
    KernelSpec::new(sigma)
}

/// The parameter-free third term of the criterion: (1/T^2) sum_{t,t'} k(y_t, y_t'),
/// tagged with a content hash of the sample it was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CachedGramMean {
    pub value: f64,
    pub sample_id: u64,
}

/// Exact Gram mean of a sample against itself (diagonal included).
pub fn gram_self_mean(sample: &LagSample, spec: &KernelSpec) -> Result<CachedGramMean> {
    let n = sample.rows();
    if n == 0 {
        return Err(MmdError::EmptyInput("empty sample".into()));
    }
    let upper = sum_exp_self_upper(sample.as_flat(), sample.dim(), spec.gamma());
    // Diagonal contributes k(y, y) = 1 per row.
    let value = (n as f64 + 2.0 * upper) / (n as f64 * n as f64);
    Ok(CachedGramMean {
        value,
        sample_id: sample.sample_id(),
    })
}

/// Feasible squared-MMD V-statistic between a synthetic and an observed
/// sample, with the observed self term supplied from cache.
pub fn mmd2_v(
    synthetic: &LagSample,
    observed: &LagSample,
    spec: &KernelSpec,
    cache: &CachedGramMean,
) -> Result<f64> {
    if synthetic.dim() != observed.dim() {
        return Err(MmdError::DimensionMismatch {
            expected: observed.dim(),
            got: synthetic.dim(),
        });
    }
    let observed_id = observed.sample_id();
    if cache.sample_id != observed_id {
        return Err(MmdError::StaleCache {
            cached: cache.sample_id,
            got: observed_id,
        });
    }
    let n = synthetic.rows() as f64;
    let t = observed.rows() as f64;
    let gamma = spec.gamma();
    let self_upper = sum_exp_self_upper(synthetic.as_flat(), synthetic.dim(), gamma);
    let self_term = (n + 2.0 * self_upper) / (n * n);
    let cross = sum_exp_cross(synthetic.as_flat(), observed.as_flat(), synthetic.dim(), gamma);
    Ok(self_term - 2.0 * cross / (n * t) + cache.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::embed_lags;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn scalar_sample(xs: &[f64]) -> LagSample {
        embed_lags(xs, 0).unwrap()
    }

    /// Independent brute-force oracle: naive triple loop over the displayed
    /// sums, plain f64 accumulation, libm exp.
    fn mmd2_naive(syn: &LagSample, obs: &LagSample, sigma: f64) -> f64 {
        let k = |a: &[f64], b: &[f64]| {
            let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            (-d2 / (2.0 * sigma * sigma)).exp()
        };
        let (n, t) = (syn.rows(), obs.rows());
        let mut s1 = 0.0;
        for i in 0..n {
            for j in 0..n {
                s1 += k(syn.row(i), syn.row(j));
            }
        }
        let mut s2 = 0.0;
        for i in 0..n {
            for j in 0..t {
                s2 += k(syn.row(i), obs.row(j));
            }
        }
        let mut s3 = 0.0;
        for i in 0..t {
            for j in 0..t {
                s3 += k(obs.row(i), obs.row(j));
            }
        }
        s1 / (n * n) as f64 - 2.0 * s2 / (n * t) as f64 + s3 / (t * t) as f64
    }

    #[test]
    fn kernel_identities() {
        let spec = KernelSpec::new(2.0f64.sqrt()).unwrap();
        assert_eq!(gaussian_kernel(&[1.0, 2.0], &[1.0, 2.0], &spec).unwrap(), 1.0);
        let v = gaussian_kernel(&[0.0], &[2.0], &spec).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        // sigma -> infinity limit
        let wide = KernelSpec::new(1000.0 * 2.0).unwrap();
        assert!(gaussian_kernel(&[0.0], &[2.0], &wide).unwrap() > 0.999);
        assert!(gaussian_kernel(&[0.0], &[1.0, 2.0], &spec).is_err());
    }

    #[test]
    fn median_heuristic_enumerated() {
        let s = scalar_sample(&[0.0, 1.0, 3.0]);
        // distances {1, 2, 3} -> median 2
        assert_eq!(median_heuristic(&s).unwrap().sigma, 2.0);
    }

    #[test]
    fn median_heuristic_homogeneous() {
        let xs = [0.3, -1.2, 2.5, 0.9, -0.4];
        let base = median_heuristic(&scalar_sample(&xs)).unwrap().sigma;
        let scaled: Vec<f64> = xs.iter().map(|x| 3.5 * x).collect();
        let s = median_heuristic(&scalar_sample(&scaled)).unwrap().sigma;
        assert!((s - 3.5 * base).abs() < 1e-12);
    }

    #[test]
    fn median_heuristic_two_points() {
        let s = scalar_sample(&[1.0, 4.0]);
        assert_eq!(median_heuristic(&s).unwrap().sigma, 3.0);
    }

    #[test]
    fn median_heuristic_degenerate() {
        let s = scalar_sample(&[2.0, 2.0, 2.0]);
        assert!(matches!(
            median_heuristic(&s),
            Err(MmdError::DegenerateBandwidth)
        ));
    }

    #[test]
    fn median_heuristic_subsample_stable() {
        // Above the subsampling threshold the answer stays close to the
        // small-sample answer for an i.i.d. source.
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..6000).map(|_| rng.gen::<f64>()).collect();
        let full = median_heuristic(&scalar_sample(&xs[..3000])).unwrap().sigma;
        let sub = median_heuristic(&scalar_sample(&xs)).unwrap().sigma;
        assert!((full - sub).abs() / full < 0.05, "{full} vs {sub}");
    }

    #[test]
    fn gram_self_mean_hand_values() {
        let spec = KernelSpec::new(2.0f64.sqrt()).unwrap();
        let single = scalar_sample(&[5.0]);
        assert_eq!(gram_self_mean(&single, &spec).unwrap().value, 1.0);
        let twin = scalar_sample(&[5.0, 5.0]);
        assert!((gram_self_mean(&twin, &spec).unwrap().value - 1.0).abs() < 1e-15);
        let pair = scalar_sample(&[0.0, 2.0]);
        let got = gram_self_mean(&pair, &spec).unwrap().value;
        let want = (2.0 + 2.0 * (-1.0f64).exp()) / 4.0;
        assert!((got - want).abs() < 1e-15, "{got} vs {want}");
    }

    #[test]
    fn mmd2_identical_samples_is_zero() {
        let s = scalar_sample(&[0.1, -0.7, 2.2, 1.1]);
        let spec = KernelSpec::new(1.3).unwrap();
        let cache = gram_self_mean(&s, &spec).unwrap();
        let v = mmd2_v(&s, &s, &spec, &cache).unwrap();
        assert!(v.abs() < 1e-12, "{v}");
    }

    #[test]
    fn mmd2_singletons_hand_value() {
        let syn = scalar_sample(&[0.0]);
        let obs = scalar_sample(&[2.0]);
        let spec = KernelSpec::new(2.0f64.sqrt()).unwrap();
        let cache = gram_self_mean(&obs, &spec).unwrap();
        let v = mmd2_v(&syn, &obs, &spec, &cache).unwrap();
        let want = 2.0 - 2.0 * (-1.0f64).exp();
        assert!((v - want).abs() < 1e-15, "{v} vs {want}");
    }

    #[test]
    fn mmd2_matches_naive_oracle() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..50 {
            let dim = rng.gen_range(1..=5usize);
            let n = rng.gen_range(1..=50usize);
            let t = rng.gen_range(2..=50usize);
            let syn_rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..dim).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect())
                .collect();
            let obs_rows: Vec<Vec<f64>> = (0..t)
                .map(|_| (0..dim).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect())
                .collect();
            let syn = LagSample::from_rows(&syn_rows).unwrap();
            let obs = LagSample::from_rows(&obs_rows).unwrap();
            let spec = KernelSpec::new(rng.gen::<f64>() * 2.0 + 0.2).unwrap();
            let cache = gram_self_mean(&obs, &spec).unwrap();
            let got = mmd2_v(&syn, &obs, &spec, &cache).unwrap();
            let want = mmd2_naive(&syn, &obs, spec.sigma);
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn mmd2_symmetry_and_nonnegativity() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let n = rng.gen_range(2..=12usize);
            let t = rng.gen_range(2..=12usize);
            let a_rows: Vec<Vec<f64>> =
                (0..n).map(|_| vec![rng.gen::<f64>() * 3.0 - 1.5]).collect();
            let b_rows: Vec<Vec<f64>> =
                (0..t).map(|_| vec![rng.gen::<f64>() * 3.0 - 1.5]).collect();
            let a = LagSample::from_rows(&a_rows).unwrap();
            let b = LagSample::from_rows(&b_rows).unwrap();
            let spec = KernelSpec::new(0.8).unwrap();
            let cache_b = gram_self_mean(&b, &spec).unwrap();
            let cache_a = gram_self_mean(&a, &spec).unwrap();
            let ab = mmd2_v(&a, &b, &spec, &cache_b).unwrap();
            let ba = mmd2_v(&b, &a, &spec, &cache_a).unwrap();
            assert!((ab - ba).abs() < 1e-12);
            assert!(ab >= -1e-12);
        }
    }

    #[test]
    fn stale_cache_detected() {
        let spec = KernelSpec::new(1.0).unwrap();
        let a = scalar_sample(&[0.0, 1.0]);
        let b = scalar_sample(&[0.0, 2.0]);
        let cache = gram_self_mean(&a, &spec).unwrap();
        assert!(matches!(
            mmd2_v(&a, &b, &spec, &cache),
            Err(MmdError::StaleCache { .. })
        ));
    }

    #[test]
    fn characteristic_separation_proxy() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let gauss = |rng: &mut ChaCha12Rng, mu: f64| -> Vec<Vec<f64>> {
            (0..2000)
                .map(|_| vec![mu + crate::innovations::standard_normal(rng)])
                .collect()
        };
        let x0 = LagSample::from_rows(&gauss(&mut rng, 0.0)).unwrap();
        let x0b = LagSample::from_rows(&gauss(&mut rng, 0.0)).unwrap();
        let x1 = LagSample::from_rows(&gauss(&mut rng, 1.0)).unwrap();
        let spec = median_heuristic(&x0).unwrap();
        let cache = gram_self_mean(&x0, &spec).unwrap();
        let close = mmd2_v(&x0b, &x0, &spec, &cache).unwrap();
        let far = mmd2_v(&x1, &x0, &spec, &cache).unwrap();
        assert!(far > 10.0 * close.abs(), "far = {far}, close = {close}");
    }
}
