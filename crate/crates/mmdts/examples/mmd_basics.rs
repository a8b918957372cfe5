//! Lag embedding, median-heuristic bandwidth, and the squared MMD between
//! two embedded samples: the pieces the estimator is built from.
//!
//! ```bash
//! cargo run --release --example mmd_basics
//! ```

use mmdts::embedding::embed_lags;
use mmdts::innovations::{InnovationDist, SeedPath};
use mmdts::kernel::{gram_self_mean, median_heuristic, mmd2_v};
use mmdts::models::{ModelKind, ModelSpec};

fn main() -> mmdts::Result<()> {
    let spec = ModelSpec::new(ModelKind::Arma, vec![0.8, 0.15, 0.05])?;
    let observed = spec.simulate(2000, InnovationDist::Gaussian, &SeedPath::new(1))?;

    let p = 2;
    let obs = embed_lags(&observed.values, p)?;
    println!("embedded {} observations into {} rows of dimension {}", 2000, obs.rows(), obs.dim());

    // Bandwidth comes from the observed sample only.
    let kernel = median_heuristic(&obs)?;
    println!("median-heuristic bandwidth sigma = {:.4}", kernel.sigma);

    // The observed Gram mean is computed once and cached.
    let cache = gram_self_mean(&obs, &kernel)?;

    // Compare same-distribution and different-parameter samples.
    for (label, theta) in [
        ("same parameter", vec![0.8, 0.15, 0.05]),
        ("wrong phi", vec![0.2, 0.15, 0.05]),
        ("wrong variance", vec![0.8, 0.15, 0.4]),
    ] {
        let other = spec
            .with_theta(&theta)
            .simulate(2000, InnovationDist::Gaussian, &SeedPath::new(2))?;
        let emb = embed_lags(&other.values, p)?;
        let d2 = mmd2_v(&emb, &obs, &kernel, &cache)?;
        println!("{label:>15}: D^2 = {d2:+.6}");
    }
    Ok(())
}
