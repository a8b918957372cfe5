//! Data-driven lag choice on a heavy-tailed ARMA path fitted with a
//! Gaussian-innovation model: prints the D_p curve and the selected lag.
//!
//! ```bash
//! cargo run --release --example lag_selection
//! ```

use mmdts::estimators::{OptimConfig, Resample, SimScheme};
use mmdts::innovations::{InnovationDist, SeedPath};
use mmdts::lag_selection::select_lag;
use mmdts::models::{ModelKind, ModelSpec};

fn main() -> mmdts::Result<()> {
    let spec = ModelSpec::new(ModelKind::Arma, vec![0.8, 0.15, 0.05])?;
    // Heavy-tailed data, Gaussian model: estimation under misspecification.
    let data = spec.simulate(1000, InnovationDist::ScaledT3, &SeedPath::new(6))?;

    let scheme = SimScheme::ismmd(150, 60, Resample::PerIteration);
    let config = OptimConfig::for_model(&spec).with_iterations(40);
    let report = select_lag(
        &data,
        &spec,
        &scheme,
        8,
        &config,
        InnovationDist::Gaussian,
        &SeedPath::new(7),
    )?;

    println!("train/test split at t = {}", report.split_index);
    println!("   p        D_p");
    for (p, d) in &report.curve {
        match d {
            Some(d) => println!("  {p:>2}   {d:.6}{}", if *p == report.p_hat { "  <- selected" } else { "" }),
            None => println!("  {p:>2}   (failed)"),
        }
    }
    Ok(())
}
