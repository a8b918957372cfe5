//! Simulate a short path from each model and print a few sample moments.
//!
//! ```bash
//! cargo run --release --example simulate
//! ```

use mmdts::innovations::{InnovationDist, SeedPath};
use mmdts::models::{ModelKind, ModelSpec};

fn main() -> mmdts::Result<()> {
    let zoo: [(ModelKind, Vec<f64>); 5] = [
        (ModelKind::Sv, vec![0.9, 0.1, 0.2]),
        (ModelKind::Garch, vec![0.05, 0.92, 0.05]),
        (ModelKind::Arma, vec![0.8, 0.15, 0.05]),
        (ModelKind::Nlma, vec![0.9]),
        (ModelKind::Ricker, vec![7.0f64.ln(), 0.05, 7.0]),
    ];
    for (kind, theta) in zoo {
        let spec = ModelSpec::new(kind, theta)?;
        for dist in [InnovationDist::Gaussian, InnovationDist::ScaledT3] {
            let series = spec.simulate(5000, dist, &SeedPath::new(1))?;
            let n = series.values.len() as f64;
            let mean = series.values.iter().sum::<f64>() / n;
            let var = series.values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            println!(
                "{:>7} ({:>8}): mean {:>8.4}  var {:>8.4}",
                kind.name(),
                dist.name(),
                mean,
                var
            );
        }
    }
    Ok(())
}
