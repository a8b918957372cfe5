//! The comparison estimators: Gaussian QML, particle-filter MLE, moment
//! estimator, and synthetic likelihood, each run on data from its model.
//!
//! ```bash
//! cargo run --release --example baselines
//! ```

use mmdts::baselines::{
    arma_qml, garch_qml, nlma_moment, ricker_sl_mle, sv_pf_mle, ParticleFilterConfig,
    SyntheticLikConfig,
};
use mmdts::innovations::{InnovationDist, SeedPath};
use mmdts::models::{ModelKind, ModelSpec};

fn show(name: &str, truth: &[f64], fit: &[f64]) {
    let err = truth
        .iter()
        .zip(fit)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    println!("{name:>12}: truth {truth:.3?}  fit {fit:.3?}  l2 err {err:.4}");
}

fn main() -> mmdts::Result<()> {
    let seed = SeedPath::new(5);

    let theta = vec![0.05, 0.92, 0.05];
    let data = ModelSpec::new(ModelKind::Garch, theta.clone())?
        .simulate(5000, InnovationDist::Gaussian, &seed.derive(0))?;
    show("garch-qml", &theta, &garch_qml(&data)?.theta_hat);

    let theta = vec![0.8, 0.15, 0.05];
    let data = ModelSpec::new(ModelKind::Arma, theta.clone())?
        .simulate(5000, InnovationDist::Gaussian, &seed.derive(1))?;
    show("arma-qml", &theta, &arma_qml(&data)?.theta_hat);

    let theta = vec![0.9, 0.1, 0.2];
    let data = ModelSpec::new(ModelKind::Sv, theta.clone())?
        .simulate(1000, InnovationDist::Gaussian, &seed.derive(2))?;
    // 1000 particles keeps this example quick; the default is 5000.
    let cfg = ParticleFilterConfig::new(seed.derive(3)).with_particles(1000);
    show("sv-pf", &theta, &sv_pf_mle(&data, &cfg)?.theta_hat);

    let theta = vec![0.9];
    let data = ModelSpec::new(ModelKind::Nlma, theta.clone())?
        .simulate(5000, InnovationDist::Gaussian, &seed.derive(4))?;
    show("nlma-moment", &theta, &[nlma_moment(&data)?]);

    let theta = vec![7.0f64.ln(), 0.05, 7.0];
    let data = ModelSpec::new(ModelKind::Ricker, theta.clone())?
        .simulate(500, InnovationDist::Gaussian, &seed.derive(5))?;
    let cfg = SyntheticLikConfig::new(seed.derive(6)).with_replicates(300);
    show("ricker-sl", &theta, &ricker_sl_mle(&data, &cfg)?.theta_hat);

    Ok(())
}
