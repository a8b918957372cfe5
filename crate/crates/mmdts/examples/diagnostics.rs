//! Monte Carlo theory checks: the geometric decay of the serial-dependence
//! coefficients for a dyadic averaging chain, and the root-T decay of the
//! MMD between the empirical and stationary distributions.
//!
//! ```bash
//! cargo run --release --example diagnostics
//! ```

use mmdts::diagnostics::{averaging_chain, estimate_rho, mc_mmd_decay};
use mmdts::innovations::SeedPath;
use mmdts::kernel::KernelSpec;

fn main() -> mmdts::Result<()> {
    let gen = |t_len: usize, s: &SeedPath| averaging_chain(t_len, s);

    let kernel = KernelSpec::new(0.25)?;
    let prof = estimate_rho(&gen, 0, &kernel, 6, 100, 4000, &SeedPath::new(8))?;
    println!("serial dependence of the averaging chain (halves each lag):");
    println!("   t        rho_t      Sigma_t");
    for t in 0..prof.rho.len() {
        println!("  {:>2}   {:.6}   {:.6}", t + 1, prof.rho[t], prof.sigma_t[t]);
    }

    println!();
    println!("decay of D(P_T, P0) with T (the bound scales like 1/sqrt(T)):");
    println!("     T     mean D     bound");
    let rows = mc_mmd_decay(&gen, 0, &[128, 512, 2048], 100, 60_000, 15_000, &SeedPath::new(9))?;
    for r in rows {
        println!("  {:>4}   {:.5}   {:.5}", r.t, r.mean_d, r.bound);
    }
    Ok(())
}
