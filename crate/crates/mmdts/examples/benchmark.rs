//! A small benchmark grid: minimum-MMD estimation across lags against the
//! moment baseline on non-linear MA data, emitting the CSV report inline.
//!
//! ```bash
//! cargo run --release --example benchmark
//! ```

use mmdts::bench::{report_csv_string, run_benchmark, BenchmarkConfig};

fn main() -> mmdts::Result<()> {
    let cfg = BenchmarkConfig::from_toml(
        r#"
        model = "nlma"
        theta_star = [0.9]
        case = 1
        t = 500
        batches = 5
        p_grid = [1, 5, 10, 20]
        n_list = [300]
        iters = 60
        seed = 10
        "#,
    )?;
    let report = run_benchmark(&cfg)?;
    print!("{}", report_csv_string(&report));
    Ok(())
}
