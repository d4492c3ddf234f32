//! How many decays it takes before a one-sided upper limit on epsilon
//! reaches a target, and what the limit looks like at a few sample sizes
//! when the true epsilon is zero.
//!
//! `cargo run --release --example upper_limit_power`

use branchdecay::estimate::{epsilon_upper_limit, required_sample_size};
use branchdecay::rng::derive_seed;
use branchdecay::sim::simulate_sample;
use branchdecay::ExperimentConfig;

fn main() -> branchdecay::Result<()> {
    for target in [0.1, 0.01, 0.001] {
        println!("UL target {target:<6} needs N >= {}", required_sample_size(target, 0.95)?);
    }
    println!();
    for n in [10_000u64, 100_000, 1_000_000] {
        let limits: Vec<f64> = (0..5)
            .map(|r| {
                let data = simulate_sample(&ExperimentConfig::new(1.0, 0.0, n, derive_seed(5, r)))?;
                epsilon_upper_limit(&data, 1.0, 0.95)
            })
            .collect::<branchdecay::Result<_>>()?;
        let shown: Vec<String> = limits.iter().map(|ul| format!("{ul:+.2e}")).collect();
        println!("N = {n:>9}: upper limits {}", shown.join(" "));
    }
    Ok(())
}
