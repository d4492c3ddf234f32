//! The geometric mixture of per-branch Erlang laws is exactly exponential
//! with the apparent rate lambda_A = (1 - eps) lambda_B.
//!
//! `cargo run --example mixture_exponential`

use branchdecay::analytic::{exp_survival, mixture_survival, RateParams};
use branchdecay::estimate::ks_exponential;
use branchdecay::sim::{empirical_survival, simulate_sample};
use branchdecay::ExperimentConfig;

fn main() -> branchdecay::Result<()> {
    let config = ExperimentConfig::new(1.0, 0.5, 1_000_000, 2024);
    let params: RateParams = config.rate_params()?;
    let data = simulate_sample(&config)?;

    let grid: Vec<f64> = (0..=8).map(|k| k as f64).collect();
    let emp = empirical_survival(&data, &grid)?;
    println!("{:>4} {:>10} {:>10} {:>10}", "t", "empirical", "mixture", "exp(-l_A t)");
    for (t, s) in grid.iter().zip(&emp) {
        println!(
            "{t:>4} {s:>10.6} {:>10.6} {:>10.6}",
            mixture_survival(params, *t)?,
            exp_survival(params.lambda_a(), *t)?
        );
    }

    let mean = data.decay_times().iter().sum::<f64>() / data.len() as f64;
    let ks = ks_exponential(&data, params.lambda_a())?;
    println!("mean lifetime {mean:.4} (tau_A = {})", params.tau_a());
    println!("KS vs Exp({}) D = {:.2e}, p = {:.3}, pass = {}", params.lambda_a(), ks.statistic, ks.p_value, ks.pass);
    Ok(())
}
