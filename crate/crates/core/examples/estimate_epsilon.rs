//! Round trip: simulate a dataset, write it to CSV, read it back and
//! recover lambda_A and epsilon with confidence intervals.
//!
//! `cargo run --example estimate_epsilon`

use std::io::BufReader;

use branchdecay::estimate::estimate;
use branchdecay::sim::{read_dataset, simulate_sample, write_dataset};
use branchdecay::ExperimentConfig;

fn main() -> branchdecay::Result<()> {
    let config = ExperimentConfig::new(2.0, 0.1, 10_000, 7);
    let data = simulate_sample(&config)?;

    let mut csv = Vec::new();
    write_dataset(&data, &mut csv)?;
    let reread = read_dataset(BufReader::new(csv.as_slice()))?;
    assert_eq!(reread, data);

    let est = estimate(&reread, config.lambda_b, 0.95)?;
    println!("true   lambda_A = {}, epsilon = {}", config.rate_params()?.lambda_a(), config.epsilon);
    println!(
        "fitted lambda_A = {:.4} [{:.4}, {:.4}]",
        est.lambda_a_hat, est.lambda_a_ci_lo, est.lambda_a_ci_hi
    );
    println!(
        "fitted epsilon  = {:.4} [{:.4}, {:.4}], 95% upper limit {:.4}",
        est.epsilon_hat, est.epsilon_ci_lo, est.epsilon_ci_hi, est.epsilon_upper_limit
    );
    println!("KS pass {}, chi2 vs geometric {:.2}", est.ks_pass, est.chi2_stat);
    println!("{}", est.to_json());
    Ok(())
}
