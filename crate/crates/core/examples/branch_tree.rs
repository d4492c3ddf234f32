//! Outside view: one particle's spine of branching events up to a horizon.
//! Ground branch B_i splits off at the i-th event.
//!
//! `cargo run --example branch_tree`

use branchdecay::analytic::RateParams;
use branchdecay::rng::RngStream;
use branchdecay::sim::sample_branch_tree;

fn main() -> branchdecay::Result<()> {
    let params = RateParams::new(2.0, 0.5)?;
    let mut stream = RngStream::new(42, 0);
    let tree = sample_branch_tree(&params, 5.0, &mut stream)?;

    println!("lambda_B = {}, horizon = {}", params.lambda_b(), tree.horizon());
    println!("{} branching events (expected {})", tree.event_count(), params.lambda_b() * tree.horizon());
    for i in 1..=tree.event_count() {
        println!("  B_{i:<2} splits at t = {:.4}", tree.branch_time(i).unwrap());
    }
    let gaps: Vec<f64> = tree.gaps().collect();
    if !gaps.is_empty() {
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        println!("mean gap {mean:.4} (W = {})", params.waiting_time());
    }
    Ok(())
}
