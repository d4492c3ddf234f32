//! Born-rule weights for a superposition measurement, next to the decay
//! branch weights whose epsilon the theory leaves open.
//!
//! `cargo run --example born_rule`

use branchdecay::analytic::{beta, born_weights, branch_weight, golden_rule_rate, AmplitudeVector};
use num_complex::Complex64;

fn main() -> branchdecay::Result<()> {
    let amps = AmplitudeVector::new(vec![
        Complex64::new(0.6, 0.0),
        Complex64::new(0.0, 0.48),
        Complex64::new(0.64, 0.0),
    ])?;
    let w = born_weights(&amps);
    println!("Born weights {w:?}, sum {}", w.iter().sum::<f64>());

    match AmplitudeVector::from_real(&[0.6, 0.6]) {
        Ok(_) => println!("unexpected: unnormalized amplitudes accepted"),
        Err(e) => println!("rejected: {e}"),
    }

    let lambda = golden_rule_rate(0.5 / std::f64::consts::PI, 1.0)?;
    println!("golden-rule rate for |V|^2 rho = 1/(2 pi): {lambda}");
    for eps in [0.0, 0.25, 0.5] {
        let weights: Vec<String> = (1..=4).map(|i| format!("{:.4}", branch_weight(eps, i).unwrap())).collect();
        let b = if eps > 0.0 { format!("{:.4}", beta(eps)?) } else { "-".into() };
        println!("eps = {eps:<4} branch weights {} ... beta = {b}", weights.join(" "));
    }
    Ok(())
}
