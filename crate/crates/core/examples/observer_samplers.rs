//! Inside view: the two observer samplers side by side. The mechanistic
//! sampler walks the spine event by event; the direct sampler draws the
//! branch index first, then an Erlang decay time.
//!
//! `cargo run --example observer_samplers`

use branchdecay::gof::{chi_square_homogeneity, ks_two_sample, DEFAULT_ALPHA};
use branchdecay::sim::{branch_class_counts, simulate_sample, SamplerKind};
use branchdecay::ExperimentConfig;

fn main() -> branchdecay::Result<()> {
    let n = 100_000;
    for eps in [0.0, 0.1, 0.5, 0.9] {
        let mech = simulate_sample(&ExperimentConfig {
            sampler: SamplerKind::Mechanistic,
            ..ExperimentConfig::new(1.0, eps, n, 1)
        })?;
        let direct = simulate_sample(&ExperimentConfig::new(1.0, eps, n, 2))?;

        let ks = ks_two_sample(&mech.decay_times(), &direct.decay_times(), DEFAULT_ALPHA)?;
        let max_i = mech.records().iter().chain(direct.records()).map(|r| r.branch_index).max().unwrap();
        let a = branch_class_counts(&mech, max_i)?.classes;
        let b = branch_class_counts(&direct, max_i)?.classes;
        let chi = chi_square_homogeneity(&a, &b, DEFAULT_ALPHA)?;
        println!(
            "eps = {eps:<4} KS D = {:.5} (p = {:.3})  chi2 = {:7.2} on {:2} df  {}",
            ks.statistic,
            ks.p_value,
            chi.statistic,
            chi.df,
            if ks.pass && chi.pass { "indistinguishable" } else { "DIFFERENT" }
        );
    }
    Ok(())
}
