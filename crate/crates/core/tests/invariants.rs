use branchdecay::analytic::{erlang_cdf, mixture_survival, ErlangSpec, RateParams};
use branchdecay::gof::{ks_one_sample, ks_two_sample, DEFAULT_ALPHA};
use branchdecay::rng::RngStream;
use branchdecay::sim::{
    empirical_survival, sample_branch_tree, sample_observer_direct, sample_observer_mechanistic,
    simulate_sample, SamplerKind,
};
use branchdecay::ExperimentConfig;
use proptest::prelude::*;

fn dataset(lambda_b: f64, eps: f64, n: u64, seed: u64, sampler: SamplerKind) -> branchdecay::DecayDataset {
    simulate_sample(&ExperimentConfig {
        sampler,
        ..ExperimentConfig::new(lambda_b, eps, n, seed)
    })
    .unwrap()
}

#[test]
fn decay_is_memoryless() {
    let d = dataset(2.0, 0.7, 400_000, 1001, SamplerKind::Direct);
    let lambda_a = d.params().lambda_a();
    for &s in &[0.5, 2.0, 5.0] {
        let residual: Vec<f64> = d.decay_times().into_iter().filter(|&t| t > s).map(|t| t - s).collect();
        assert!(residual.len() > 5_000, "{s}");
        let ks = ks_one_sample(&residual, |x| 1.0 - (-lambda_a * x).exp(), DEFAULT_ALPHA).unwrap();
        assert!(ks.pass, "s={s}: p={}", ks.p_value);
    }
}

#[test]
fn class_conditional_times_are_erlang() {
    for sampler in [SamplerKind::Mechanistic, SamplerKind::Direct] {
        let d = dataset(1.5, 0.5, 300_000, 1002, sampler);
        for i in 1..=5u64 {
            let times: Vec<f64> = d.records().iter().filter(|r| r.branch_index == i).map(|r| r.decay_time).collect();
            let spec = ErlangSpec::new(i, 1.5).unwrap();
            // ten comparisons, Bonferroni-adjusted to a family-wise 0.01
            let ks = ks_one_sample(&times, |t| erlang_cdf(spec, t).unwrap(), DEFAULT_ALPHA / 10.0).unwrap();
            assert!(ks.pass, "{sampler} class {i}: p={}", ks.p_value);
        }
    }
}

#[test]
fn spine_gaps_are_exponential() {
    let params = RateParams::new(3.0, 0.4).unwrap();
    let mut stream = RngStream::new(1003, 0);
    let tree = sample_branch_tree(&params, 20_000.0, &mut stream).unwrap();
    let gaps: Vec<f64> = tree.gaps().collect();
    assert!(gaps.len() > 55_000);
    let ks = ks_one_sample(&gaps, |g| 1.0 - (-3.0 * g).exp(), DEFAULT_ALPHA).unwrap();
    assert!(ks.pass, "p={}", ks.p_value);
    assert!(tree.spine_event_times().iter().all(|&t| t <= tree.horizon()));
}

#[test]
fn empirical_survival_stays_in_dkw_band() {
    let d = dataset(1.0, 0.9, 200_000, 1004, SamplerKind::Mechanistic);
    let grid: Vec<f64> = (0..=80).map(|k| k as f64 * 0.5).collect();
    let emp = empirical_survival(&d, &grid).unwrap();
    // DKW bound at alpha = 0.001
    let band = ((2.0f64 / 0.001).ln() / (2.0 * d.len() as f64)).sqrt();
    for (t, s) in grid.iter().zip(emp) {
        let exact = mixture_survival(*d.params(), *t).unwrap();
        assert!((s - exact).abs() <= band, "t={t}: {s} vs {exact}");
    }
}

#[test]
fn samplers_agree_at_extreme_epsilon() {
    let a = dataset(1.0, 0.99, 50_000, 1005, SamplerKind::Mechanistic);
    let b = dataset(1.0, 0.99, 50_000, 1006, SamplerKind::Direct);
    let ks = ks_two_sample(&a.decay_times(), &b.decay_times(), DEFAULT_ALPHA).unwrap();
    assert!(ks.pass, "p={}", ks.p_value);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn direct_sampler_scales_with_rate(eps in 0.0f64..0.95, seed in any::<u64>(), c in 0.01f64..100.0) {
        let base = RateParams::new(1.0, eps).unwrap();
        let scaled = RateParams::new(c, eps).unwrap();
        for pid in 0..16u64 {
            let r1 = sample_observer_direct(&base, &mut RngStream::new(seed, pid));
            let r2 = sample_observer_direct(&scaled, &mut RngStream::new(seed, pid));
            prop_assert_eq!(r1.branch_index, r2.branch_index);
            let rel = (r2.decay_time * c - r1.decay_time).abs() / r1.decay_time;
            prop_assert!(rel < 1e-12, "rel {}", rel);
        }
    }

    #[test]
    fn records_are_well_formed(
        lambda_b in 1e-3f64..1e3,
        eps in 0.0f64..0.999,
        seed in any::<u64>(),
        mechanistic in any::<bool>(),
    ) {
        let params = RateParams::new(lambda_b, eps).unwrap();
        for pid in 0..32u64 {
            let mut stream = RngStream::new(seed, pid);
            let r = if mechanistic {
                sample_observer_mechanistic(&params, &mut stream)
            } else {
                sample_observer_direct(&params, &mut stream)
            };
            prop_assert!(r.branch_index >= 1);
            prop_assert!(r.decay_time > 0.0 && r.decay_time.is_finite());
            if eps == 0.0 {
                prop_assert_eq!(r.branch_index, 1);
            }
        }
    }

    #[test]
    fn simulation_is_a_pure_function_of_seed(eps in 0.0f64..0.9, seed in any::<u64>(), n in 1u64..200) {
        let a = dataset(1.0, eps, n, seed, SamplerKind::Mechanistic);
        let b = dataset(1.0, eps, n, seed, SamplerKind::Mechanistic);
        prop_assert_eq!(a.records(), b.records());
        let prefix = dataset(1.0, eps, n / 2 + 1, seed, SamplerKind::Mechanistic);
        prop_assert_eq!(&a.records()[..prefix.len()], prefix.records());
    }
}
