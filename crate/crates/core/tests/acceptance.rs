//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints one PASS/FAIL line; exits nonzero if any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use branchdecay::estimate::{
    chi2_geometric, epsilon_upper_limit, estimate, ks_exponential, required_sample_size,
};
use branchdecay::gof::{chi_square_homogeneity, ks_two_sample, DEFAULT_ALPHA};
use branchdecay::numeric::compensated_sum;
use branchdecay::oracle::{run_suite, Lattice};
use branchdecay::rng::derive_seed;
use branchdecay::sim::{branch_class_counts, simulate_sample, SamplerKind};
use branchdecay::ExperimentConfig;

const BIN: &str = env!("CARGO_BIN_EXE_branchdecay");

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn config(lambda_b: f64, eps: f64, n: u64, seed: u64, sampler: SamplerKind) -> ExperimentConfig {
    ExperimentConfig {
        sampler,
        ..ExperimentConfig::new(lambda_b, eps, n, seed)
    }
}

fn run_bin(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).output().expect("spawn branchdecay")
}

fn identity_suite() -> Verdict {
    let start = Instant::now();
    let suite = run_suite(&Lattice::default(), 1e-12, 1e-8).expect("suite");
    let elapsed = start.elapsed();
    let failed: Vec<String> = suite
        .reports
        .iter()
        .filter(|r| !r.pass)
        .map(|r| {
            format!(
                "{}(lambda_B={}, eps={}, shape={:?}) err={:.3e}",
                r.identity_name.as_str(),
                r.params.lambda_b(),
                r.params.epsilon(),
                r.shape,
                r.max_abs_error
            )
        })
        .collect();
    let worst = suite.reports.iter().map(|r| r.max_abs_error / r.tolerance).fold(0.0, f64::max);
    verdict(
        failed.is_empty() && elapsed < Duration::from_secs(10),
        format!(
            "{} checks, {} failed, worst err/tol {:.3}, {:.2?} (limit 10s){}",
            suite.reports.len(),
            failed.len(),
            worst,
            elapsed,
            if failed.is_empty() { String::new() } else { format!(": {}", failed.join("; ")) }
        ),
    )
}

fn figure2_reproduction() -> Verdict {
    let out = run_bin(&["figure2"]);
    assert!(out.status.success(), "figure2 failed");
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    let target = [0.367879, 0.735759, 0.919699, 0.981012, 0.996340];
    let at_one = rows.iter().find(|r| (r[0] - 1.0).abs() < 1e-12).expect("t/W = 1 row");
    let max_dev = at_one[1..].iter().zip(&target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let ordered = rows.iter().all(|r| r[1..].windows(2).all(|w| w[0] <= w[1]));
    verdict(
        max_dev <= 1e-6 && ordered,
        format!("{} grid points, max |S_i(W) - ref| = {max_dev:.2e}, ordered = {ordered}", rows.len()),
    )
}

fn mixture_exponentiality() -> Verdict {
    let start = Instant::now();
    let d = simulate_sample(&config(1.0, 0.5, 1_000_000, 20_251_003, SamplerKind::Direct)).unwrap();
    let ks = ks_exponential(&d, 0.5).unwrap();
    let mean = compensated_sum(d.records().iter().map(|r| r.decay_time)) / d.len() as f64;
    let elapsed = start.elapsed();
    verdict(
        ks.pass && (mean - 2.0).abs() <= 0.006 && elapsed < Duration::from_secs(30),
        format!(
            "KS D = {:.3e} (crit {:.3e}, p = {:.3}), mean = {mean:.5}, {elapsed:.2?} (limit 30s)",
            ks.statistic, ks.critical, ks.p_value
        ),
    )
}

fn sampler_equivalence() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, &eps) in [0.0, 0.1, 0.5, 0.9].iter().enumerate() {
        let mech = simulate_sample(&config(1.0, eps, 100_000, derive_seed(41, 2 * k as u64), SamplerKind::Mechanistic)).unwrap();
        let direct = simulate_sample(&config(1.0, eps, 100_000, derive_seed(41, 2 * k as u64 + 1), SamplerKind::Direct)).unwrap();
        let ks = ks_two_sample(&mech.decay_times(), &direct.decay_times(), DEFAULT_ALPHA).unwrap();
        let max_i = mech
            .records()
            .iter()
            .chain(direct.records())
            .map(|r| r.branch_index)
            .max()
            .unwrap();
        let a = branch_class_counts(&mech, max_i).unwrap().classes;
        let b = branch_class_counts(&direct, max_i).unwrap().classes;
        let chi = chi_square_homogeneity(&a, &b, DEFAULT_ALPHA).unwrap();
        pass &= ks.pass && chi.pass;
        parts.push(format!(
            "eps={eps}: KS p={:.3} chi2={:.2}/{:.2} (df {})",
            ks.p_value, chi.statistic, chi.critical, chi.df
        ));
    }
    verdict(pass, parts.join("; "))
}

fn branch_class_law() -> Verdict {
    let d = simulate_sample(&config(1.0, 0.5, 1_000_000, 20_251_005, SamplerKind::Direct)).unwrap();
    let max_i = d.records().iter().map(|r| r.branch_index).max().unwrap();
    let counts = branch_class_counts(&d, max_i).unwrap();
    let frac = counts.classes[0] as f64 / counts.total() as f64;
    let chi = chi2_geometric(&counts, 0.5).unwrap();
    verdict(
        (frac - 0.5).abs() <= 0.0015 && chi.pass,
        format!(
            "class-1 fraction {frac:.5}, chi2 = {:.2} (crit {:.2}, df {})",
            chi.statistic, chi.critical, chi.df
        ),
    )
}

fn estimation_round_trip() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, &eps) in [0.0, 0.1, 0.5].iter().enumerate() {
        let estimates: Vec<(f64, bool)> = (0..1000u64)
            .map(|r| {
                let seed = derive_seed(61 + k as u64, r);
                let d = simulate_sample(&ExperimentConfig::new(1.0, eps, 10_000, seed)).unwrap();
                let e = estimate(&d, 1.0, 0.95).unwrap();
                (e.epsilon_hat, e.epsilon_ci_lo <= eps && eps <= e.epsilon_ci_hi)
            })
            .collect();
        let n = estimates.len() as f64;
        let mean = compensated_sum(estimates.iter().map(|e| e.0)) / n;
        let var = compensated_sum(estimates.iter().map(|e| (e.0 - mean).powi(2))) / (n - 1.0);
        let se = (var / n).sqrt();
        let z = (mean - eps) / se;
        let coverage = estimates.iter().filter(|e| e.1).count() as f64 / n;
        pass &= z.abs() <= 3.0 && coverage >= 0.94;
        parts.push(format!("eps={eps}: mean {mean:.6} ({z:+.2} SE), coverage {:.1}%", 100.0 * coverage));
    }
    verdict(pass, parts.join("; "))
}

fn upper_limit_scaling() -> Verdict {
    let limits: Vec<f64> = (0..50u64)
        .map(|r| {
            let d = simulate_sample(&ExperimentConfig::new(1.0, 0.0, 10_000_000, derive_seed(71, r))).unwrap();
            epsilon_upper_limit(&d, 1.0, 0.95).unwrap()
        })
        .collect();
    let below = limits.iter().filter(|&&ul| ul <= 1e-3).count();
    let planned = required_sample_size(1e-3, 0.95).unwrap();
    let out = run_bin(&["power", "0.001", "0.95"]);
    let cli_planned: u64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    let fraction = below as f64 / limits.len() as f64;
    let power_ok = cli_planned == planned && (2.6e6..2.8e6).contains(&(planned as f64));
    let max_ul = limits.iter().cloned().fold(f64::MIN, f64::max);
    verdict(
        fraction >= 0.95 && power_ok,
        format!(
            "{below}/50 replicates with UL <= 1e-3 (need >= 47.5), max UL {max_ul:.3e}; power 0.001 0.95 = {cli_planned}"
        ),
    )
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let mut files = Vec::new();
    for sampler in ["direct", "mechanistic"] {
        for (tag, threads) in [("a", "1"), ("b", "1"), ("c", "8")] {
            let p = path(&format!("{sampler}_{tag}.csv"));
            let out = run_bin(&[
                "simulate", "--lambda-b", "1.5", "--epsilon", "0.3", "--n", "200000", "--seed", "99",
                "--sampler", sampler, "--threads", threads, "--out", &p,
            ]);
            assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
            files.push((sampler, std::fs::read(&p).unwrap()));
        }
    }
    let identical = files.chunks(3).all(|c| c[0].1 == c[1].1 && c[0].1 == c[2].1);
    let differ = files[0].1 != files[3].1;
    verdict(
        identical && differ,
        format!(
            "direct and mechanistic runs ({} / {} bytes) identical across reruns and 1 vs 8 threads: {identical}",
            files[0].1.len(),
            files[3].1.len()
        ),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 8] = [
        ("identity suite", identity_suite),
        ("per-branch survival curves", figure2_reproduction),
        ("mixture exponentiality", mixture_exponentiality),
        ("sampler equivalence", sampler_equivalence),
        ("branch-class law", branch_class_law),
        ("estimation round trip", estimation_round_trip),
        ("upper-limit scaling", upper_limit_scaling),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        if !v.pass {
            failures += 1;
        }
        println!("[{}] criterion {} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, k + 1, v.detail);
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
