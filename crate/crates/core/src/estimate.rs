//! Rate and branch-probability estimation from decay data.
//!
//! The apparent rate is fitted by exponential maximum likelihood. Its
//! interval comes from the exact pivot `lambda * sum(t) ~ Gamma(n, 1)` for
//! `n <= 10^4` and from the normal approximation `lambda_hat (1 +- z / sqrt(n))`
//! above that. The branch probability follows by inverting
//! `lambda_A = (1 - epsilon) lambda_B` against a theoretical branching rate.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::analytic::branch_weight;
use crate::error::{domain, invalid, Result};
use crate::gof::{self, ChiSquareOutcome, KsOutcome, DEFAULT_ALPHA};
use crate::numeric::{compensated_sum, fmt_f64, gamma_quantile, normal_quantile};
use crate::sim::{branch_class_counts, BranchClassCounts, DecayDataset};

/// Largest sample size for which intervals use the exact gamma pivot.
pub const EXACT_INTERVAL_MAX_N: usize = 10_000;

fn check_confidence(confidence: f64) -> Result<()> {
    if confidence > 0.0 && confidence < 1.0 {
        Ok(())
    } else {
        Err(domain(format!(
            "confidence must lie in (0, 1), got {confidence}"
        )))
    }
}

fn check_rate(name: &str, rate: f64) -> Result<()> {
    if rate > 0.0 && rate.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{name} must be positive and finite, got {rate}")))
    }
}

/// Exponential MLE of the apparent rate with a two-sided interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub lambda_hat: f64,
    pub ci: (f64, f64),
    pub n: usize,
    pub total_time: f64,
}

fn total_time(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(invalid(format!(
            "rate estimation needs at least 2 decay times, got {}",
            times.len()
        )));
    }
    if let Some(bad) = times.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(invalid(format!("decay times must be positive, found {bad}")));
    }
    Ok(compensated_sum(times.iter().copied()))
}

/// Lower `p`-quantile bound on the rate given `n` decays in total time `total`.
fn rate_quantile(n: usize, total: f64, p: f64) -> f64 {
    if n <= EXACT_INTERVAL_MAX_N {
        gamma_quantile(n as f64, p) / total
    } else {
        let lambda_hat = n as f64 / total;
        lambda_hat * (1.0 + normal_quantile(p) / (n as f64).sqrt())
    }
}

pub fn mle_lambda_times(times: &[f64], confidence: f64) -> Result<RateEstimate> {
    check_confidence(confidence)?;
    let total = total_time(times)?;
    let n = times.len();
    let alpha = 1.0 - confidence;
    Ok(RateEstimate {
        lambda_hat: n as f64 / total,
        ci: (
            rate_quantile(n, total, alpha / 2.0),
            rate_quantile(n, total, 1.0 - alpha / 2.0),
        ),
        n,
        total_time: total,
    })
}

pub fn mle_lambda(dataset: &DecayDataset, confidence: f64) -> Result<RateEstimate> {
    mle_lambda_times(&dataset.decay_times(), confidence)
}

/// `1 - lambda_A_hat / lambda_B`. Negative values are returned as computed.
pub fn epsilon_from_rates(lambda_a_hat: f64, lambda_b_theory: f64) -> Result<f64> {
    check_rate("lambda_A_hat", lambda_a_hat)?;
    check_rate("lambda_B", lambda_b_theory)?;
    Ok(1.0 - lambda_a_hat / lambda_b_theory)
}

/// One-sided upper confidence bound on epsilon, `1 - lambda_lo / lambda_B`
/// where `lambda_lo` is the one-sided lower bound on the apparent rate.
pub fn epsilon_upper_limit_times(times: &[f64], lambda_b_theory: f64, confidence: f64) -> Result<f64> {
    check_confidence(confidence)?;
    check_rate("lambda_B", lambda_b_theory)?;
    let total = total_time(times)?;
    let lower = rate_quantile(times.len(), total, 1.0 - confidence);
    Ok(1.0 - lower / lambda_b_theory)
}

pub fn epsilon_upper_limit(dataset: &DecayDataset, lambda_b_theory: f64, confidence: f64) -> Result<f64> {
    epsilon_upper_limit_times(&dataset.decay_times(), lambda_b_theory, confidence)
}

/// Smallest `N` with `z(confidence) (1 - epsilon_true) / sqrt(N) <= epsilon_target`:
/// the sample size at which the one-sided upper limit, computed from data
/// with true branch probability `epsilon_true`, shrinks to `epsilon_target`.
pub fn required_sample_size_at(epsilon_target: f64, confidence: f64, epsilon_true: f64) -> Result<u64> {
    if !(epsilon_target > 0.0 && epsilon_target < 1.0) {
        return Err(domain(format!(
            "epsilon_target must lie in (0, 1), got {epsilon_target}"
        )));
    }
    check_confidence(confidence)?;
    if !(0.0..1.0).contains(&epsilon_true) {
        return Err(domain(format!("epsilon_true must lie in [0, 1), got {epsilon_true}")));
    }
    let z = normal_quantile(confidence);
    if z <= 0.0 {
        return Ok(1);
    }
    let scale = z * (1.0 - epsilon_true);
    let bound = |n: u64| scale / (n as f64).sqrt();
    let mut n = ((scale / epsilon_target).powi(2).ceil() as u64).max(1);
    while n > 1 && bound(n - 1) <= epsilon_target {
        n -= 1;
    }
    while bound(n) > epsilon_target {
        n += 1;
    }
    Ok(n)
}

/// Sample size needed to bring the upper limit down to `epsilon_target`
/// when the data come from the conventional case `epsilon = 0`.
pub fn required_sample_size(epsilon_target: f64, confidence: f64) -> Result<u64> {
    required_sample_size_at(epsilon_target, confidence, 0.0)
}

pub fn ks_exponential_times(times: &[f64], lambda: f64, alpha: f64) -> Result<KsOutcome> {
    check_rate("lambda", lambda)?;
    gof::ks_one_sample(times, |t| -(-lambda * t.max(0.0)).exp_m1(), alpha)
}

/// KS test of the decay times against Exponential(lambda) at `alpha = 0.01`.
pub fn ks_exponential(dataset: &DecayDataset, lambda: f64) -> Result<KsOutcome> {
    ks_exponential_times(&dataset.decay_times(), lambda, DEFAULT_ALPHA)
}

/// Expected class counts `N (1 - epsilon) epsilon^{i-1}` for the listed
/// classes followed by the overflow expectation `N epsilon^max_i`.
pub fn geometric_expected_counts(total: u64, max_i: u64, epsilon: f64) -> Result<Vec<f64>> {
    let n = total as f64;
    let mut expected = Vec::with_capacity(max_i as usize + 1);
    for i in 1..=max_i {
        expected.push(n * branch_weight(epsilon, i)?);
    }
    let tail = if epsilon == 0.0 { 0.0 } else { (max_i as f64 * epsilon.ln()).exp() };
    expected.push(n * tail);
    Ok(expected)
}

pub fn chi2_geometric_at(counts: &BranchClassCounts, epsilon: f64, alpha: f64) -> Result<ChiSquareOutcome> {
    let total = counts.total();
    if total == 0 {
        return Err(invalid("chi-square on zero total count"));
    }
    let expected = geometric_expected_counts(total, counts.max_class(), epsilon)?;
    gof::chi_square_goodness(&counts.with_overflow(), &expected, alpha)
}

/// Pearson chi-square of branch-class counts against the geometric branch
/// law at `alpha = 0.01`.
pub fn chi2_geometric(counts: &BranchClassCounts, epsilon: f64) -> Result<ChiSquareOutcome> {
    chi2_geometric_at(counts, epsilon, DEFAULT_ALPHA)
}

/// Fitted rates, branch probability and goodness-of-fit summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    #[serde(rename = "lambda_A_hat")]
    pub lambda_a_hat: f64,
    #[serde(rename = "lambda_A_ci_lo")]
    pub lambda_a_ci_lo: f64,
    #[serde(rename = "lambda_A_ci_hi")]
    pub lambda_a_ci_hi: f64,
    pub epsilon_hat: f64,
    pub epsilon_ci_lo: f64,
    pub epsilon_ci_hi: f64,
    pub epsilon_upper_limit: f64,
    pub ks_stat: f64,
    pub ks_pass: bool,
    /// Branch-class fit against the generating epsilon; simulated data only.
    pub chi2_stat: f64,
    pub confidence: f64,
    pub n: u64,
}

pub const ESTIMATE_CSV_HEADER: &str = "lambda_A_hat,lambda_A_ci_lo,lambda_A_ci_hi,epsilon_hat,epsilon_ci_lo,epsilon_ci_hi,epsilon_upper_limit,ks_stat,ks_pass,chi2_stat,confidence,n";

impl EstimateResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain struct serializes")
    }

    pub fn csv_row(&self) -> String {
        [
            fmt_f64(self.lambda_a_hat),
            fmt_f64(self.lambda_a_ci_lo),
            fmt_f64(self.lambda_a_ci_hi),
            fmt_f64(self.epsilon_hat),
            fmt_f64(self.epsilon_ci_lo),
            fmt_f64(self.epsilon_ci_hi),
            fmt_f64(self.epsilon_upper_limit),
            fmt_f64(self.ks_stat),
            self.ks_pass.to_string(),
            fmt_f64(self.chi2_stat),
            fmt_f64(self.confidence),
            self.n.to_string(),
        ]
        .join(",")
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{ESTIMATE_CSV_HEADER}")?;
        writeln!(out, "{}", self.csv_row())?;
        Ok(())
    }
}

/// Full estimation pass over a dataset at KS level `alpha = 0.01`.
pub fn estimate(dataset: &DecayDataset, lambda_b_theory: f64, confidence: f64) -> Result<EstimateResult> {
    estimate_at(dataset, lambda_b_theory, confidence, DEFAULT_ALPHA)
}

pub fn estimate_at(
    dataset: &DecayDataset,
    lambda_b_theory: f64,
    confidence: f64,
    alpha: f64,
) -> Result<EstimateResult> {
    check_rate("lambda_B", lambda_b_theory)?;
    let times = dataset.decay_times();
    let rate = mle_lambda_times(&times, confidence)?;
    let epsilon_hat = epsilon_from_rates(rate.lambda_hat, lambda_b_theory)?;
    let epsilon_upper_limit = epsilon_upper_limit_times(&times, lambda_b_theory, confidence)?;
    let ks = ks_exponential_times(&times, rate.lambda_hat, alpha)?;
    let max_i = dataset
        .records()
        .iter()
        .map(|r| r.branch_index)
        .max()
        .unwrap_or(1);
    let counts = branch_class_counts(dataset, max_i)?;
    let chi2 = chi2_geometric_at(&counts, dataset.params().epsilon(), alpha)?;
    Ok(EstimateResult {
        lambda_a_hat: rate.lambda_hat,
        lambda_a_ci_lo: rate.ci.0,
        lambda_a_ci_hi: rate.ci.1,
        epsilon_hat,
        epsilon_ci_lo: 1.0 - rate.ci.1 / lambda_b_theory,
        epsilon_ci_hi: 1.0 - rate.ci.0 / lambda_b_theory,
        epsilon_upper_limit,
        ks_stat: ks.statistic,
        ks_pass: ks.pass,
        chi2_stat: chi2.statistic,
        confidence,
        n: times.len() as u64,
    })
}
