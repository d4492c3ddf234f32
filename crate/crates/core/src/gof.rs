//! Kolmogorov-Smirnov and Pearson chi-square tests.
//!
//! KS decisions use the asymptotic critical value `c(alpha) / sqrt(n_eff)`
//! with `c(alpha) = sqrt(-ln(alpha / 2) / 2)` (1.6276 at `alpha = 0.01`).
//! Chi-square cells are pooled left to right until every expected count is
//! at least [`MIN_EXPECTED`]; a short remainder is folded into the last cell.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{domain, invalid, Result};

pub const DEFAULT_ALPHA: f64 = 0.01;
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsOutcome {
    pub statistic: f64,
    pub critical: f64,
    pub p_value: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareOutcome {
    pub statistic: f64,
    pub df: usize,
    pub critical: f64,
    pub pass: bool,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// `c(alpha)` of the asymptotic Kolmogorov distribution.
pub fn kolmogorov_coefficient(alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

/// Asymptotic Kolmogorov tail probability, with the usual small-sample
/// adjustment of the scaled statistic.
pub fn kolmogorov_p_value(statistic: f64, n_eff: f64) -> f64 {
    let root = n_eff.sqrt();
    let lambda = (root + 0.12 + 0.11 / root) * statistic;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = sign * (-2.0 * kf * kf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_outcome(statistic: f64, n_eff: f64, alpha: f64) -> KsOutcome {
    let critical = kolmogorov_coefficient(alpha) / n_eff.sqrt();
    KsOutcome {
        statistic,
        critical,
        p_value: kolmogorov_p_value(statistic, n_eff),
        pass: statistic < critical,
    }
}

/// One-sample KS statistic `sup |F_n - F|`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(invalid("KS test on an empty sample"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (k, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((k + 1) as f64 / n - f).max(f - k as f64 / n);
    }
    Ok(d)
}

pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F, alpha: f64) -> Result<KsOutcome> {
    check_alpha(alpha)?;
    let d = ks_statistic(samples, cdf)?;
    Ok(ks_outcome(d, samples.len() as f64, alpha))
}

/// Two-sample KS statistic `sup |F_a - F_b|`; ties advance both samples together.
pub fn ks_two_sample_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid("two-sample KS test needs two nonempty samples"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

pub fn ks_two_sample(a: &[f64], b: &[f64], alpha: f64) -> Result<KsOutcome> {
    check_alpha(alpha)?;
    let d = ks_two_sample_statistic(a, b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    Ok(ks_outcome(d, na * nb / (na + nb), alpha))
}

/// Upper `alpha` quantile of chi-square with `df` degrees of freedom.
pub fn chi_square_critical(df: usize, alpha: f64) -> f64 {
    if df == 0 {
        return 0.0;
    }
    ChiSquared::new(df as f64)
        .expect("df > 0")
        .inverse_cdf(1.0 - alpha)
}

fn chi_outcome(statistic: f64, df: usize, alpha: f64) -> ChiSquareOutcome {
    let critical = chi_square_critical(df, alpha);
    ChiSquareOutcome {
        statistic,
        df,
        critical,
        pass: if df == 0 { statistic == 0.0 } else { statistic < critical },
    }
}

/// Groups consecutive cells so each group's `weight` reaches `min`.
/// Returns the group boundaries as half-open index ranges.
fn pool_cells(weights: &[f64], min: f64) -> Vec<std::ops::Range<usize>> {
    let mut groups: Vec<std::ops::Range<usize>> = Vec::new();
    let mut start = 0;
    let mut acc = 0.0;
    for (k, &w) in weights.iter().enumerate() {
        acc += w;
        if acc >= min {
            groups.push(start..k + 1);
            start = k + 1;
            acc = 0.0;
        }
    }
    if start < weights.len() {
        match groups.last_mut() {
            Some(last) => last.end = weights.len(),
            None => groups.push(start..weights.len()),
        }
    }
    groups
}

/// Pearson goodness of fit of `observed` counts to `expected` counts,
/// pooling cells to a minimum expected count. Degrees of freedom are
/// `cells - 1` (no fitted parameters).
pub fn chi_square_goodness(observed: &[u64], expected: &[f64], alpha: f64) -> Result<ChiSquareOutcome> {
    check_alpha(alpha)?;
    if observed.len() != expected.len() {
        return Err(invalid("observed and expected cell counts differ in length"));
    }
    if observed.iter().sum::<u64>() == 0 {
        return Err(invalid("chi-square test on zero total count"));
    }
    if expected.iter().any(|e| e.is_nan() || *e < 0.0) {
        return Err(invalid("expected counts must be nonnegative"));
    }
    let groups = pool_cells(expected, MIN_EXPECTED);
    let mut statistic = 0.0;
    for g in &groups {
        let o: u64 = observed[g.clone()].iter().sum();
        let e: f64 = expected[g.clone()].iter().sum();
        if e == 0.0 {
            if o > 0 {
                statistic = f64::INFINITY;
            }
            continue;
        }
        let diff = o as f64 - e;
        statistic += diff * diff / e;
    }
    let df = groups.len().saturating_sub(1);
    Ok(chi_outcome(statistic, df, alpha))
}

/// Pearson test of homogeneity between two count vectors over the same
/// cells (a 2 x k contingency table).
pub fn chi_square_homogeneity(a: &[u64], b: &[u64], alpha: f64) -> Result<ChiSquareOutcome> {
    check_alpha(alpha)?;
    if a.len() != b.len() {
        return Err(invalid("count vectors differ in length"));
    }
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    if na == 0 || nb == 0 {
        return Err(invalid("chi-square homogeneity needs two nonempty samples"));
    }
    let total = (na + nb) as f64;
    let share = na.min(nb) as f64 / total;
    // smallest expected cell in a column is column_total * share
    let weights: Vec<f64> = a.iter().zip(b).map(|(&x, &y)| (x + y) as f64 * share).collect();
    let groups = pool_cells(&weights, MIN_EXPECTED);
    let mut statistic = 0.0;
    for g in &groups {
        let oa: u64 = a[g.clone()].iter().sum();
        let ob: u64 = b[g.clone()].iter().sum();
        let col = (oa + ob) as f64;
        if col == 0.0 {
            continue;
        }
        let ea = col * na as f64 / total;
        let eb = col * nb as f64 / total;
        statistic += (oa as f64 - ea).powi(2) / ea + (ob as f64 - eb).powi(2) / eb;
    }
    let df = groups.len().saturating_sub(1);
    Ok(chi_outcome(statistic, df, alpha))
}
