//! Brute-force numerical checks of the closed forms.
//!
//! Each `verify_*` function evaluates one identity by truncated series or
//! quadrature and compares it with the closed form from [`crate::analytic`].
//! Series are truncated with their exact geometric tail bounds and summed
//! with compensation. Nothing here feeds back into the closed forms.

use serde::Serialize;

use crate::analytic::{
    apparent_lifetime, beta, branch_weight, erlang_pdf, erlang_survival, mixture_pdf,
    mixture_survival, ErlangSpec, RateParams,
};
use crate::error::{domain, Result};
use crate::numeric::{compensated_sum, powers_double_double, CompensatedSum};
use statrs::function::factorial::ln_factorial;

pub const SERIES_TOLERANCE: f64 = 1e-12;
pub const QUADRATURE_TOLERANCE: f64 = 1e-8;

/// Series are truncated once the remaining tail is below this fraction of
/// the tolerance, leaving the rest of the budget for rounding.
const TAIL_SHARE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityName {
    BetaSeries,
    TauASeries,
    FASeries,
    SAColumnSum,
    PdfNormalization,
}

impl IdentityName {
    pub fn as_str(&self) -> &'static str {
        match self {
            IdentityName::BetaSeries => "beta_series",
            IdentityName::TauASeries => "tau_A_series",
            IdentityName::FASeries => "f_A_series",
            IdentityName::SAColumnSum => "S_A_column_sum",
            IdentityName::PdfNormalization => "pdf_normalization",
        }
    }
}

/// Outcome of one identity check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    #[serde(serialize_with = "serialize_identity")]
    pub identity_name: IdentityName,
    pub params: RateParams,
    /// Erlang shape, for the normalization check.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<f64>>,
    pub max_abs_error: f64,
    pub terms_used: u64,
    pub tolerance: f64,
    pub pass: bool,
}

fn serialize_identity<S: serde::Serializer>(name: &IdentityName, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(name.as_str())
}

impl IdentityReport {
    fn new(
        identity_name: IdentityName,
        params: RateParams,
        max_abs_error: f64,
        terms_used: u64,
        tolerance: f64,
    ) -> Self {
        Self {
            identity_name,
            params,
            shape: None,
            t_grid: None,
            max_abs_error,
            terms_used: terms_used.max(1),
            tolerance,
            pass: max_abs_error <= tolerance,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

fn check_tolerance(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("tolerance must be positive, got {tol}")))
    }
}

/// Smallest `m >= 1` with `epsilon^m * scale < budget`.
fn geometric_cutoff(epsilon: f64, scale: f64, budget: f64) -> u64 {
    if epsilon == 0.0 {
        return 1;
    }
    let m = ((budget / scale).ln() / epsilon.ln()).floor() as i64 + 1;
    let mut m = m.max(1) as u64;
    while m > 1 && epsilon.powf((m - 1) as f64) * scale < budget {
        m -= 1;
    }
    while epsilon.powf(m as f64) * scale >= budget {
        m += 1;
    }
    m
}

/// Compares `sum_{i=1..M} epsilon^i` with `epsilon / (1 - epsilon)`.
pub fn verify_beta_series(epsilon: f64, tol: f64) -> Result<IdentityReport> {
    check_tolerance(tol)?;
    let closed = beta(epsilon)?;
    // tail after M terms: epsilon^{M+1} / (1 - epsilon)
    let m = geometric_cutoff(epsilon, epsilon / (1.0 - epsilon), TAIL_SHARE * tol);
    let powers = powers_double_double(epsilon, m);
    let series = compensated_sum(powers[1..].iter().flat_map(|&(hi, lo)| [hi, lo]));
    let params = RateParams::new(1.0, epsilon)?;
    Ok(IdentityReport::new(
        IdentityName::BetaSeries,
        params,
        (series - closed).abs(),
        m,
        tol,
    ))
}

/// Compares `sum_i (N_i / N) W_i` with `W / (1 - epsilon)`.
pub fn verify_tau_series(params: RateParams, tol: f64) -> Result<IdentityReport> {
    check_tolerance(tol)?;
    let eps = params.epsilon();
    let w = params.waiting_time();
    // exact tail: sum_{i>M} i (1-eps) eps^{i-1} W = W eps^M (M + 1/(1-eps))
    let mut m = 1;
    if eps > 0.0 {
        loop {
            let tail = w * eps.powf(m as f64) * (m as f64 + 1.0 / (1.0 - eps));
            if tail < TAIL_SHARE * tol {
                break;
            }
            m += 1;
        }
    }
    // sum_i i (1-eps) eps^{i-1}, with W factored out
    let q = 1.0 - eps;
    let powers = powers_double_double(eps, m - 1);
    let scaled = compensated_sum(powers.iter().enumerate().flat_map(|(k, &(hi, lo))| {
        let i = (k + 1) as f64;
        let c = i * q;
        let c_lo = i.mul_add(q, -c);
        let p = c * hi;
        [p, c.mul_add(hi, -p), c * lo + c_lo * hi]
    }));
    let series = w * scaled;
    Ok(IdentityReport::new(
        IdentityName::TauASeries,
        params,
        (series - apparent_lifetime(params)).abs(),
        m,
        tol,
    ))
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(domain("time grid is empty"));
    }
    if let Some(t) = t_grid.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(domain(format!("time grid contains invalid point {t}")));
    }
    Ok(())
}

/// Compares `sum_i (N_i / N) f_i(lambda_B, t)` with `f_1(lambda_A, t)` on a grid.
pub fn verify_fa_series(params: RateParams, t_grid: &[f64], tol: f64) -> Result<IdentityReport> {
    check_tolerance(tol)?;
    check_grid(t_grid)?;
    let eps = params.epsilon();
    let lb = params.lambda_b();
    // every Erlang density is bounded by its rate, so the tail is at most lambda_B eps^M
    let m = geometric_cutoff(eps, lb, TAIL_SHARE * tol);
    let mut worst: f64 = 0.0;
    for &t in t_grid {
        let series = compensated_sum((1..=m).map(|i| {
            let spec = ErlangSpec::new(i, lb).expect("valid spec");
            branch_weight(eps, i).expect("validated epsilon") * erlang_pdf(spec, t).expect("t >= 0")
        }));
        worst = worst.max((series - mixture_pdf(params, t)?).abs());
    }
    let mut report = IdentityReport::new(IdentityName::FASeries, params, worst, m, tol);
    report.t_grid = Some(t_grid.to_vec());
    Ok(report)
}

/// The two summation orders of the apparent-survival double series at
/// `u = lambda_B t`, truncated to the same `rows` rows of the triangle
/// `(1 - eps) eps^{i-1} e^{-u} u^{n-1}/(n-1)!`, `1 <= n <= i <= rows`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleSeries {
    pub row_order: f64,
    pub column_order: f64,
}

fn poisson_weight(k: u64, u: f64) -> f64 {
    if u == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (k as f64 * u.ln() - u - ln_factorial(k)).exp()
}

pub fn survival_double_series(epsilon: f64, u: f64, rows: u64) -> DoubleSeries {
    let rows = rows.max(1);
    let weights: Vec<f64> = (1..=rows)
        .map(|i| branch_weight(epsilon, i).expect("validated epsilon"))
        .collect();
    let poisson: Vec<f64> = (0..rows).map(|k| poisson_weight(k, u)).collect();

    // rows: sum_i w_i * (sum_{n<i} p_n), inner partial sum carried forward
    let mut row_total = CompensatedSum::new();
    let mut partial = CompensatedSum::new();
    for (i, &w) in weights.iter().enumerate() {
        partial.add(poisson[i]);
        row_total.add(w * partial.value());
    }

    // columns: sum_n p_n * (sum_{i>n} w_i), column sums as suffix sums
    let mut column_total = CompensatedSum::new();
    let mut suffix = CompensatedSum::new();
    let mut column_weights = vec![0.0; weights.len()];
    for (k, &w) in weights.iter().enumerate().rev() {
        suffix.add(w);
        column_weights[k] = suffix.value();
    }
    for (p, c) in poisson.iter().zip(&column_weights) {
        column_total.add(p * c);
    }

    DoubleSeries {
        row_order: row_total.value(),
        column_order: column_total.value(),
    }
}

/// Evaluates the apparent-survival double series in column order (the
/// interchange that turns it into `e^{-u} sum (eps u)^n / n!`) and in row
/// order, and compares both with `exp(-lambda_A t)`.
pub fn verify_sa_column_sum(params: RateParams, t_grid: &[f64], tol: f64) -> Result<IdentityReport> {
    check_tolerance(tol)?;
    check_grid(t_grid)?;
    let eps = params.epsilon();
    // every S_i <= 1, so dropping rows beyond M costs at most eps^M
    let m = geometric_cutoff(eps, 1.0, TAIL_SHARE * tol);
    let mut worst: f64 = 0.0;
    for &t in t_grid {
        let u = params.lambda_b() * t;
        let sums = survival_double_series(eps, u, m);
        let closed = mixture_survival(params, t)?;
        worst = worst
            .max((sums.column_order - closed).abs())
            .max((sums.row_order - closed).abs());
    }
    let mut report = IdentityReport::new(IdentityName::SAColumnSum, params, worst, m, tol);
    report.t_grid = Some(t_grid.to_vec());
    Ok(report)
}

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// `(kronrod, |kronrod - gauss|)` on one interval.
fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(mid);
    let mut kronrod = KRONROD_WEIGHTS[7] * fc;
    let mut gauss = GAUSS_WEIGHTS[3] * fc;
    for k in 0..7 {
        let dx = half * GK_NODES[k];
        let pair = f(mid - dx) + f(mid + dx);
        kronrod += KRONROD_WEIGHTS[k] * pair;
        if k % 2 == 1 {
            gauss += GAUSS_WEIGHTS[k / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss-Kronrod integral of `f` over `[a, b]`; returns the value
/// and the number of subintervals used.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, u64) {
    let mut acc = CompensatedSum::new();
    let mut intervals = 0u64;
    let mut stack = vec![(a, b, tol, 0u32)];
    while let Some((lo, hi, local_tol, depth)) = stack.pop() {
        let (value, err) = gauss_kronrod(&f, lo, hi);
        if err <= local_tol || depth >= 40 {
            acc.add(value);
            intervals += 1;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, local_tol / 2.0, depth + 1));
            stack.push((lo, mid, local_tol / 2.0, depth + 1));
        }
    }
    (acc.value(), intervals)
}

/// Integrates the Erlang density over `[0, T*]`, `T* = (i + 10 sqrt(i)) / rate`,
/// adds the closed-form tail `S_i(T*)` and compares the total with one.
pub fn verify_pdf_normalization(spec: ErlangSpec, tol: f64) -> Result<IdentityReport> {
    check_tolerance(tol)?;
    let i = spec.shape() as f64;
    let cutoff = (i + 10.0 * i.sqrt()) / spec.rate();
    let (body, intervals) = integrate(
        |t| erlang_pdf(spec, t).expect("t >= 0"),
        0.0,
        cutoff,
        tol / 10.0,
    );
    let total = body + erlang_survival(spec, cutoff)?;
    let params = RateParams::new(spec.rate(), 0.0)?;
    let mut report = IdentityReport::new(
        IdentityName::PdfNormalization,
        params,
        (total - 1.0).abs(),
        intervals,
        tol,
    );
    report.shape = Some(spec.shape());
    Ok(report)
}

/// Parameter lattice for the full identity suite.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub epsilons: Vec<f64>,
    pub lambda_bs: Vec<f64>,
    /// Grid of `lambda_B t` values; each rate gets `t = u / lambda_B`.
    pub scaled_times: Vec<f64>,
    pub shapes: Vec<u64>,
}

impl Default for Lattice {
    fn default() -> Self {
        Self {
            epsilons: vec![0.01, 0.1, 0.5, 0.9, 0.99],
            lambda_bs: vec![0.1, 1.0, 10.0],
            scaled_times: (0..=40).map(|k| k as f64 * 0.5).collect(),
            shapes: vec![1, 2, 5, 10, 50, 100],
        }
    }
}

/// An identity that was not evaluated because its parameters fall outside
/// the identity's domain.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedIdentity {
    pub identity_name: IdentityName,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct SuiteOutcome {
    pub reports: Vec<IdentityReport>,
    pub skipped: Vec<SkippedIdentity>,
}

impl SuiteOutcome {
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }
}

/// Runs every identity over the lattice.
pub fn run_suite(lattice: &Lattice, series_tol: f64, quadrature_tol: f64) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::default();
    for &eps in &lattice.epsilons {
        if eps > 0.0 && eps < 1.0 {
            out.reports.push(verify_beta_series(eps, series_tol)?);
        } else {
            out.skipped.push(SkippedIdentity {
                identity_name: IdentityName::BetaSeries,
                reason: format!("beta = eps/(1-eps) as a series is defined only for 0 < eps < 1 (eps = {eps})"),
            });
        }
    }
    for &eps in &lattice.epsilons {
        for &lb in &lattice.lambda_bs {
            let params = RateParams::new(lb, eps)?;
            let grid: Vec<f64> = lattice.scaled_times.iter().map(|u| u / lb).collect();
            out.reports.push(verify_tau_series(params, series_tol)?);
            out.reports.push(verify_fa_series(params, &grid, series_tol)?);
            out.reports.push(verify_sa_column_sum(params, &grid, series_tol)?);
        }
    }
    for &shape in &lattice.shapes {
        for &lb in &lattice.lambda_bs {
            out.reports.push(verify_pdf_normalization(ErlangSpec::new(shape, lb)?, quadrature_tol)?);
        }
    }
    Ok(out)
}
