//! Closed-form layer of the branching model.
//!
//! Every function here is pure and depends on time only through the
//! dimensionless product `rate * t`. Erlang quantities are evaluated in log
//! space so that branch indices far beyond the factorial range of `f64`
//! (about 170) stay finite.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::error::{domain, invalid, Error, Result};
use crate::numeric::compensated_sum;

/// Tolerance on the squared-norm of an [`AmplitudeVector`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// The two free parameters of the model: the branching rate `lambda_B` on
/// the excited spine and the excited-state branch probability `epsilon`.
///
/// `epsilon = 0` is accepted and reproduces the conventional single-rate
/// theory. `epsilon = 1` is rejected: no observer lineage ever sees a decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRateParams", into = "RawRateParams")]
pub struct RateParams {
    lambda_b: f64,
    epsilon: f64,
    lambda_a: f64,
}

#[derive(Serialize, Deserialize)]
struct RawRateParams {
    #[serde(rename = "lambda_B")]
    lambda_b: f64,
    epsilon: f64,
}

impl TryFrom<RawRateParams> for RateParams {
    type Error = Error;

    fn try_from(raw: RawRateParams) -> Result<Self> {
        RateParams::new(raw.lambda_b, raw.epsilon)
    }
}

impl From<RateParams> for RawRateParams {
    fn from(p: RateParams) -> Self {
        RawRateParams {
            lambda_b: p.lambda_b,
            epsilon: p.epsilon,
        }
    }
}

impl RateParams {
    pub fn new(lambda_b: f64, epsilon: f64) -> Result<Self> {
        if !(lambda_b > 0.0 && lambda_b.is_finite()) {
            return Err(domain(format!(
                "lambda_B must be positive and finite, got {lambda_b}"
            )));
        }
        if !(0.0..1.0).contains(&epsilon) {
            return Err(domain(format!(
                "invalid epsilon {epsilon}: must satisfy 0 <= epsilon < 1"
            )));
        }
        Ok(Self {
            lambda_b,
            epsilon,
            lambda_a: (1.0 - epsilon) * lambda_b,
        })
    }

    /// Branching rate on the excited spine.
    pub fn lambda_b(&self) -> f64 {
        self.lambda_b
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Apparent decay rate seen by a single observer lineage, `(1 - epsilon) * lambda_B`.
    pub fn lambda_a(&self) -> f64 {
        self.lambda_a
    }

    /// Mean waiting time between branching events, `1 / lambda_B`.
    pub fn waiting_time(&self) -> f64 {
        1.0 / self.lambda_b
    }

    /// Mean decay time on ground branch `i`, `i * W`.
    pub fn branch_waiting_time(&self, i: u64) -> f64 {
        i as f64 * self.waiting_time()
    }

    /// Apparent lifetime `W / (1 - epsilon)`.
    pub fn tau_a(&self) -> f64 {
        self.waiting_time() / (1.0 - self.epsilon)
    }

    /// True when `epsilon = 0`, the conventional-theory reduction.
    pub fn is_conventional(&self) -> bool {
        self.epsilon == 0.0
    }

    /// True when `0 < epsilon < 1`, the interior case in which the
    /// branching model differs from the conventional one.
    pub fn is_strict_interior(&self) -> bool {
        self.epsilon > 0.0
    }
}

/// Shape (branch index) and rate of an Erlang law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErlangSpec {
    shape: u64,
    rate: f64,
}

impl ErlangSpec {
    pub fn new(shape: u64, rate: f64) -> Result<Self> {
        if shape < 1 {
            return Err(domain("Erlang shape must be >= 1"));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(domain(format!(
                "Erlang rate must be positive and finite, got {rate}"
            )));
        }
        Ok(Self { shape, rate })
    }

    pub fn shape(&self) -> u64 {
        self.shape
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn mean(&self) -> f64 {
        self.shape as f64 / self.rate
    }

    pub fn variance(&self) -> f64 {
        self.shape as f64 / (self.rate * self.rate)
    }
}

/// Normalized superposition amplitudes `(psi, phi_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeVector {
    amplitudes: Vec<Complex64>,
}

impl AmplitudeVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(invalid("amplitude vector is empty"));
        }
        let norm = compensated_sum(amplitudes.iter().map(|a| a.norm_sqr()));
        let deficit = 1.0 - norm;
        if deficit.is_nan() || deficit.abs() > NORMALIZATION_TOLERANCE {
            return Err(invalid(format!(
                "amplitudes are not normalized: squared norm {norm}, deficit {deficit:e}"
            )));
        }
        Ok(Self { amplitudes })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }
}

fn check_rate(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("rate must be positive and finite, got {lambda}")))
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && !t.is_nan() {
        Ok(())
    } else {
        Err(domain(format!("time must be nonnegative, got {t}")))
    }
}

/// Survival probability `exp(-lambda t)` of a single exponential decay.
pub fn exp_survival(lambda: f64, t: f64) -> Result<f64> {
    check_rate(lambda)?;
    check_time(t)?;
    Ok((-lambda * t).exp())
}

/// Golden-rule rate `(2 pi / hbar) |V|^2 rho` from the user-supplied
/// product of squared matrix element and final-state density.
pub fn golden_rule_rate(matrix_element_sq_density: f64, hbar: f64) -> Result<f64> {
    if !(matrix_element_sq_density > 0.0 && matrix_element_sq_density.is_finite()) {
        return Err(domain("|V|^2 rho must be positive and finite"));
    }
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(domain("hbar must be positive and finite"));
    }
    Ok(2.0 * PI / hbar * matrix_element_sq_density)
}

/// Log of the Poisson term `u^n e^{-u} / n!` for `u > 0`.
fn ln_poisson_term(n: u64, u: f64, ln_u: f64) -> f64 {
    n as f64 * ln_u - u - ln_factorial(n)
}

/// Erlang density `rate e^{-rate t} (rate t)^{i-1} / (i-1)!`.
pub fn erlang_pdf(spec: ErlangSpec, t: f64) -> Result<f64> {
    check_time(t)?;
    let u = spec.rate * t;
    if spec.shape == 1 {
        return Ok(spec.rate * (-u).exp());
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    if u.is_infinite() {
        return Ok(0.0);
    }
    Ok(spec.rate * ln_poisson_term(spec.shape - 1, u, u.ln()).exp())
}

/// Splits the Erlang mass at `u = rate t` into `(cdf, survival)`.
///
/// The smaller tail is summed directly and the other is its complement,
/// so the pair always adds to one up to a single rounding.
fn erlang_tails(shape: u64, u: f64) -> (f64, f64) {
    if u == 0.0 {
        return (0.0, 1.0);
    }
    if u.is_infinite() {
        return (1.0, 0.0);
    }
    let ln_u = u.ln();
    if u < shape as f64 {
        // lower tail: sum_{n >= shape} Poisson(n; u), terms strictly decreasing
        let mut term = ln_poisson_term(shape, u, ln_u).exp();
        let mut acc = crate::numeric::CompensatedSum::new();
        let mut n = shape;
        while term > 0.0 {
            acc.add(term);
            n += 1;
            term *= u / n as f64;
            if term < acc.value() * 1e-18 {
                break;
            }
        }
        let cdf = acc.value().min(1.0);
        (cdf, 1.0 - cdf)
    } else {
        // upper tail: sum_{n < shape} Poisson(n; u), walk down from the largest term
        let mut n = shape - 1;
        let mut term = ln_poisson_term(n, u, ln_u).exp();
        let mut acc = crate::numeric::CompensatedSum::new();
        loop {
            acc.add(term);
            if n == 0 {
                break;
            }
            term *= n as f64 / u;
            n -= 1;
            if term < acc.value() * 1e-18 {
                break;
            }
        }
        let survival = acc.value().min(1.0);
        (1.0 - survival, survival)
    }
}

/// Erlang cumulative distribution function, `1 - erlang_survival`.
pub fn erlang_cdf(spec: ErlangSpec, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(erlang_tails(spec.shape, spec.rate * t).0)
}

/// Probability that the decay on ground branch `i` has not yet occurred:
/// `e^{-u} sum_{n=1..i} u^{n-1}/(n-1)!` with `u = rate t`.
pub fn erlang_survival(spec: ErlangSpec, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(erlang_tails(spec.shape, spec.rate * t).1)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if (0.0..1.0).contains(&epsilon) {
        Ok(())
    } else {
        Err(domain(format!(
            "invalid epsilon {epsilon}: must satisfy 0 <= epsilon < 1"
        )))
    }
}

/// Expected fraction `N_i / N = (1 - epsilon) epsilon^{i-1}` of observer
/// lineages that see the decay on ground branch `i`.
pub fn branch_weight(epsilon: f64, i: u64) -> Result<f64> {
    check_epsilon(epsilon)?;
    if i < 1 {
        return Err(domain("branch index must be >= 1"));
    }
    let power = if i == 1 {
        1.0
    } else if epsilon == 0.0 {
        0.0
    } else if i - 1 <= i32::MAX as u64 {
        epsilon.powi((i - 1) as i32)
    } else {
        ((i - 1) as f64 * epsilon.ln()).exp()
    };
    Ok((1.0 - epsilon) * power)
}

/// Apparent lifetime `W / (1 - epsilon)`.
pub fn apparent_lifetime(params: RateParams) -> f64 {
    params.tau_a()
}

/// Geometric mixture of the per-branch Erlang densities, which collapses
/// to the exponential density with the apparent rate.
pub fn mixture_pdf(params: RateParams, t: f64) -> Result<f64> {
    check_time(t)?;
    let lambda_a = params.lambda_a();
    Ok(lambda_a * (-lambda_a * t).exp())
}

/// Apparent survival `exp(-(1 - epsilon) lambda_B t)`.
pub fn mixture_survival(params: RateParams, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok((-params.lambda_a() * t).exp())
}

/// `epsilon / (1 - epsilon)`, the sum of `epsilon^i` over `i >= 1`.
/// Undefined at the endpoints.
pub fn beta(epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(domain(format!(
            "beta requires 0 < epsilon < 1, got {epsilon}"
        )));
    }
    Ok(epsilon / (1.0 - epsilon))
}

/// Born-rule probabilities `|a_j|^2`.
pub fn born_weights(amps: &AmplitudeVector) -> Vec<f64> {
    amps.amplitudes.iter().map(|a| a.norm_sqr()).collect()
}
