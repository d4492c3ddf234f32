//! Small numerical helpers shared across modules.

use statrs::distribution::{ContinuousCDF, Continuous, Gamma, Normal};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of a sequence.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}

/// Formats a double with 17 significant digits and a lowercase `e` exponent.
///
/// The output parses back to the identical bit pattern.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Quantile of Gamma(shape, 1).
///
/// Wilson-Hilferty start followed by Newton steps on the regularized lower
/// incomplete gamma function.
pub fn gamma_quantile(shape: f64, p: f64) -> f64 {
    assert!(shape > 0.0 && p > 0.0 && p < 1.0);
    let dist = Gamma::new(shape, 1.0).expect("shape > 0");
    let z = normal_quantile(p);
    let c = 1.0 / (9.0 * shape);
    let mut x = shape * (1.0 - c + z * c.sqrt()).powi(3);
    if x.is_nan() || x <= 0.0 {
        x = dist.inverse_cdf(p);
    }
    for _ in 0..50 {
        let density = dist.pdf(x);
        if density <= 0.0 || !density.is_finite() {
            break;
        }
        let step = (dist.cdf(x) - p) / density;
        let mut next = x - step;
        if next <= 0.0 {
            next = x / 2.0;
        }
        let done = (next - x).abs() <= 1e-14 * x.max(1.0);
        x = next;
        if done {
            break;
        }
    }
    x
}

/// `x^0 ..= x^m` as unevaluated `hi + lo` pairs, each accurate to about
/// 2^-100 relative.
pub fn powers_double_double(x: f64, m: u64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(m as usize + 1);
    let (mut hi, mut lo) = (1.0f64, 0.0f64);
    out.push((hi, lo));
    for _ in 0..m {
        let p = hi * x;
        let err = hi.mul_add(x, -p) + lo * x;
        hi = p + err;
        lo = err - (hi - p);
        out.push((hi, lo));
    }
    out
}
