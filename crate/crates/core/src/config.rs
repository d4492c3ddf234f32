//! Experiment configuration and the `key=value` config-file format.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::analytic::RateParams;
use crate::error::{invalid, Error, Result};
use crate::sim::SamplerKind;

pub const DEFAULT_CONFIDENCE: f64 = 0.95;
pub const DEFAULT_HORIZON: f64 = 10.0;

/// Everything needed to reproduce one simulated sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub lambda_b: f64,
    pub epsilon: f64,
    pub n_particles: u64,
    pub seed: u64,
    pub sampler: SamplerKind,
    /// Time horizon for branch-tree export.
    pub horizon: f64,
    pub confidence: f64,
    pub output_path: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Config with the default sampler, horizon and confidence.
    pub fn new(lambda_b: f64, epsilon: f64, n_particles: u64, seed: u64) -> Self {
        Self {
            lambda_b,
            epsilon,
            n_particles,
            seed,
            sampler: SamplerKind::default(),
            horizon: DEFAULT_HORIZON,
            confidence: DEFAULT_CONFIDENCE,
            output_path: None,
        }
    }

    pub fn rate_params(&self) -> Result<RateParams> {
        RateParams::new(self.lambda_b, self.epsilon)
    }

    pub fn validate(&self) -> Result<()> {
        self.rate_params()?;
        if self.n_particles < 1 {
            return Err(invalid("n_particles must be >= 1"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(invalid(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(invalid(format!(
                "confidence must lie in (0, 1), got {}",
                self.confidence
            )));
        }
        Ok(())
    }
}

/// Parses `key=value` lines. Blank lines and lines starting with `#` are skipped.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: idx + 1,
            message: format!("expected key=value, found '{line}'"),
        })?;
        map.insert(key.trim().replace('-', "_"), value.trim().to_string());
    }
    Ok(map)
}

/// Partially specified experiment settings; flags and config-file entries
/// are both parsed into this form and merged.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOverrides {
    pub lambda_b: Option<f64>,
    pub epsilon: Option<f64>,
    pub n_particles: Option<u64>,
    pub seed: Option<u64>,
    pub sampler: Option<SamplerKind>,
    pub horizon: Option<f64>,
    pub confidence: Option<f64>,
    pub output_path: Option<PathBuf>,
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| invalid(format!("invalid value '{value}' for config key '{key}'")))
}

impl ConfigOverrides {
    pub fn from_key_values(map: &BTreeMap<String, String>) -> Result<Self> {
        let mut out = ConfigOverrides::default();
        for (key, value) in map {
            match key.to_ascii_lowercase().as_str() {
                "lambda_b" => out.lambda_b = Some(parse_value(key, value)?),
                "epsilon" => out.epsilon = Some(parse_value(key, value)?),
                "n" | "n_particles" => out.n_particles = Some(parse_value(key, value)?),
                "seed" => out.seed = Some(parse_value(key, value)?),
                "sampler" => out.sampler = Some(value.parse()?),
                "horizon" => out.horizon = Some(parse_value(key, value)?),
                "confidence" => out.confidence = Some(parse_value(key, value)?),
                "out" | "output_path" => out.output_path = Some(PathBuf::from(value)),
                _ => return Err(invalid(format!("unknown config key '{key}'"))),
            }
        }
        Ok(out)
    }

    /// `self` wins wherever it is set.
    pub fn or(self, fallback: ConfigOverrides) -> ConfigOverrides {
        ConfigOverrides {
            lambda_b: self.lambda_b.or(fallback.lambda_b),
            epsilon: self.epsilon.or(fallback.epsilon),
            n_particles: self.n_particles.or(fallback.n_particles),
            seed: self.seed.or(fallback.seed),
            sampler: self.sampler.or(fallback.sampler),
            horizon: self.horizon.or(fallback.horizon),
            confidence: self.confidence.or(fallback.confidence),
            output_path: self.output_path.or(fallback.output_path),
        }
    }

    /// Completes the config. `lambda_B` and `epsilon` are required; the
    /// particle count defaults to 1 and the seed to 0.
    pub fn finish(self) -> Result<ExperimentConfig> {
        let lambda_b = self
            .lambda_b
            .ok_or_else(|| invalid("lambda_B is required (--lambda-b or lambda_b= in config)"))?;
        let epsilon = self
            .epsilon
            .ok_or_else(|| invalid("epsilon is required (--epsilon or epsilon= in config)"))?;
        let config = ExperimentConfig {
            lambda_b,
            epsilon,
            n_particles: self.n_particles.unwrap_or(1),
            seed: self.seed.unwrap_or(0),
            sampler: self.sampler.unwrap_or_default(),
            horizon: self.horizon.unwrap_or(DEFAULT_HORIZON),
            confidence: self.confidence.unwrap_or(DEFAULT_CONFIDENCE),
            output_path: self.output_path,
        };
        config.validate()?;
        Ok(config)
    }
}
