//! Monte Carlo realizations of the branch topology.
//!
//! The outside view is a [`BranchTree`]: the branching events on the excited
//! spine up to a time horizon, each spawning one ground branch. The inside
//! view is an [`ObserverRecord`]: the single decay one observer lineage sees
//! for one particle. Two samplers produce inside-view records, one by walking
//! the spine event by event and one by composing the geometric branch law
//! with the Erlang waiting time; they are distributionally identical.

mod io;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::RateParams;
use crate::config::ExperimentConfig;
use crate::error::{domain, invalid, Error, Result};
use crate::rng::RngStream;

pub use io::{read_dataset, write_dataset, write_tree};

/// Which observer sampler generated a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    /// Event-by-event walk along the excited spine.
    Mechanistic,
    /// Geometric branch index followed by an Erlang decay time.
    #[default]
    Direct,
}

impl SamplerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SamplerKind::Mechanistic => "mechanistic",
            SamplerKind::Direct => "direct",
        }
    }

    pub fn sample(&self, params: &RateParams, stream: &mut RngStream) -> ObserverRecord {
        match self {
            SamplerKind::Mechanistic => sample_observer_mechanistic(params, stream),
            SamplerKind::Direct => sample_observer_direct(params, stream),
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "mechanistic" => Ok(SamplerKind::Mechanistic),
            "direct" => Ok(SamplerKind::Direct),
            other => Err(invalid(format!(
                "unknown sampler '{other}' (expected 'mechanistic' or 'direct')"
            ))),
        }
    }
}

/// Outside view of one particle: the branching events on the excited
/// spine `B_0` up to `horizon`. Event `k` (1-based) creates ground branch `B_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchTree {
    spine_event_times: Vec<f64>,
    horizon: f64,
    params: RateParams,
}

impl BranchTree {
    pub fn spine_event_times(&self) -> &[f64] {
        &self.spine_event_times
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn params(&self) -> &RateParams {
        &self.params
    }

    pub fn event_count(&self) -> usize {
        self.spine_event_times.len()
    }

    /// Ground branch `B_i` exists iff at least `i` events occurred.
    pub fn has_branch(&self, i: usize) -> bool {
        i >= 1 && i <= self.spine_event_times.len()
    }

    /// Creation time of ground branch `B_i`.
    pub fn branch_time(&self, i: usize) -> Option<f64> {
        if self.has_branch(i) {
            Some(self.spine_event_times[i - 1])
        } else {
            None
        }
    }

    /// Gaps between successive events, starting from `t = 0`.
    pub fn gaps(&self) -> impl Iterator<Item = f64> + '_ {
        let mut prev = 0.0;
        self.spine_event_times.iter().map(move |&t| {
            let gap = t - prev;
            prev = t;
            gap
        })
    }
}

/// Samples the spine events as a homogeneous Poisson process of rate
/// `lambda_B` on `(0, horizon]`.
pub fn sample_branch_tree(
    params: &RateParams,
    horizon: f64,
    stream: &mut RngStream,
) -> Result<BranchTree> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(domain(format!(
            "horizon must be positive and finite, got {horizon}"
        )));
    }
    let mut spine_event_times = Vec::new();
    let mut t = 0.0;
    loop {
        t += stream.exponential(params.lambda_b());
        if t > horizon {
            break;
        }
        spine_event_times.push(t);
    }
    Ok(BranchTree {
        spine_event_times,
        horizon,
        params: *params,
    })
}

/// Inside view: the decay one observer lineage sees for one particle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObserverRecord {
    pub particle_id: u64,
    /// Ordinal of the branching event at which the lineage left the excited spine.
    pub branch_index: u64,
    pub decay_time: f64,
}

/// Walks the spine: exponential gaps, and at each event the observer stays
/// with the excited state with probability `epsilon`.
pub fn sample_observer_mechanistic(params: &RateParams, stream: &mut RngStream) -> ObserverRecord {
    let mut t = 0.0;
    let mut k = 0u64;
    loop {
        t += stream.exponential(params.lambda_b());
        k += 1;
        if !stream.bernoulli(params.epsilon()) {
            break;
        }
    }
    ObserverRecord {
        particle_id: 0,
        branch_index: k,
        decay_time: t,
    }
}

/// Draws the branch index from Geometric(1 - epsilon) on `{1, 2, ...}` by
/// inversion, then the decay time as a sum of that many exponential gaps.
pub fn sample_observer_direct(params: &RateParams, stream: &mut RngStream) -> ObserverRecord {
    let eps = params.epsilon();
    let branch_index = if eps == 0.0 {
        1
    } else {
        // P(index > k) = eps^k
        let u = stream.uniform_open_zero();
        1 + (u.ln() / eps.ln()).floor() as u64
    };
    let mut t = 0.0;
    for _ in 0..branch_index {
        t += stream.exponential(params.lambda_b());
    }
    ObserverRecord {
        particle_id: 0,
        branch_index,
        decay_time: t,
    }
}

/// `N` observer records for a sample of isolated identical particles.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayDataset {
    records: Vec<ObserverRecord>,
    params: RateParams,
    seed: u64,
    sampler: SamplerKind,
}

impl DecayDataset {
    /// Validates record ids (dense `0..N`), branch indices and decay times.
    pub fn new(
        records: Vec<ObserverRecord>,
        params: RateParams,
        seed: u64,
        sampler: SamplerKind,
    ) -> Result<Self> {
        for (k, r) in records.iter().enumerate() {
            if r.particle_id != k as u64 {
                return Err(invalid(format!(
                    "record {k} has particle_id {}, expected {k}",
                    r.particle_id
                )));
            }
            if r.branch_index < 1 {
                return Err(invalid(format!("record {k} has branch_index 0")));
            }
            if !(r.decay_time > 0.0 && r.decay_time.is_finite()) {
                return Err(invalid(format!(
                    "record {k} has non-positive decay_time {}",
                    r.decay_time
                )));
            }
        }
        Ok(Self {
            records,
            params,
            seed,
            sampler,
        })
    }

    pub fn records(&self) -> &[ObserverRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn params(&self) -> &RateParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sampler(&self) -> SamplerKind {
        self.sampler
    }

    pub fn decay_times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.decay_time).collect()
    }

    /// Scales every decay time by `factor`, as if the clock unit changed.
    /// The rate parameter is divided by the same factor.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(domain("rescale factor must be positive and finite"));
        }
        let params = RateParams::new(self.params.lambda_b() / factor, self.params.epsilon())?;
        let records = self
            .records
            .iter()
            .map(|r| ObserverRecord {
                decay_time: r.decay_time * factor,
                ..*r
            })
            .collect();
        DecayDataset::new(records, params, self.seed, self.sampler)
    }
}

/// Runs the configured sampler for every particle. Particle `k` draws only
/// from stream `k` under the configured seed, so the result is identical for
/// any rayon pool size.
pub fn simulate_sample(config: &ExperimentConfig) -> Result<DecayDataset> {
    config.validate()?;
    let params = config.rate_params()?;
    let sampler = config.sampler;
    let seed = config.seed;
    let n = usize::try_from(config.n_particles).map_err(|_| invalid("n_particles exceeds usize"))?;
    let records: Vec<ObserverRecord> = (0..n)
        .into_par_iter()
        .with_min_len(4096)
        .map(|k| {
            let pid = k as u64;
            let mut stream = RngStream::new(seed, pid);
            ObserverRecord {
                particle_id: pid,
                ..sampler.sample(&params, &mut stream)
            }
        })
        .collect();
    Ok(DecayDataset {
        records,
        params,
        seed,
        sampler,
    })
}

/// Fraction of records with `decay_time > t` at each grid point.
pub fn empirical_survival(dataset: &DecayDataset, grid: &[f64]) -> Result<Vec<f64>> {
    if dataset.is_empty() {
        return Err(invalid("empirical survival of an empty dataset"));
    }
    if grid.iter().any(|t| t.is_nan()) || grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("survival grid must be sorted ascending"));
    }
    let mut times = dataset.decay_times();
    times.sort_by(f64::total_cmp);
    let n = times.len() as f64;
    Ok(grid
        .iter()
        .map(|&t| {
            let at_or_below = times.partition_point(|&x| x <= t);
            (times.len() - at_or_below) as f64 / n
        })
        .collect())
}

/// Histogram of branch indices over classes `1..=max_i` plus an overflow
/// bucket for larger indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchClassCounts {
    /// `classes[k]` counts records with branch index `k + 1`.
    pub classes: Vec<u64>,
    pub overflow: u64,
}

impl BranchClassCounts {
    pub fn total(&self) -> u64 {
        self.classes.iter().sum::<u64>() + self.overflow
    }

    pub fn max_class(&self) -> u64 {
        self.classes.len() as u64
    }

    /// Classes followed by the overflow bucket.
    pub fn with_overflow(&self) -> Vec<u64> {
        let mut all = self.classes.clone();
        all.push(self.overflow);
        all
    }
}

pub fn branch_class_counts(dataset: &DecayDataset, max_i: u64) -> Result<BranchClassCounts> {
    if max_i < 1 {
        return Err(invalid("max_i must be >= 1"));
    }
    let mut classes = vec![0u64; max_i as usize];
    let mut overflow = 0;
    for r in dataset.records() {
        if r.branch_index <= max_i {
            classes[(r.branch_index - 1) as usize] += 1;
        } else {
            overflow += 1;
        }
    }
    Ok(BranchClassCounts { classes, overflow })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rp(lambda_b: f64, epsilon: f64) -> RateParams {
        RateParams::new(lambda_b, epsilon).unwrap()
    }

    fn dataset(lambda_b: f64, eps: f64, n: u64, seed: u64, sampler: SamplerKind) -> DecayDataset {
        let config = ExperimentConfig {
            sampler,
            ..ExperimentConfig::new(lambda_b, eps, n, seed)
        };
        simulate_sample(&config).unwrap()
    }

    #[test]
    fn tree_rejects_bad_horizon() {
        let mut s = RngStream::new(1, 0);
        assert!(sample_branch_tree(&rp(1.0, 0.5), 0.0, &mut s).is_err());
        assert!(sample_branch_tree(&rp(1.0, 0.5), -1.0, &mut s).is_err());
    }

    #[test]
    fn tree_tiny_horizon_is_usually_empty() {
        let empty = (0..1000)
            .filter(|&k| {
                let mut s = RngStream::new(5, k);
                sample_branch_tree(&rp(1.0, 0.5), 1e-9, &mut s).unwrap().event_count() == 0
            })
            .count();
        assert_eq!(empty, 1000);
    }

    #[test]
    fn tree_structure() {
        let mut s = RngStream::new(11, 0);
        let tree = sample_branch_tree(&rp(1.0, 0.5), 10.0, &mut s).unwrap();
        let times = tree.spine_event_times();
        assert!(times.windows(2).all(|w| w[0] < w[1]));
        assert!(times.iter().all(|&t| t > 0.0 && t <= 10.0));
        let k = tree.event_count();
        assert!(tree.has_branch(k) && !tree.has_branch(k + 1) && !tree.has_branch(0));
        assert_eq!(tree.gaps().count(), k);
        let rebuilt: f64 = tree.gaps().sum();
        if k > 0 {
            assert!((rebuilt - times[k - 1]).abs() < 1e-12);
        }
    }

    #[test]
    fn tree_event_count_is_poisson() {
        let trees = 100_000u64;
        let counts = |lb: f64, horizon: f64| -> (f64, f64) {
            let c: Vec<f64> = (0..trees)
                .map(|k| {
                    let mut s = RngStream::new(77, k);
                    sample_branch_tree(&rp(lb, 0.0), horizon, &mut s).unwrap().event_count() as f64
                })
                .collect();
            let mean = c.iter().sum::<f64>() / trees as f64;
            let var = c.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trees - 1) as f64;
            (mean, var)
        };
        let (mean, _) = counts(1.0, 10.0);
        assert!((mean - 10.0).abs() < 0.1, "{mean}");
        let (mean, var) = counts(2.0, 5.0);
        assert!((mean - 10.0).abs() < 0.1, "{mean}");
        // sd of the sample variance ~ sqrt(2 * 10^2 / 1e5) ~ 0.045 (plus kurtosis term)
        assert!((var - 10.0).abs() < 0.3, "{var}");
    }

    #[test]
    fn conventional_limit_always_first_branch() {
        for kind in [SamplerKind::Mechanistic, SamplerKind::Direct] {
            let d = dataset(1.0, 0.0, 10_000, 3, kind);
            assert!(d.records().iter().all(|r| r.branch_index == 1));
        }
    }

    #[test]
    fn mechanistic_branch_law_and_mean() {
        let d = dataset(1.0, 0.5, 1_000_000, 21, SamplerKind::Mechanistic);
        let first = d.records().iter().filter(|r| r.branch_index == 1).count() as f64 / 1e6;
        assert!((first - 0.5).abs() < 0.002, "{first}");
        let mean = d.decay_times().iter().sum::<f64>() / 1e6;
        assert!((mean - 2.0).abs() < 0.01, "{mean}");
    }

    #[test]
    fn direct_conditional_mean_and_survival() {
        let d = dataset(1.0, 0.5, 1_000_000, 22, SamplerKind::Direct);
        let class3: Vec<f64> = d
            .records()
            .iter()
            .filter(|r| r.branch_index == 3)
            .map(|r| r.decay_time)
            .collect();
        let m3 = class3.iter().sum::<f64>() / class3.len() as f64;
        // ~125k records, sd of mean sqrt(3 / 125k) ~ 0.005
        assert!((m3 - 3.0).abs() < 0.02, "{m3}");
        let s = empirical_survival(&d, &[2.0]).unwrap()[0];
        assert!((s - (-1.0f64).exp()).abs() < 0.003, "{s}");
        // the spec's conditional-mean example is stated for 10^6 class-3 draws
        let mut stream = RngStream::new(23, 0);
        let p = rp(1.0, 0.5);
        let mut sum = 0.0;
        let mut n = 0;
        while n < 1_000_000 {
            let r = sample_observer_direct(&p, &mut stream);
            if r.branch_index == 3 {
                sum += r.decay_time;
                n += 1;
            }
        }
        assert!((sum / 1e6 - 3.0).abs() < 0.01);
    }

    #[test]
    fn simulate_sample_contract() {
        let one = dataset(1.0, 0.3, 1, 99, SamplerKind::Direct);
        assert_eq!(one.len(), 1);
        assert_eq!(one.records()[0].particle_id, 0);

        let a = dataset(1.0, 0.3, 5000, 7, SamplerKind::Direct);
        let b = dataset(1.0, 0.3, 5000, 7, SamplerKind::Direct);
        assert_eq!(a, b);
        let c = dataset(1.0, 0.3, 5000, 8, SamplerKind::Direct);
        assert_ne!(a.records(), c.records());
        assert!(a.records().iter().enumerate().all(|(k, r)| r.particle_id == k as u64));

        let config = ExperimentConfig::new(1.0, 0.3, 0, 1);
        assert!(simulate_sample(&config).is_err());
    }

    #[test]
    fn simulate_is_thread_count_invariant() {
        let config = ExperimentConfig::new(1.0, 0.9, 50_000, 1234);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| simulate_sample(&config).unwrap())
        };
        let one = run(1);
        let eight = run(8);
        assert!(one
            .records()
            .iter()
            .zip(eight.records())
            .all(|(a, b)| a.branch_index == b.branch_index && a.decay_time.to_bits() == b.decay_time.to_bits()));
    }

    #[test]
    fn empirical_survival_rules() {
        let d = dataset(1.0, 0.0, 1_000_000, 5, SamplerKind::Direct);
        assert_eq!(empirical_survival(&d, &[0.0]).unwrap(), vec![1.0]);
        let s = empirical_survival(&d, &[0.5, 1.0, 2.0]).unwrap();
        assert!(s.windows(2).all(|w| w[1] <= w[0]));
        assert!((s[1] - (-1.0f64).exp()).abs() < 0.003);
        assert!(empirical_survival(&d, &[1.0, 0.5]).is_err());
        let empty = DecayDataset::new(Vec::new(), rp(1.0, 0.0), 0, SamplerKind::Direct).unwrap();
        assert!(empirical_survival(&empty, &[0.0]).is_err());

        let d = dataset(1.0, 0.5, 1_000_000, 6, SamplerKind::Direct);
        let s6 = empirical_survival(&d, &[6.0]).unwrap()[0];
        assert!((s6 - (-3.0f64).exp()).abs() < 0.002, "{s6}");
    }

    #[test]
    fn branch_class_histogram() {
        let d = dataset(1.0, 0.0, 1000, 1, SamplerKind::Direct);
        let c = branch_class_counts(&d, 4).unwrap();
        assert_eq!(c.classes, vec![1000, 0, 0, 0]);
        assert_eq!(c.overflow, 0);
        assert!(branch_class_counts(&d, 0).is_err());

        let d = dataset(1.0, 0.5, 1_000_000, 2, SamplerKind::Direct);
        let c = branch_class_counts(&d, 6).unwrap();
        assert_eq!(c.total(), 1_000_000);
        for (k, &count) in c.classes.iter().enumerate() {
            let p = 0.5f64.powi(k as i32 + 1);
            let sd = (1e6 * p * (1.0 - p)).sqrt();
            assert!((count as f64 - 1e6 * p).abs() < 4.0 * sd, "class {}: {count}", k + 1);
        }
    }

    #[test]
    fn dataset_validation() {
        let p = rp(1.0, 0.0);
        let rec = |id, i, t| ObserverRecord { particle_id: id, branch_index: i, decay_time: t };
        assert!(DecayDataset::new(vec![rec(1, 1, 1.0)], p, 0, SamplerKind::Direct).is_err());
        assert!(DecayDataset::new(vec![rec(0, 0, 1.0)], p, 0, SamplerKind::Direct).is_err());
        assert!(DecayDataset::new(vec![rec(0, 1, 0.0)], p, 0, SamplerKind::Direct).is_err());
        assert!(DecayDataset::new(vec![rec(0, 1, 0.5), rec(1, 2, 2.0)], p, 0, SamplerKind::Direct).is_ok());
    }

    #[test]
    fn sampler_kind_parsing() {
        assert_eq!("direct".parse::<SamplerKind>().unwrap(), SamplerKind::Direct);
        assert_eq!("mechanistic".parse::<SamplerKind>().unwrap(), SamplerKind::Mechanistic);
        assert!("other".parse::<SamplerKind>().is_err());
        assert_eq!(SamplerKind::default(), SamplerKind::Direct);
    }
}
