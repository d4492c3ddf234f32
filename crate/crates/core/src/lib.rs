//! Branch-topology model of excited-state decay.
//!
//! A particle in its lowest excited state branches at rate `lambda_B`; at
//! each branching event an observer lineage stays with the excited branch
//! with probability `epsilon` and otherwise sees the decay. Each ground
//! branch `B_i` has an Erlang(i, lambda_B) decay time, the branch a lineage
//! lands on is geometric, and the mixture is exactly exponential with the
//! apparent rate `lambda_A = (1 - epsilon) lambda_B`.
//!
//! - [`analytic`]: closed forms (Erlang laws, branch weights, mixture laws).
//! - [`sim`]: outside-view branch trees and two inside-view samplers.
//! - [`estimate`]: rate MLE, branch-probability inversion, upper limits,
//!   sample-size planning and goodness of fit.
//! - [`oracle`]: truncated-series and quadrature checks of every closed form.
//! - [`cli`]: the `branchdecay` command-line front end.

pub mod analytic;
pub mod cli;
pub mod config;
pub mod error;
pub mod estimate;
pub mod gof;
pub mod numeric;
pub mod oracle;
pub mod rng;
pub mod sim;

pub use analytic::{AmplitudeVector, ErlangSpec, RateParams};
pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use estimate::EstimateResult;
pub use oracle::IdentityReport;
pub use rng::RngStream;
pub use sim::{BranchTree, DecayDataset, ObserverRecord, SamplerKind};
