//! Simulation and optimization of IRS-assisted multi-UAV edge offloading.

pub mod baselines;
pub mod channel;
pub mod config;
pub mod energy;
pub mod error;
pub mod iopo;
pub mod metrics;
pub mod oppo;
pub mod policy;
pub mod rng;
pub mod scenario;
pub mod scoring;
pub mod woa;

pub use baselines::Baseline;
pub use config::{CarrierPolicy, ExperimentConfig};
pub use energy::{evaluate, EvaluationReport, Evaluator, OffloadDecision};
pub use error::{Error, Result};
pub use iopo::{run, run_with, FrameRecord, Iopo, RunSummary};
pub use metrics::{
    compare, learner_summary, summarize, Comparison, MethodSeries, MetricsSummary, Outcome,
};
pub use oppo::ProbabilityMatrix;
pub use policy::{Checkpoint, PolicyNet};
pub use scenario::{generate_scenario, PhaseShifts, Scenario};
pub use scoring::{FrameScorer, Scored};
pub use woa::WoaConfig;
