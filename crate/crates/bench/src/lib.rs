//! Shared fixtures for the benchmarks.

use iopo_core::policy::{build_features, Sample};
use iopo_core::scenario::{generate_scenario, PhaseShifts, Scenario};
use iopo_core::{Evaluator, ExperimentConfig, OffloadDecision};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn config(users: usize, uavs: usize) -> ExperimentConfig {
    ExperimentConfig {
        num_users: users,
        num_uavs: uavs,
        ..ExperimentConfig::default()
    }
}

pub fn scenario(users: usize, uavs: usize) -> Scenario {
    generate_scenario(&config(users, uavs), 1)
}

pub fn zero_phases(s: &Scenario) -> PhaseShifts {
    let len = Evaluator::new(s).expect("valid scenario").irs_len();
    PhaseShifts(vec![0.0; len])
}

pub fn random_decision(rng: &mut impl Rng, users: usize, uavs: usize) -> OffloadDecision {
    let choices = (0..users).map(|_| rng.random_range(0..=uavs)).collect();
    OffloadDecision::from_choices(choices, uavs).expect("choices in range")
}

/// A replay batch of random references over consecutive frames.
pub fn samples(cfg: &ExperimentConfig, count: usize) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    (1..=count as u64)
        .map(|n| Sample {
            features: build_features(&generate_scenario(cfg, n)),
            reference: random_decision(&mut rng, cfg.num_users, cfg.num_uavs),
        })
        .collect()
}
