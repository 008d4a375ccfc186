//! Comparison allocators and the exhaustive oracle.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{self, OffloadDecision};
use crate::error::{Error, Result};
use crate::scenario::{PhaseShifts, Scenario};
use crate::scoring::{FrameScorer, Scored};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    Local,
    Greedy,
    GreedyOc,
    OptRandom,
    OptRandomNoLocal,
}

impl Baseline {
    pub const ALL: [Baseline; 5] = [
        Baseline::Local,
        Baseline::Greedy,
        Baseline::GreedyOc,
        Baseline::OptRandom,
        Baseline::OptRandomNoLocal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Baseline::Local => "local",
            Baseline::Greedy => "greedy",
            Baseline::GreedyOc => "greedy_oc",
            Baseline::OptRandom => "opt_random",
            Baseline::OptRandomNoLocal => "opt_random_no_local",
        }
    }

    /// Runs the allocator and scores its decision.
    pub fn run<R: Rng>(
        self,
        scorer: &mut FrameScorer<'_>,
        samples: usize,
        rng: &mut R,
    ) -> Result<Scored> {
        let scenario = scorer.evaluator().scenario();
        match self {
            Baseline::Local => scorer.score(&local_all(scenario)),
            Baseline::Greedy => scorer.score(&greedy(scenario)),
            Baseline::GreedyOc => {
                let d = greedy_oc(scorer)?;
                scorer.score(&d)
            }
            Baseline::OptRandom => opt_random(scorer, samples, true, rng),
            Baseline::OptRandomNoLocal => opt_random(scorer, samples, false, rng),
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn local_all(scenario: &Scenario) -> OffloadDecision {
    OffloadDecision::all_local(scenario.num_users(), scenario.num_uavs())
}

/// Users in descending local-time order; ties keep the lower index first.
fn by_local_time(scenario: &Scenario) -> Vec<usize> {
    let t: Vec<f64> = scenario
        .users
        .iter()
        .map(|u| energy::local_time_energy(&u.task, &u.device).0)
        .collect();
    let mut order: Vec<usize> = (0..t.len()).collect();
    order.sort_by(|&a, &b| t[b].total_cmp(&t[a]));
    order
}

/// Compute-speed greedy: the slowest local user goes to the UAV with the
/// highest per-task speed `Z_m / (w_m + 1)` until no UAV beats the slowest
/// remaining UED.
pub fn greedy(scenario: &Scenario) -> OffloadDecision {
    let uavs = scenario.num_uavs();
    let mut decision = local_all(scenario);
    if uavs == 0 {
        return decision;
    }
    let mut counts = vec![0usize; uavs];
    let order = by_local_time(scenario);
    for (i, &u) in order.iter().enumerate() {
        let (m, speed) = (0..uavs)
            .map(|m| (m, scenario.uavs[m].cpu_speed / (counts[m] + 1) as f64))
            .fold((0, f64::NEG_INFINITY), |best, cand| {
                if cand.1 > best.1 {
                    cand
                } else {
                    best
                }
            });
        let slowest_remaining = order[i..]
            .iter()
            .map(|&v| scenario.users[v].device.cpu_speed)
            .fold(f64::INFINITY, f64::min);
        if speed < slowest_remaining {
            break;
        }
        decision = decision.with_choice(u, m);
        counts[m] += 1;
    }
    decision
}

/// Deadline-aware greedy.
///
/// Users in descending local-time order try every UAV; a UAV qualifies when
/// the whole system stays free of overdue users with the user added (the
/// bandwidth split couples every offloader). Among qualifying UAVs the one
/// giving the user the lowest energy wins; otherwise the user stays local.
/// Checks use the all-zero phase vector.
pub fn greedy_oc(scorer: &FrameScorer<'_>) -> Result<OffloadDecision> {
    let scenario = scorer.evaluator().scenario();
    let zeros = PhaseShifts::zeros(scenario.irs.len());
    let mut decision = local_all(scenario);
    for u in by_local_time(scenario) {
        let mut best: Option<(OffloadDecision, f64)> = None;
        for m in 0..scenario.num_uavs() {
            let trial = decision.with_choice(u, m);
            let report = scorer.evaluate_at(&trial, &zeros)?;
            if report.overdue_count > 0 {
                continue;
            }
            let e = report.energies[u];
            if best.as_ref().is_none_or(|(_, b)| e < *b) {
                best = Some((trial, e));
            }
        }
        if let Some((d, _)) = best {
            decision = d;
        }
    }
    Ok(decision)
}

/// Best of `samples` uniformly drawn decisions.
pub fn opt_random<R: Rng>(
    scorer: &mut FrameScorer<'_>,
    samples: usize,
    allow_local: bool,
    rng: &mut R,
) -> Result<Scored> {
    if samples == 0 {
        return Err(Error::Domain("opt_random needs at least one sample".into()));
    }
    let scenario = scorer.evaluator().scenario();
    let (users, uavs) = (scenario.num_users(), scenario.num_uavs());
    if !allow_local && uavs == 0 {
        return Err(Error::Domain(
            "no UAV to draw from without the local option".into(),
        ));
    }
    let columns = if allow_local { uavs + 1 } else { uavs };
    let mut best: Option<Scored> = None;
    for _ in 0..samples {
        let choices = (0..users).map(|_| rng.random_range(0..columns)).collect();
        let scored = scorer.score(&OffloadDecision::from_choices(choices, uavs)?)?;
        if best
            .as_ref()
            .is_none_or(|b| scored.penalized() < b.penalized())
        {
            best = Some(scored);
        }
    }
    Ok(best.expect("at least one sample"))
}

/// Number of decisions `(M+1)^U`, refusing above `cap`.
pub fn enumeration_size(users: usize, uavs: usize, cap: u64) -> Result<u64> {
    let base = uavs as u64 + 1;
    let count = (base as f64).powi(users as i32);
    if count > cap as f64 {
        return Err(Error::EnumerationCap {
            count,
            base: uavs + 1,
            users,
            cap,
        });
    }
    Ok(base.pow(users as u32))
}

/// Exhaustive argmin over every decision, in mixed-radix order with user 0
/// as the least significant digit. Ties keep the earlier decision.
pub fn brute_force_optimal(scorer: &mut FrameScorer<'_>, cap: u64) -> Result<Scored> {
    let scenario = scorer.evaluator().scenario();
    let (users, uavs) = (scenario.num_users(), scenario.num_uavs());
    let total = enumeration_size(users, uavs, cap)?;
    let base = uavs as u64 + 1;
    let mut best: Option<Scored> = None;
    for index in 0..total {
        let mut rest = index;
        let choices = (0..users)
            .map(|_| {
                let c = (rest % base) as usize;
                rest /= base;
                c
            })
            .collect();
        let scored = scorer.score(&OffloadDecision::from_choices(choices, uavs)?)?;
        if best
            .as_ref()
            .is_none_or(|b| scored.penalized() < b.penalized())
        {
            best = Some(scored);
        }
    }
    Ok(best.expect("enumeration is non-empty"))
}
