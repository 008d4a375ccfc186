//! Per-frame decision scoring shared by the learner and every baseline.

use std::collections::HashMap;

use crate::energy::{EvaluationReport, Evaluator, OffloadDecision};
use crate::error::Result;
use crate::rng::{keyed_substream, stream};
use crate::scenario::{PhaseShifts, Scenario};
use crate::woa::{self, WoaConfig};

/// A decision with the phases chosen for it and the resulting evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub decision: OffloadDecision,
    pub phases: PhaseShifts,
    pub report: EvaluationReport,
}

impl Scored {
    pub fn penalized(&self) -> f64 {
        self.report.penalized_energy
    }
}

/// Scores decisions within one frame.
///
/// The WOA stream is keyed by the decision itself, so a decision gets the same
/// phases no matter which method proposes it or in what order. The all-zero
/// phase vector is kept whenever it scores strictly lower than the WOA result.
pub struct FrameScorer<'a> {
    evaluator: Evaluator<'a>,
    woa: WoaConfig,
    penalty: f64,
    seed: u64,
    cache: HashMap<OffloadDecision, Scored>,
}

impl<'a> FrameScorer<'a> {
    pub fn new(scenario: &'a Scenario, woa: WoaConfig, penalty: f64, seed: u64) -> Result<Self> {
        woa.validate()?;
        Ok(Self {
            evaluator: Evaluator::new(scenario)?,
            woa,
            penalty,
            seed,
            cache: HashMap::new(),
        })
    }

    pub fn evaluator(&self) -> &Evaluator<'a> {
        &self.evaluator
    }

    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    pub fn frame(&self) -> u64 {
        self.evaluator.scenario().frame
    }

    /// Evaluation at fixed phases, bypassing the search.
    pub fn evaluate_at(
        &self,
        decision: &OffloadDecision,
        phases: &PhaseShifts,
    ) -> Result<EvaluationReport> {
        self.evaluator.evaluate(decision, phases, self.penalty)
    }

    pub fn score(&mut self, decision: &OffloadDecision) -> Result<Scored> {
        if let Some(hit) = self.cache.get(decision) {
            return Ok(hit.clone());
        }
        let scored = self.search(decision)?;
        self.cache.insert(decision.clone(), scored.clone());
        Ok(scored)
    }

    fn search(&self, decision: &OffloadDecision) -> Result<Scored> {
        let zeros = PhaseShifts::zeros(self.evaluator.irs_len());
        let baseline = self.evaluate_at(decision, &zeros)?;
        if decision.offloaded_count() == 0 {
            // Local execution never touches the channel.
            return Ok(Scored {
                decision: decision.clone(),
                phases: zeros,
                report: baseline,
            });
        }
        let mut rng = keyed_substream(self.seed, stream::WOA, self.frame(), &decision.key());
        let found =
            woa::optimize_phases(&self.evaluator, decision, &self.woa, self.penalty, &mut rng)?;
        if baseline.penalized_energy < found.score {
            return Ok(Scored {
                decision: decision.clone(),
                phases: zeros,
                report: baseline,
            });
        }
        let report = self.evaluate_at(decision, &found.phases)?;
        Ok(Scored {
            decision: decision.clone(),
            phases: found.phases,
            report,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;
    use crate::scenario::generate_scenario;

    #[test]
    fn order_independent_and_cached() {
        let cfg = ExperimentConfig::default();
        let s = generate_scenario(&cfg, 4);
        let a = OffloadDecision::from_choices(vec![0, 1, 2, 3, 3, 3, 0, 3, 3, 1], 3).unwrap();
        let b = OffloadDecision::from_choices(vec![2, 3, 3, 3, 1, 3, 3, 3, 3, 3], 3).unwrap();
        let mut first = FrameScorer::new(&s, WoaConfig::default(), 100.0, 7).unwrap();
        let mut second = FrameScorer::new(&s, WoaConfig::default(), 100.0, 7).unwrap();
        let (fa, fb) = (first.score(&a).unwrap(), first.score(&b).unwrap());
        let (sb, sa) = (second.score(&b).unwrap(), second.score(&a).unwrap());
        assert_eq!(fa, sa);
        assert_eq!(fb, sb);
        assert_eq!(first.score(&a).unwrap(), fa);
    }

    #[test]
    fn never_worse_than_zero_phases() {
        let cfg = ExperimentConfig::default();
        for frame in 1..20 {
            let s = generate_scenario(&cfg, frame);
            let mut scorer = FrameScorer::new(&s, WoaConfig::default(), 100.0, 1).unwrap();
            let d = OffloadDecision::from_choices((0..10).map(|u| u % 4).collect(), 3).unwrap();
            let zeros = scorer.evaluate_at(&d, &PhaseShifts::zeros(25)).unwrap();
            let scored = scorer.score(&d).unwrap();
            assert!(scored.penalized() <= zeros.penalized_energy);
            assert_eq!(
                scorer.evaluate_at(&d, &scored.phases).unwrap(),
                scored.report
            );
        }
    }
}
