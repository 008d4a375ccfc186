//! The online loop: predict, quantize, score, keep the best reference, train.

use serde::{Deserialize, Serialize};

use crate::baselines;
use crate::config::ExperimentConfig;
use crate::energy::OffloadDecision;
use crate::error::{Error, Result};
use crate::oppo;
use crate::policy::{
    build_features, feature_len, Checkpoint, NetShape, PolicyNet, ReplayBuffer, Sample,
};
use crate::rng::{stream, substream};
use crate::scenario::{generate_scenario, PhaseShifts};
use crate::scoring::{FrameScorer, Scored};
use crate::woa::WoaConfig;

/// Everything observed in one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame: u64,
    /// Predicted decision `β*` and its phases.
    pub decision: OffloadDecision,
    pub phases: PhaseShifts,
    pub raw_energy: f64,
    pub penalized_energy: f64,
    pub overdue_count: usize,
    pub initial_raw_energy: f64,
    pub initial_penalized_energy: f64,
    /// Reference stored for training after the comparison with `β*`.
    pub reference: OffloadDecision,
    pub ref_raw_energy: f64,
    pub ref_penalized_energy: f64,
    /// `β*` scored strictly lower than the initial reference.
    pub improved: bool,
    /// Loss of the training step taken this frame, if any.
    pub loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub records: Vec<FrameRecord>,
    pub improved: u64,
}

impl RunSummary {
    /// The last `window` records (all of them if fewer).
    pub fn trailing(&self, window: usize) -> &[FrameRecord] {
        &self.records[self.records.len().saturating_sub(window)..]
    }
}

/// Keeps `current` unless `candidate` scores strictly lower.
pub fn update_reference(current: Scored, candidate: &Scored) -> Scored {
    if candidate.penalized() < current.penalized() {
        candidate.clone()
    } else {
        current
    }
}

pub fn woa_config(cfg: &ExperimentConfig) -> WoaConfig {
    WoaConfig {
        whales: cfg.woa_whales,
        rounds: cfg.woa_rounds,
        spiral: cfg.woa_spiral,
    }
}

pub fn net_shape(cfg: &ExperimentConfig) -> NetShape {
    NetShape {
        input: feature_len(cfg.num_users, cfg.num_uavs),
        hidden_layers: cfg.hidden_layers,
        hidden_width: cfg.hidden_width,
        users: cfg.num_users,
        options: cfg.options(),
    }
}

/// Learner state carried between frames.
#[derive(Debug, Clone)]
pub struct Iopo {
    cfg: ExperimentConfig,
    net: PolicyNet,
    buffer: ReplayBuffer,
    frame: u64,
    improved: u64,
}

impl Iopo {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = substream(cfg.seed, stream::POLICY_INIT, 0);
        let net = PolicyNet::new(
            net_shape(&cfg),
            cfg.dropout_rate,
            cfg.learning_rate,
            &mut rng,
        )?;
        Ok(Self {
            buffer: ReplayBuffer::new(cfg.buffer_capacity().max(1)),
            cfg,
            net,
            frame: 0,
            improved: 0,
        })
    }

    /// Resumes from a checkpoint; frames continue after the checkpointed one.
    /// The replay memory starts empty.
    pub fn from_checkpoint(cfg: ExperimentConfig, ck: Checkpoint) -> Result<Self> {
        cfg.validate()?;
        if ck.net.shape() != net_shape(&cfg) {
            return Err(Error::Config {
                key: "num_users/num_uavs/hidden_layers/hidden_width".into(),
                reason: format!(
                    "checkpoint network {:?} does not match config {:?}",
                    ck.net.shape(),
                    net_shape(&cfg)
                ),
            });
        }
        Ok(Self {
            buffer: ReplayBuffer::new(cfg.buffer_capacity().max(1)),
            cfg,
            net: ck.net,
            frame: ck.frame,
            improved: 0,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn net(&self) -> &PolicyNet {
        &self.net
    }

    pub fn frame(&self) -> u64 {
        self.frame
    }

    pub fn improved(&self) -> u64 {
        self.improved
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::new(self.net.clone(), self.cfg.hash(), self.frame)
    }

    /// Predicted decision for frame `frame` without touching learner state.
    pub fn predict(&self, scorer: &mut FrameScorer<'_>) -> Result<Scored> {
        let scenario = scorer.evaluator().scenario();
        let probs = self.net.predict(&build_features(scenario))?;
        let candidates = if self.cfg.disable_oppo {
            vec![oppo::argmax_decision(&probs)]
        } else {
            oppo::generate_candidates(&probs, self.cfg.oppo_candidates)?
        };
        Ok(oppo::select_best(&candidates, scorer)?.1)
    }

    /// Processes the next frame.
    pub fn step(&mut self) -> Result<FrameRecord> {
        let n = self.frame + 1;
        self.process(n).map_err(|e| Error::Frame {
            frame: n,
            source: Box::new(e),
        })
    }

    fn process(&mut self, n: u64) -> Result<FrameRecord> {
        let cfg = &self.cfg;
        let scenario = generate_scenario(cfg, n);
        let features = build_features(&scenario);
        let mut scorer =
            FrameScorer::new(&scenario, woa_config(cfg), cfg.overdue_penalty, cfg.seed)?;
        let predicted = self.predict(&mut scorer)?;

        let initial = if cfg.disable_initial_reference {
            predicted.clone()
        } else {
            let d = baselines::greedy_oc(&scorer)?;
            scorer.score(&d)?
        };
        let improved = predicted.penalized() < initial.penalized();
        let reference = update_reference(initial.clone(), &predicted);

        self.buffer.push(Sample {
            features,
            reference: reference.decision.clone(),
        });
        let mut loss = None;
        let lambda = cfg.training_interval;
        if cfg.training_enabled() && n.is_multiple_of(lambda) {
            let mut pick = substream(cfg.seed, stream::BUFFER, n);
            if let Some(batch) = self.buffer.sample(cfg.batch_size, &mut pick) {
                let mut drop = substream(cfg.seed, stream::DROPOUT, n);
                loss = Some(self.net.train_step(&batch, &mut drop)?);
            }
        }

        self.frame = n;
        if improved {
            self.improved += 1;
        }
        Ok(FrameRecord {
            frame: n,
            raw_energy: predicted.report.raw_energy,
            penalized_energy: predicted.penalized(),
            overdue_count: predicted.report.overdue_count,
            decision: predicted.decision,
            phases: predicted.phases,
            initial_raw_energy: initial.report.raw_energy,
            initial_penalized_energy: initial.penalized(),
            ref_raw_energy: reference.report.raw_energy,
            ref_penalized_energy: reference.penalized(),
            reference: reference.decision,
            improved,
            loss,
        })
    }
}

/// Runs all configured frames, handing each record to `observe` as it is produced.
pub fn run_with<F, E>(
    cfg: ExperimentConfig,
    mut observe: F,
) -> std::result::Result<(Iopo, RunSummary), E>
where
    F: FnMut(&Iopo, &FrameRecord) -> std::result::Result<(), E>,
    E: From<Error>,
{
    let mut iopo = Iopo::new(cfg)?;
    let mut records = Vec::with_capacity(iopo.cfg.frames as usize);
    while iopo.frame < iopo.cfg.frames {
        let record = iopo.step()?;
        observe(&iopo, &record)?;
        records.push(record);
    }
    let summary = RunSummary {
        improved: iopo.improved,
        records,
    };
    Ok((iopo, summary))
}

pub fn run(cfg: ExperimentConfig) -> Result<RunSummary> {
    Ok(run_with(cfg, |_, _| Ok::<(), Error>(()))?.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(frames: u64) -> ExperimentConfig {
        ExperimentConfig {
            num_users: 3,
            num_uavs: 2,
            frames,
            oppo_candidates: 5,
            hidden_layers: 2,
            hidden_width: 16,
            batch_size: 8,
            training_interval: 2,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn single_frame_without_training() {
        let cfg = ExperimentConfig {
            training_interval: 5,
            ..small(1)
        };
        let summary = run(cfg.clone()).unwrap();
        assert_eq!(summary.records.len(), 1);
        let r = &summary.records[0];
        assert!(r.loss.is_none());
        assert_eq!(
            r.ref_penalized_energy,
            r.initial_penalized_energy.min(r.penalized_energy)
        );

        let s = generate_scenario(&cfg, 1);
        let mut scorer = FrameScorer::new(&s, woa_config(&cfg), 100.0, cfg.seed).unwrap();
        let goc = scorer
            .score(&baselines::greedy_oc(&scorer).unwrap())
            .unwrap();
        assert_eq!(goc.penalized(), r.initial_penalized_energy);
    }

    #[test]
    fn reference_bookkeeping() {
        let summary = run(small(60)).unwrap();
        let mut count = 0;
        for r in &summary.records {
            assert!(r.ref_penalized_energy <= r.initial_penalized_energy);
            assert!(r.ref_penalized_energy <= r.penalized_energy);
            assert_eq!(r.improved, r.penalized_energy < r.initial_penalized_energy);
            count += u64::from(r.improved);
        }
        assert_eq!(count, summary.improved);
        assert!(summary.records.iter().any(|r| r.loss.is_some()));
        assert!(summary
            .records
            .iter()
            .filter(|r| r.frame < 8)
            .all(|r| r.loss.is_none()));
    }

    #[test]
    fn deterministic() {
        assert_eq!(run(small(25)).unwrap(), run(small(25)).unwrap());
    }

    #[test]
    fn ablations() {
        let no_ref = run(ExperimentConfig {
            disable_initial_reference: true,
            ..small(20)
        })
        .unwrap();
        assert_eq!(no_ref.improved, 0);
        for r in &no_ref.records {
            assert_eq!(r.reference, r.decision);
        }
        let no_oppo = run(ExperimentConfig {
            disable_oppo: true,
            ..small(10)
        })
        .unwrap();
        assert_eq!(no_oppo.records.len(), 10);
    }

    #[test]
    fn update_reference_ties_keep_current() {
        let cfg = small(1);
        let s = generate_scenario(&cfg, 1);
        let mut scorer = FrameScorer::new(&s, woa_config(&cfg), 100.0, 0).unwrap();
        let local = scorer.score(&baselines::local_all(&s)).unwrap();
        let same = update_reference(local.clone(), &local.clone());
        assert_eq!(same, local);
        let mut better = local.clone();
        better.report.penalized_energy -= 1.0;
        better.decision = local.decision.with_choice(0, 0);
        assert_eq!(
            update_reference(local.clone(), &better).decision,
            better.decision
        );
        let mut worse = local.clone();
        worse.report.penalized_energy += 100.0;
        assert_eq!(update_reference(local.clone(), &worse), local);
    }

    #[test]
    fn checkpoint_resume_matches_shape() {
        let cfg = small(4);
        let (iopo, _) = run_with(cfg.clone(), |_, _| Ok::<(), Error>(())).unwrap();
        let ck = iopo.checkpoint();
        let resumed = Iopo::from_checkpoint(cfg.clone(), ck.clone()).unwrap();
        assert_eq!(resumed.frame(), 4);
        let other = ExperimentConfig {
            num_users: 4,
            ..cfg
        };
        assert!(Iopo::from_checkpoint(other, ck).is_err());
    }
}
