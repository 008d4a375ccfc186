//! Per-frame outcomes, window summaries and side-by-side method comparison.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::baselines::{self, Baseline};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::iopo::{woa_config, FrameRecord, Iopo};
use crate::rng::{keyed_substream, stream};
use crate::scenario::generate_scenario;
use crate::scoring::{FrameScorer, Scored};

pub const IOPO: &str = "iopo";
pub const ORACLE: &str = "oracle";

/// The part of a frame result that summaries need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub frame: u64,
    pub raw_energy: f64,
    pub penalized_energy: f64,
    pub overdue_count: usize,
    pub offloaded: usize,
}

impl Outcome {
    pub fn from_scored(frame: u64, s: &Scored) -> Self {
        Self {
            frame,
            raw_energy: s.report.raw_energy,
            penalized_energy: s.penalized(),
            overdue_count: s.report.overdue_count,
            offloaded: s.decision.offloaded_count(),
        }
    }
}

impl From<&FrameRecord> for Outcome {
    fn from(r: &FrameRecord) -> Self {
        Self {
            frame: r.frame,
            raw_energy: r.raw_energy,
            penalized_energy: r.penalized_energy,
            overdue_count: r.overdue_count,
            offloaded: r.decision.offloaded_count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSeries {
    pub method: String,
    pub outcomes: Vec<Outcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub method: String,
    pub frames: usize,
    pub mean_penalized_energy: f64,
    pub mean_raw_energy: f64,
    /// Percentage of frames with at least one overdue user.
    pub overdue_plan_percent: f64,
    /// Mean overdue count over the frames that have any.
    pub avg_overdue_users: f64,
    /// Frames where the learner beat its initial reference.
    pub improved: Option<u64>,
    /// Oracle mean penalized energy over this method's.
    pub proximity_ratio: Option<f64>,
}

impl MetricsSummary {
    pub fn from_outcomes(method: &str, outcomes: &[Outcome]) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::Domain(format!(
                "no frames to summarize for {method}"
            )));
        }
        let n = outcomes.len() as f64;
        let mean = |f: &dyn Fn(&Outcome) -> f64| outcomes.iter().map(f).sum::<f64>() / n;
        Ok(Self {
            method: method.to_string(),
            frames: outcomes.len(),
            mean_penalized_energy: mean(&|o| o.penalized_energy),
            mean_raw_energy: mean(&|o| o.raw_energy),
            overdue_plan_percent: 100.0 * mean(&|o| f64::from(u8::from(o.overdue_count > 0))),
            avg_overdue_users: {
                let hit: Vec<f64> = outcomes
                    .iter()
                    .filter(|o| o.overdue_count > 0)
                    .map(|o| o.overdue_count as f64)
                    .collect();
                if hit.is_empty() {
                    0.0
                } else {
                    hit.iter().sum::<f64>() / hit.len() as f64
                }
            },
            improved: None,
            proximity_ratio: None,
        })
    }

    pub fn with_oracle(mut self, oracle_mean: f64) -> Self {
        self.proximity_ratio = Some(proximity_ratio(oracle_mean, self.mean_penalized_energy));
        self
    }
}

/// Learner metrics over the last `window` records; `#Improved` counts the whole run.
pub fn learner_summary(records: &[FrameRecord], window: usize) -> Result<MetricsSummary> {
    let tail = &records[records.len().saturating_sub(window)..];
    let outcomes: Vec<Outcome> = tail.iter().map(Outcome::from).collect();
    let mut m = MetricsSummary::from_outcomes(IOPO, &outcomes)?;
    m.improved = Some(records.iter().filter(|r| r.improved).count() as u64);
    Ok(m)
}

pub fn proximity_ratio(oracle_mean: f64, method_mean: f64) -> f64 {
    if method_mean == 0.0 {
        if oracle_mean == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        oracle_mean / method_mean
    }
}

/// Summaries for every series, with proximity ratios when an oracle series is present.
pub fn summarize(series: &[MethodSeries]) -> Result<Vec<MetricsSummary>> {
    let mut out = series
        .iter()
        .map(|s| MetricsSummary::from_outcomes(&s.method, &s.outcomes))
        .collect::<Result<Vec<_>>>()?;
    if let Some(oracle) = out.iter().find(|m| m.method == ORACLE).cloned() {
        out = out
            .into_iter()
            .map(|m| m.with_oracle(oracle.mean_penalized_energy))
            .collect();
    }
    Ok(out)
}

/// The frames `[frames - window + 1, frames]`, clamped to start at 1.
pub fn trailing_frames(frames: u64, window: usize) -> Result<RangeInclusive<u64>> {
    if window == 0 {
        return Err(Error::Config {
            key: "window".into(),
            reason: "must be positive".into(),
        });
    }
    if frames == 0 {
        return Err(Error::Config {
            key: "frames".into(),
            reason: "must be positive".into(),
        });
    }
    Ok(frames.saturating_sub(window as u64) + 1..=frames)
}

/// What to score on each frame of a comparison.
#[derive(Debug, Clone, Default)]
pub struct Comparison<'a> {
    /// Frozen learner; scored with the same quantizer and candidate count as in training.
    pub learner: Option<&'a Iopo>,
    pub baselines: Vec<Baseline>,
    pub oracle: bool,
}

/// Scores the requested methods on the same frames, sharing one scorer per frame.
pub fn compare(
    cfg: &ExperimentConfig,
    frames: RangeInclusive<u64>,
    what: &Comparison<'_>,
) -> Result<Vec<MethodSeries>> {
    if what.oracle {
        baselines::enumeration_size(cfg.num_users, cfg.num_uavs, cfg.brute_force_cap)?;
    }
    let mut names: Vec<String> = Vec::new();
    if what.learner.is_some() {
        names.push(IOPO.into());
    }
    names.extend(what.baselines.iter().map(|b| b.name().to_string()));
    if what.oracle {
        names.push(ORACLE.into());
    }
    let mut series: Vec<MethodSeries> = names
        .into_iter()
        .map(|method| MethodSeries {
            method,
            outcomes: Vec::new(),
        })
        .collect();

    for n in frames {
        let scenario = generate_scenario(cfg, n);
        let mut scorer =
            FrameScorer::new(&scenario, woa_config(cfg), cfg.overdue_penalty, cfg.seed)?;
        let mut slot = series.iter_mut();
        if let Some(learner) = what.learner {
            let s = learner.predict(&mut scorer)?;
            slot.next()
                .unwrap()
                .outcomes
                .push(Outcome::from_scored(n, &s));
        }
        for b in &what.baselines {
            let mut rng = keyed_substream(cfg.seed, stream::BASELINES, n, b.name().as_bytes());
            let s = b.run(&mut scorer, cfg.opt_random_samples, &mut rng)?;
            slot.next()
                .unwrap()
                .outcomes
                .push(Outcome::from_scored(n, &s));
        }
        if what.oracle {
            let s = baselines::brute_force_optimal(&mut scorer, cfg.brute_force_cap)?;
            slot.next()
                .unwrap()
                .outcomes
                .push(Outcome::from_scored(n, &s));
        }
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn outcome(frame: u64, pen: f64, overdue: usize) -> Outcome {
        Outcome {
            frame,
            raw_energy: pen - 100.0 * overdue as f64,
            penalized_energy: pen,
            overdue_count: overdue,
            offloaded: 1,
        }
    }

    #[test]
    fn summary_arithmetic() {
        let o = [
            outcome(1, 2.0, 0),
            outcome(2, 104.0, 1),
            outcome(3, 203.0, 2),
        ];
        let m = MetricsSummary::from_outcomes("x", &o).unwrap();
        assert_relative_eq!(m.mean_penalized_energy, 103.0);
        assert_relative_eq!(m.mean_raw_energy, 3.0);
        assert_relative_eq!(m.overdue_plan_percent, 200.0 / 3.0);
        assert_relative_eq!(m.avg_overdue_users, 1.5);
        assert!(MetricsSummary::from_outcomes("x", &[]).is_err());
        assert_relative_eq!(m.with_oracle(51.5).proximity_ratio.unwrap(), 0.5);
    }

    #[test]
    fn trailing_window_bounds() {
        assert_eq!(trailing_frames(5000, 1000).unwrap(), 4001..=5000);
        assert_eq!(trailing_frames(200, 1000).unwrap(), 1..=200);
        assert!(trailing_frames(10, 0).is_err());
    }

    #[test]
    fn oracle_ratio_bounds_every_method() {
        let cfg = ExperimentConfig {
            num_users: 4,
            num_uavs: 2,
            oppo_candidates: 6,
            ..ExperimentConfig::default()
        };
        let learner = Iopo::new(cfg.clone()).unwrap();
        let what = Comparison {
            learner: Some(&learner),
            baselines: Baseline::ALL.to_vec(),
            oracle: true,
        };
        let series = compare(&cfg, 1..=15, &what).unwrap();
        assert_eq!(series.len(), 7);
        let oracle = series.last().unwrap();
        for s in &series {
            for (a, o) in s.outcomes.iter().zip(&oracle.outcomes) {
                assert!(o.penalized_energy <= a.penalized_energy);
            }
        }
        for m in summarize(&series).unwrap() {
            assert!(m.proximity_ratio.unwrap() <= 1.0);
        }
    }

    #[test]
    fn oracle_refuses_large_instances() {
        let cfg = ExperimentConfig::default();
        let what = Comparison {
            oracle: true,
            ..Comparison::default()
        };
        assert!(matches!(
            compare(&cfg, 1..=1, &what),
            Err(Error::EnumerationCap { .. })
        ));
    }
}
