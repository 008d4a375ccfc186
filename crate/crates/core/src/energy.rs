//! The evaluator that scores an offloading decision and IRS configuration.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{self, LinkTable};
use crate::error::{Error, Result};
use crate::scenario::{ChannelParams, PhaseShifts, Scenario, Task, Uav, UserDevice};

/// Binary `U × (M+1)` assignment with exactly one 1 per row.
///
/// Stored as the chosen column per user; column `M` (0-based) is local
/// execution. Construction validates, so a value of this type always satisfies
/// the one-hot constraints.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OffloadDecision {
    options: usize,
    choices: Vec<usize>,
}

impl OffloadDecision {
    pub fn all_local(users: usize, uavs: usize) -> Self {
        Self {
            options: uavs + 1,
            choices: vec![uavs; users],
        }
    }

    pub fn from_choices(choices: Vec<usize>, uavs: usize) -> Result<Self> {
        if let Some((u, &c)) = choices.iter().enumerate().find(|(_, &c)| c > uavs) {
            return Err(Error::InvalidDecision(format!(
                "user {u} assigned to column {c}, only {} columns exist",
                uavs + 1
            )));
        }
        Ok(Self {
            options: uavs + 1,
            choices,
        })
    }

    /// Validates a raw 0/1 matrix against both one-hot constraints.
    pub fn from_matrix(rows: &[Vec<u8>]) -> Result<Self> {
        let options = rows.first().map(Vec::len).unwrap_or(0);
        if options == 0 {
            return Err(Error::InvalidDecision("empty matrix".into()));
        }
        let mut choices = Vec::with_capacity(rows.len());
        for (u, row) in rows.iter().enumerate() {
            if row.len() != options {
                return Err(Error::InvalidDecision(format!(
                    "row {u} has {} columns, expected {options}",
                    row.len()
                )));
            }
            if row.iter().any(|&v| v > 1) {
                return Err(Error::InvalidDecision(format!(
                    "row {u} has a non-binary entry"
                )));
            }
            let ones: Vec<usize> = (0..options).filter(|&c| row[c] == 1).collect();
            if ones.len() != 1 {
                return Err(Error::InvalidDecision(format!(
                    "row {u} sums to {}, expected 1",
                    ones.len()
                )));
            }
            choices.push(ones[0]);
        }
        Ok(Self { options, choices })
    }

    pub fn matrix(&self) -> Vec<Vec<u8>> {
        self.choices
            .iter()
            .map(|&c| (0..self.options).map(|j| u8::from(j == c)).collect())
            .collect()
    }

    pub fn num_users(&self) -> usize {
        self.choices.len()
    }

    pub fn num_uavs(&self) -> usize {
        self.options - 1
    }

    pub fn options(&self) -> usize {
        self.options
    }

    pub fn local_column(&self) -> usize {
        self.options - 1
    }

    /// Chosen column of `user`.
    pub fn choice(&self, user: usize) -> usize {
        self.choices[user]
    }

    pub fn choices(&self) -> &[usize] {
        &self.choices
    }

    pub fn uav_of(&self, user: usize) -> Option<usize> {
        let c = self.choices[user];
        (c < self.local_column()).then_some(c)
    }

    pub fn is_local(&self, user: usize) -> bool {
        self.uav_of(user).is_none()
    }

    /// Copy with `user` moved to column `column`.
    pub fn with_choice(&self, user: usize, column: usize) -> Self {
        assert!(column < self.options, "column {column} out of range");
        let mut next = self.clone();
        next.choices[user] = column;
        next
    }

    pub fn offloaded_count(&self) -> usize {
        (0..self.num_users()).filter(|&u| !self.is_local(u)).count()
    }

    /// Stable byte key, used to derive per-decision random streams.
    pub fn key(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 4 * self.choices.len());
        out.extend_from_slice(&(self.options as u32).to_le_bytes());
        for &c in &self.choices {
            out.extend_from_slice(&(c as u32).to_le_bytes());
        }
        out
    }
}

impl fmt::Display for OffloadDecision {
    /// Space-separated per-user choice; `L` is local, UAVs are numbered from 1.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for u in 0..self.num_users() {
            if u > 0 {
                f.write_str(" ")?;
            }
            match self.uav_of(u) {
                Some(m) => write!(f, "{}", m + 1)?,
                None => f.write_str("L")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub completion_times: Vec<f64>,
    pub energies: Vec<f64>,
    pub overdue: Vec<bool>,
    pub raw_energy: f64,
    pub penalized_energy: f64,
    pub overdue_count: usize,
}

/// `w_m = max(1, Σ_u β_{u,m})` for a 0-based UAV index.
pub fn workload(decision: &OffloadDecision, uav: usize) -> usize {
    decision
        .choices()
        .iter()
        .filter(|&&c| c == uav)
        .count()
        .max(1)
}

pub fn local_time_energy(task: &Task, ued: &UserDevice) -> (f64, f64) {
    let t = task.cycles / ued.cpu_speed;
    (t, t * ued.compute_power)
}

/// Bandwidth per offloading user; the total band is split evenly among all
/// users offloading in this frame.
pub fn effective_bandwidth(decision: &OffloadDecision, params: &ChannelParams) -> f64 {
    params.total_bandwidth / decision.offloaded_count().max(1) as f64
}

/// Upload time and energy. A zero (or non-finite) rate yields an infinite
/// time and the bounded sentinel energy `p_tran · T_u`.
pub fn transmission_time_energy(task: &Task, rate: f64, ued: &UserDevice) -> (f64, f64) {
    if !(rate > 0.0 && rate.is_finite()) {
        return (f64::INFINITY, ued.tx_power * task.deadline);
    }
    let t = task.data_bits / rate;
    (t, t * ued.tx_power)
}

pub fn compute_time_energy(task: &Task, uav: &Uav, workload: usize) -> (f64, f64) {
    let t = task.cycles / (uav.cpu_speed / workload as f64);
    (t, t * uav.compute_power)
}

/// Scenario-bound evaluator with link quantities precomputed.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    scenario: &'a Scenario,
    links: LinkTable,
}

impl<'a> Evaluator<'a> {
    pub fn new(scenario: &'a Scenario) -> Result<Self> {
        Ok(Self {
            scenario,
            links: LinkTable::new(scenario)?,
        })
    }

    pub fn scenario(&self) -> &'a Scenario {
        self.scenario
    }

    pub fn links(&self) -> &LinkTable {
        &self.links
    }

    pub fn irs_len(&self) -> usize {
        self.scenario.irs.len()
    }

    fn check(&self, decision: &OffloadDecision, phases: &PhaseShifts) -> Result<()> {
        let s = self.scenario;
        if decision.num_users() != s.num_users() || decision.options() != s.options() {
            return Err(Error::InvalidDecision(format!(
                "decision is {}x{}, scenario needs {}x{}",
                decision.num_users(),
                decision.options(),
                s.num_users(),
                s.options()
            )));
        }
        if phases.len() != s.irs.len() {
            return Err(Error::Shape {
                expected: s.irs.len(),
                actual: phases.len(),
            });
        }
        Ok(())
    }

    /// Uplink rate of `user` to `uav` over `bandwidth` with IRS factors `exp(iφ)`.
    pub fn rate(&self, user: usize, uav: usize, bandwidth: f64, factors: &[Complex64]) -> f64 {
        let params = &self.scenario.channel;
        let gain = self.links.combined_gain(user, uav, factors);
        channel::throughput(
            gain,
            Complex64::new(0.0, 0.0),
            bandwidth,
            params.tx_power,
            params.noise_power,
        )
    }

    pub fn evaluate(
        &self,
        decision: &OffloadDecision,
        phases: &PhaseShifts,
        penalty: f64,
    ) -> Result<EvaluationReport> {
        self.check(decision, phases)?;
        let s = self.scenario;
        let factors = channel::phase_factors(phases);
        let bandwidth = effective_bandwidth(decision, &s.channel);
        let uavs = s.num_uavs();
        let mut loads = vec![0usize; uavs];
        for u in 0..decision.num_users() {
            if let Some(m) = decision.uav_of(u) {
                loads[m] += 1;
            }
        }

        let n = s.num_users();
        let mut completion_times = Vec::with_capacity(n);
        let mut energies = Vec::with_capacity(n);
        let mut overdue = Vec::with_capacity(n);
        for (u, entry) in s.users.iter().enumerate() {
            let (time, energy) = match decision.uav_of(u) {
                None => local_time_energy(&entry.task, &entry.device),
                Some(m) => {
                    let rate = self.rate(u, m, bandwidth, &factors);
                    let (t_tran, e_tran) =
                        transmission_time_energy(&entry.task, rate, &entry.device);
                    let (t_comp, e_comp) =
                        compute_time_energy(&entry.task, &s.uavs[m], loads[m].max(1));
                    (t_tran + t_comp, e_tran + e_comp)
                }
            };
            completion_times.push(time);
            energies.push(energy);
            overdue.push(time > entry.task.deadline);
        }
        let raw_energy: f64 = energies.iter().sum();
        let overdue_count = overdue.iter().filter(|&&o| o).count();
        Ok(EvaluationReport {
            penalized_energy: raw_energy + penalty * overdue_count as f64,
            completion_times,
            energies,
            overdue,
            raw_energy,
            overdue_count,
        })
    }
}

/// One-shot evaluation; prefer [`Evaluator`] when scoring many decisions.
pub fn evaluate(
    scenario: &Scenario,
    decision: &OffloadDecision,
    phases: &PhaseShifts,
    penalty: f64,
) -> Result<EvaluationReport> {
    Evaluator::new(scenario)?.evaluate(decision, phases, penalty)
}
