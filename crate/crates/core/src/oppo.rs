//! Order-preserving quantization of a probability matrix into candidate decisions.

use ndarray::Array2;

use crate::energy::OffloadDecision;
use crate::error::{Error, Result};
use crate::scoring::{FrameScorer, Scored};

const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Row-stochastic `U × (M+1)` matrix; the last column is local execution.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix(Array2<f64>);

impl ProbabilityMatrix {
    pub fn new(p: Array2<f64>) -> Result<Self> {
        if p.nrows() == 0 || p.ncols() < 2 {
            return Err(Error::Domain(format!(
                "probability matrix must be at least 1x2, got {}x{}",
                p.nrows(),
                p.ncols()
            )));
        }
        for (u, row) in p.rows().into_iter().enumerate() {
            if row.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
                return Err(Error::Domain(format!(
                    "row {u} has an entry outside [0, 1]"
                )));
            }
            let sum: f64 = row.sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::Domain(format!("row {u} sums to {sum}")));
            }
        }
        Ok(Self(p))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map(Vec::len).unwrap_or(0);
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let p = Array2::from_shape_vec((rows.len(), cols), flat)
            .map_err(|e| Error::Domain(format!("ragged probability rows: {e}")))?;
        Self::new(p)
    }

    pub fn users(&self) -> usize {
        self.0.nrows()
    }

    pub fn options(&self) -> usize {
        self.0.ncols()
    }

    pub fn uavs(&self) -> usize {
        self.options() - 1
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.0
    }

    /// `𝒯₀ = 1/(M+1)`.
    pub fn base_threshold(&self) -> f64 {
        1.0 / self.options() as f64
    }
}

/// `𝒯₀` followed by every entry of `P` ordered by distance from `𝒯₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSequence {
    pub base: f64,
    pub values: Vec<f64>,
}

impl ThresholdSequence {
    /// `𝒯_h` for `h ≥ 1`.
    pub fn get(&self, h: usize) -> f64 {
        if h == 0 {
            self.base
        } else {
            self.values[h - 1]
        }
    }
}

pub fn first_candidate(p: &ProbabilityMatrix) -> OffloadDecision {
    let t0 = p.base_threshold();
    let local = p.uavs();
    let choices =
        p.0.rows()
            .into_iter()
            .map(|row| {
                let (col, max) = row_argmax(row.iter().copied());
                if max > t0 {
                    col
                } else {
                    local
                }
            })
            .collect();
    OffloadDecision::from_choices(choices, p.uavs()).expect("columns come from the matrix")
}

/// Per-row argmax without a threshold; used when quantization is disabled.
pub fn argmax_decision(p: &ProbabilityMatrix) -> OffloadDecision {
    let choices =
        p.0.rows()
            .into_iter()
            .map(|row| row_argmax(row.iter().copied()).0)
            .collect();
    OffloadDecision::from_choices(choices, p.uavs()).expect("columns come from the matrix")
}

/// First maximal column of a row.
fn row_argmax(row: impl Iterator<Item = f64>) -> (usize, f64) {
    row.enumerate()
        .fold((0, f64::NEG_INFINITY), |(bc, bv), (c, v)| {
            if v > bv {
                (c, v)
            } else {
                (bc, bv)
            }
        })
}

pub fn threshold_sequence(p: &ProbabilityMatrix) -> ThresholdSequence {
    let t0 = p.base_threshold();
    let mut values: Vec<f64> = p.0.iter().copied().collect();
    // Stable sort keeps row-major order among equal distances.
    values.sort_by(|a, b| (a - t0).abs().total_cmp(&(b - t0).abs()));
    ThresholdSequence { base: t0, values }
}

pub fn candidate_h(
    p: &ProbabilityMatrix,
    h: usize,
    thresholds: &ThresholdSequence,
) -> Result<OffloadDecision> {
    let max = p.users() * p.options();
    if h < 2 || h > max {
        return Err(Error::OutOfRange { index: h, max });
    }
    let t = thresholds.get(h - 1);
    let t0 = thresholds.base;
    let local = p.uavs();
    let choices =
        p.0.rows()
            .into_iter()
            .map(|row| {
                if let Some(c) = row.iter().position(|&v| v > t) {
                    c
                } else if let Some(c) = row.iter().position(|&v| v == t && v <= t0) {
                    c
                } else {
                    local
                }
            })
            .collect();
    OffloadDecision::from_choices(choices, p.uavs())
}

pub fn generate_candidates(p: &ProbabilityMatrix, h: usize) -> Result<Vec<OffloadDecision>> {
    let max = p.users() * p.options();
    if h < 1 || h > max {
        return Err(Error::OutOfRange { index: h, max });
    }
    let thresholds = threshold_sequence(p);
    let mut out = Vec::with_capacity(h);
    out.push(first_candidate(p));
    for i in 2..=h {
        out.push(candidate_h(p, i, &thresholds)?);
    }
    Ok(out)
}

/// Lowest penalized score among `candidates`; ties go to the lowest index.
pub fn select_best(
    candidates: &[OffloadDecision],
    scorer: &mut FrameScorer<'_>,
) -> Result<(usize, Scored)> {
    let mut best: Option<(usize, Scored)> = None;
    for (i, d) in candidates.iter().enumerate() {
        let scored = scorer.score(d)?;
        if best
            .as_ref()
            .is_none_or(|(_, b)| scored.penalized() < b.penalized())
        {
            best = Some((i, scored));
        }
    }
    best.ok_or(Error::EmptyCandidates)
}
