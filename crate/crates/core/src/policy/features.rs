use num_complex::Complex64;

use crate::channel;
use crate::energy;
use crate::scenario::Scenario;

/// Concatenated `[f_e, f_w]` network input.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Input width for `users` and `uavs`.
pub fn feature_len(users: usize, uavs: usize) -> usize {
    users * (uavs + 1) + uavs
}

/// Energy of every user under every option with no interference from other
/// users: workload 1, the whole band, and all-zero IRS phases. Row-major
/// `U × (M+1)`, last column local.
pub fn solo_energies(scenario: &Scenario) -> Vec<f64> {
    let links = channel::LinkTable::new(scenario).expect("scenario is validated");
    let params = &scenario.channel;
    let factors = vec![Complex64::new(1.0, 0.0); scenario.irs.len()];
    let mut out = Vec::with_capacity(scenario.num_users() * scenario.options());
    for (u, entry) in scenario.users.iter().enumerate() {
        for (m, uav) in scenario.uavs.iter().enumerate() {
            let gain = links.combined_gain(u, m, &factors);
            let rate = channel::throughput(
                gain,
                Complex64::new(0.0, 0.0),
                params.total_bandwidth,
                params.tx_power,
                params.noise_power,
            );
            let (_, e_tran) = energy::transmission_time_energy(&entry.task, rate, &entry.device);
            let (_, e_comp) = energy::compute_time_energy(&entry.task, uav, 1);
            out.push(e_tran + e_comp);
        }
        out.push(energy::local_time_energy(&entry.task, &entry.device).1);
    }
    out
}

/// Zero mean, unit variance in place; a constant slice becomes all zeros.
pub fn standardize(values: &mut [f64]) {
    if values.is_empty() {
        return;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    for v in values.iter_mut() {
        *v = if sd > 1e-12 * mean.abs().max(1.0) {
            (*v - mean) / sd
        } else {
            0.0
        };
    }
}

/// Network input for one frame.
///
/// Energies are log-scaled before standardization: a weak link can cost
/// orders of magnitude more than the rest and would otherwise flatten every
/// other entry to the same value.
pub fn build_features(scenario: &Scenario) -> FeatureVector {
    let mut f_e: Vec<f64> = solo_energies(scenario)
        .into_iter()
        .map(|e| e.max(f64::MIN_POSITIVE).ln())
        .collect();
    standardize(&mut f_e);
    let mut f_w: Vec<f64> = scenario.uavs.iter().map(|u| u.cpu_speed).collect();
    standardize(&mut f_w);
    f_e.extend(f_w);
    FeatureVector(f_e)
}
