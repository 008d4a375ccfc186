//! THz propagation: direct and IRS-cascaded gains, reflector phase
//! differences, and Shannon throughput.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scenario::{ChannelParams, IrsGeometry, PhaseShifts, Scenario, Vec3};

pub type ComplexGain = Complex64;

/// Unit-modulus per-element phase factors `exp(iθ_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector(pub Vec<Complex64>);

impl PhaseVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn distance_user_uav(user: Vec3, uav: Vec3) -> f64 {
    uav.sub(user).norm()
}

/// `exp(-i 2π f d / c)`, with the cycle count reduced mod 1 before scaling so
/// large `f d / c` keeps full phase precision.
fn propagation_phase(d: f64, params: &ChannelParams) -> Complex64 {
    let cycles = params.carrier_freq * d / params.light_speed;
    Complex64::from_polar(1.0, -TAU * cycles.fract())
}

/// Direct UED-UAV gain `(c / 4π f d) exp(-i 2π f d / c - K(f) d / 2)`.
pub fn direct_channel_gain(d: f64, params: &ChannelParams) -> Result<ComplexGain> {
    if !(d > 0.0) {
        return Err(Error::Domain(format!("distance must be > 0, got {d}")));
    }
    let f = params.carrier_freq;
    let k = params.absorption_coefficient();
    let magnitude = params.light_speed / (4.0 * PI * f * d) * (-k * d / 2.0).exp();
    Ok(propagation_phase(d, params) * magnitude)
}

/// Cascaded UED-IRS-UAV scalar gain over total path `d' = d_user + d_uav`.
pub fn cascaded_gain_scalar(
    d_user: f64,
    d_uav: f64,
    params: &ChannelParams,
) -> Result<ComplexGain> {
    let d = d_user + d_uav;
    if !(d_user >= 0.0 && d_uav >= 0.0 && d > 0.0) {
        return Err(Error::Domain(format!(
            "cascaded distances must be non-negative with positive sum, got {d_user} + {d_uav}"
        )));
    }
    let f = params.carrier_freq;
    let k = params.absorption_coefficient();
    let magnitude = params.light_speed / (8.0 * PI.powi(3).sqrt() * f * d) * (-k * d / 2.0).exp();
    Ok(propagation_phase(d, params) * magnitude)
}

/// Position of reflector `k` (1-based, `k = k_z + (k_x - 1) K_z`).
pub fn reflector_position(k: usize, irs: &IrsGeometry) -> Result<Vec3> {
    let (kx, kz) = reflector_indices(k, irs)?;
    let first = irs.first_element;
    Ok(Vec3::new(
        first.x + (kx - 1) as f64 * irs.gap_x,
        0.0,
        first.z + (kz - 1) as f64 * irs.gap_z,
    ))
}

fn reflector_indices(k: usize, irs: &IrsGeometry) -> Result<(usize, usize)> {
    let total = irs.len();
    if k == 0 || k > total {
        return Err(Error::OutOfRange {
            index: k,
            max: total,
        });
    }
    Ok(((k - 1) / irs.kz + 1, (k - 1) % irs.kz + 1))
}

/// Phase factors for a far endpoint at `target`: entry k is
/// `exp(i (2π f / c) (Δr̃_k / |Δr̃_k|) · (target - first_element))`.
/// The first element has zero offset and contributes `1 + 0i`.
fn phase_vector(target: Vec3, irs: &IrsGeometry, params: &ChannelParams) -> PhaseVector {
    let wave = TAU * params.carrier_freq / params.light_speed;
    let offset = target.sub(irs.first_element);
    let entries = (0..irs.len())
        .map(|i| {
            let kx = i / irs.kz;
            let kz = i % irs.kz;
            let delta = Vec3::new(kx as f64 * irs.gap_x, 0.0, kz as f64 * irs.gap_z);
            let norm = delta.norm();
            if norm == 0.0 {
                return Complex64::new(1.0, 0.0);
            }
            let theta = wave * delta.dot(offset) / norm;
            Complex64::from_polar(1.0, theta.rem_euclid(TAU))
        })
        .collect();
    PhaseVector(entries)
}

/// `ē_m`: phase differences of the reflected paths towards a UAV.
pub fn uav_phase_vector(uav: Vec3, irs: &IrsGeometry, params: &ChannelParams) -> PhaseVector {
    phase_vector(uav, irs, params)
}

/// `ê_u`: phase differences of the reflected paths towards a user.
pub fn user_phase_vector(user: Vec3, irs: &IrsGeometry, params: &ChannelParams) -> PhaseVector {
    phase_vector(user, irs, params)
}

/// `exp(iφ_k)` for every reflector.
pub fn phase_factors(phases: &PhaseShifts) -> Vec<Complex64> {
    phases
        .0
        .iter()
        .map(|&phi| Complex64::from_polar(1.0, phi))
        .collect()
}

fn coherent_sum(e_uav: &[Complex64], factors: &[Complex64], e_user: &[Complex64]) -> Complex64 {
    e_uav
        .iter()
        .zip(factors)
        .zip(e_user)
        .map(|((a, p), b)| a * p * b)
        .sum()
}

/// `ĝ = g · ē_mᵀ Φ ê_u`.
pub fn irs_channel_gain(
    g: ComplexGain,
    e_uav: &PhaseVector,
    phases: &PhaseShifts,
    e_user: &PhaseVector,
) -> Result<ComplexGain> {
    let k = e_uav.len();
    if phases.len() != k {
        return Err(Error::Shape {
            expected: k,
            actual: phases.len(),
        });
    }
    if e_user.len() != k {
        return Err(Error::Shape {
            expected: k,
            actual: e_user.len(),
        });
    }
    Ok(g * coherent_sum(&e_uav.0, &phase_factors(phases), &e_user.0))
}

/// Phases that make every reflected path add coherently for one link:
/// `φ_k = -(θ_k + ν_k) mod 2π`.
pub fn aligned_phases(e_uav: &PhaseVector, e_user: &PhaseVector) -> PhaseShifts {
    PhaseShifts(
        e_uav
            .0
            .iter()
            .zip(&e_user.0)
            .map(|(a, b)| PhaseShifts::wrap(-(a * b).arg()))
            .collect(),
    )
}

/// Shannon rate `B log2(1 + p |h + ĝ|² / σ²)` in bits/s.
pub fn throughput(
    h: ComplexGain,
    g_hat: ComplexGain,
    bandwidth: f64,
    power: f64,
    noise: f64,
) -> f64 {
    bandwidth * (power * (h + g_hat).norm_sqr() / noise).ln_1p() / std::f64::consts::LN_2
}

/// Every phase-independent link quantity of a scenario, computed once.
#[derive(Debug, Clone)]
pub struct LinkTable {
    uavs: usize,
    /// `h[u * M + m]`.
    direct: Vec<ComplexGain>,
    /// `g[u * M + m]`.
    cascaded: Vec<ComplexGain>,
    e_uav: Vec<PhaseVector>,
    e_user: Vec<PhaseVector>,
}

impl LinkTable {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        let params = &scenario.channel;
        let irs = &scenario.irs;
        let first = irs.first_element;
        let uavs = scenario.num_uavs();
        let mut direct = Vec::with_capacity(scenario.num_users() * uavs);
        let mut cascaded = Vec::with_capacity(scenario.num_users() * uavs);
        for entry in &scenario.users {
            let user = entry.device.position;
            let d_user_irs = user.sub(first).norm();
            for uav in &scenario.uavs {
                let d = distance_user_uav(user, uav.position);
                direct.push(direct_channel_gain(d, params)?);
                let d_uav_irs = uav.position.sub(first).norm();
                cascaded.push(cascaded_gain_scalar(d_user_irs, d_uav_irs, params)?);
            }
        }
        Ok(Self {
            uavs,
            direct,
            cascaded,
            e_uav: scenario
                .uavs
                .iter()
                .map(|u| uav_phase_vector(u.position, irs, params))
                .collect(),
            e_user: scenario
                .users
                .iter()
                .map(|u| user_phase_vector(u.device.position, irs, params))
                .collect(),
        })
    }

    pub fn direct(&self, user: usize, uav: usize) -> ComplexGain {
        self.direct[user * self.uavs + uav]
    }

    pub fn cascaded(&self, user: usize, uav: usize) -> ComplexGain {
        self.cascaded[user * self.uavs + uav]
    }

    pub fn uav_phases(&self, uav: usize) -> &PhaseVector {
        &self.e_uav[uav]
    }

    pub fn user_phases(&self, user: usize) -> &PhaseVector {
        &self.e_user[user]
    }

    /// `h + ĝ` for one link under precomputed `exp(iφ)` factors.
    pub fn combined_gain(&self, user: usize, uav: usize, factors: &[Complex64]) -> ComplexGain {
        let sum = coherent_sum(&self.e_uav[uav].0, factors, &self.e_user[user].0);
        self.direct(user, uav) + self.cascaded(user, uav) * sum
    }
}
