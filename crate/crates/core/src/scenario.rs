//! World state for one time frame and its deterministic generation.

use std::f64::consts::TAU;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{CarrierPolicy, ExperimentConfig};
use crate::error::{Error, Result};
use crate::rng::{self, SimRng};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn sub(self, other: Vec3) -> Vec3 {
        Vec3::new(self.x - other.x, self.y - other.y, self.z - other.z)
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }
}

/// Molecular absorption coefficient `K(f)` in 1/m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Absorption {
    Constant {
        per_meter: f64,
    },
    /// Piecewise-linear in frequency over `(hz, per_meter)` knots sorted by
    /// frequency; clamped to the end values outside the table.
    Table {
        knots: Vec<(f64, f64)>,
    },
}

impl Absorption {
    pub fn coefficient(&self, freq: f64) -> f64 {
        match self {
            Absorption::Constant { per_meter } => *per_meter,
            Absorption::Table { knots } => {
                let Some(first) = knots.first() else {
                    return 0.0;
                };
                if freq <= first.0 {
                    return first.1;
                }
                for pair in knots.windows(2) {
                    let (f0, k0) = pair[0];
                    let (f1, k1) = pair[1];
                    if freq <= f1 {
                        let t = if f1 > f0 {
                            (freq - f0) / (f1 - f0)
                        } else {
                            1.0
                        };
                        return k0 + t * (k1 - k0);
                    }
                }
                knots[knots.len() - 1].1
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Absorption::Constant { per_meter } if per_meter.is_finite() && *per_meter >= 0.0 => {
                Ok(())
            }
            Absorption::Constant { per_meter } => Err(Error::Invariant(format!(
                "absorption coefficient {per_meter} must be finite and >= 0"
            ))),
            Absorption::Table { knots } => {
                if knots.is_empty() {
                    return Err(Error::Invariant("empty absorption table".into()));
                }
                if knots.windows(2).any(|w| w[1].0 < w[0].0) {
                    return Err(Error::Invariant(
                        "absorption table must be sorted by frequency".into(),
                    ));
                }
                if knots
                    .iter()
                    .any(|(f, k)| !f.is_finite() || !k.is_finite() || *k < 0.0)
                {
                    return Err(Error::Invariant(
                        "absorption table has invalid knots".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub light_speed: f64,
    pub carrier_freq: f64,
    pub absorption: Absorption,
    pub total_bandwidth: f64,
    pub tx_power: f64,
    pub noise_power: f64,
}

impl ChannelParams {
    pub fn absorption_coefficient(&self) -> f64 {
        self.absorption.coefficient(self.carrier_freq)
    }

    pub fn wavelength(&self) -> f64 {
        self.light_speed / self.carrier_freq
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("light_speed", self.light_speed),
            ("carrier_freq", self.carrier_freq),
            ("total_bandwidth", self.total_bandwidth),
            ("tx_power", self.tx_power),
            ("noise_power", self.noise_power),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Invariant(format!("{name} = {v} must be > 0")));
            }
        }
        self.absorption.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrsGeometry {
    pub kx: usize,
    pub kz: usize,
    /// First (lower-left) element `(a, 0, c)`.
    pub first_element: Vec3,
    pub gap_x: f64,
    pub gap_z: f64,
    /// Currently configured reflector angles; length `kx * kz`.
    pub phases: PhaseShifts,
}

impl IrsGeometry {
    pub fn len(&self) -> usize {
        self.kx * self.kz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn validate(&self) -> Result<()> {
        if self.kx == 0 || self.kz == 0 {
            return Err(Error::Invariant("IRS needs kx, kz >= 1".into()));
        }
        if !(self.gap_x > 0.0 && self.gap_z > 0.0) {
            return Err(Error::Invariant("IRS element gaps must be > 0".into()));
        }
        if self.first_element.y != 0.0 {
            return Err(Error::Invariant("IRS lies in the y = 0 plane".into()));
        }
        if self.phases.len() != self.len() {
            return Err(Error::Invariant(format!(
                "IRS has {} phases but K = kx * kz = {}",
                self.phases.len(),
                self.len()
            )));
        }
        if !self.phases.in_range() {
            return Err(Error::Invariant("IRS phases must lie in [0, 2π)".into()));
        }
        Ok(())
    }
}

/// IRS reflector angles, one per element, each in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseShifts(pub Vec<f64>);

impl PhaseShifts {
    pub fn zeros(k: usize) -> Self {
        Self(vec![0.0; k])
    }

    pub fn random(k: usize, rng: &mut impl Rng) -> Self {
        Self((0..k).map(|_| rng.random_range(0.0..TAU)).collect())
    }

    /// Wraps any finite angle into `[0, 2π)`.
    pub fn wrap(angle: f64) -> f64 {
        let r = angle.rem_euclid(TAU);
        // rem_euclid can round up to exactly 2π for tiny negative inputs.
        if r >= TAU {
            0.0
        } else {
            r
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn in_range(&self) -> bool {
        self.0.iter().all(|p| (0.0..TAU).contains(p))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserDevice {
    pub position: Vec3,
    /// CPU speed `Z_u` in cycles/s.
    pub cpu_speed: f64,
    /// Power while computing, W.
    pub compute_power: f64,
    /// Power while transmitting, W.
    pub tx_power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Uav {
    pub position: Vec3,
    pub cpu_speed: f64,
    pub compute_power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    /// Data size in bits.
    pub data_bits: f64,
    /// Deadline in seconds.
    pub deadline: f64,
    pub cycles: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserEntry {
    pub device: UserDevice,
    pub task: Task,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub frame: u64,
    pub users: Vec<UserEntry>,
    pub uavs: Vec<Uav>,
    pub irs: IrsGeometry,
    pub channel: ChannelParams,
}

#[derive(Serialize, Deserialize)]
struct ScenarioDocument {
    schema_version: u32,
    scenario: Scenario,
}

impl Scenario {
    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_uavs(&self) -> usize {
        self.uavs.len()
    }

    /// `M + 1`.
    pub fn options(&self) -> usize {
        self.uavs.len() + 1
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        self.irs.validate()?;
        for (u, entry) in self.users.iter().enumerate() {
            let d = &entry.device;
            if d.position.z != 0.0 {
                return Err(Error::Invariant(format!("user {u} must lie on z = 0")));
            }
            if !(d.cpu_speed > 0.0 && d.compute_power > 0.0 && d.tx_power > 0.0) {
                return Err(Error::Invariant(format!(
                    "user {u} has non-positive device rates"
                )));
            }
            let t = &entry.task;
            if !(t.data_bits > 0.0 && t.deadline > 0.0 && t.cycles > 0.0) {
                return Err(Error::Invariant(format!(
                    "user {u} has a non-positive task field"
                )));
            }
        }
        for (m, uav) in self.uavs.iter().enumerate() {
            if !(uav.position.z > 0.0) {
                return Err(Error::Invariant(format!("UAV {m} must fly above ground")));
            }
            if !(uav.cpu_speed > 0.0 && uav.compute_power > 0.0) {
                return Err(Error::Invariant(format!("UAV {m} has non-positive rates")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let doc = ScenarioDocument {
            schema_version: SCHEMA_VERSION,
            scenario: self.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("scenario serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        match value.get("schema_version").and_then(|v| v.as_u64()) {
            Some(v) if v == SCHEMA_VERSION as u64 => {}
            Some(v) => {
                return Err(Error::Schema(format!(
                    "schema_version {v} is not supported (expected {SCHEMA_VERSION})"
                )))
            }
            None => return Err(Error::Schema("missing schema_version".into())),
        }
        let doc: ScenarioDocument =
            serde_json::from_value(value).map_err(|e| Error::Schema(e.to_string()))?;
        doc.scenario.validate()?;
        Ok(doc.scenario)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

fn uniform(rng: &mut SimRng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

/// Builds frame `frame` of the experiment.
///
/// Device speeds are fixed for the whole run (drawn from the `devices` stream);
/// positions come from the same static stream unless
/// `resample_positions_per_frame` is set, in which case they are redrawn per
/// frame together with the tasks and the carrier.
pub fn generate_scenario(cfg: &ExperimentConfig, frame: u64) -> Scenario {
    let mut devices = rng::substream(cfg.seed, rng::stream::DEVICES, 0);
    let mut per_frame = rng::substream(cfg.seed, rng::stream::SCENARIO, frame);

    let user_speeds: Vec<f64> = (0..cfg.num_users)
        .map(|_| uniform(&mut devices, cfg.user_speed_min, cfg.user_speed_max))
        .collect();
    let uav_speeds: Vec<f64> = (0..cfg.num_uavs)
        .map(|_| uniform(&mut devices, cfg.uav_speed_min, cfg.uav_speed_max))
        .collect();

    let position_rng = if cfg.resample_positions_per_frame {
        &mut per_frame
    } else {
        &mut devices
    };
    let user_positions: Vec<Vec3> = (0..cfg.num_users)
        .map(|_| {
            let x = uniform(position_rng, 0.0, cfg.area_length);
            let y = uniform(position_rng, 0.0, cfg.area_width);
            Vec3::new(x, y, 0.0)
        })
        .collect();
    let uav_positions: Vec<Vec3> = (0..cfg.num_uavs)
        .map(|_| {
            let x = uniform(position_rng, 0.0, cfg.area_length);
            let y = uniform(position_rng, 0.0, cfg.area_width);
            Vec3::new(x, y, cfg.uav_height)
        })
        .collect();

    let carrier_freq = match cfg.carrier {
        CarrierPolicy::Fixed { hz } => hz,
        CarrierPolicy::Uniform { min_hz, max_hz } => uniform(&mut per_frame, min_hz, max_hz),
    };

    let users = user_positions
        .into_iter()
        .zip(user_speeds)
        .map(|(position, cpu_speed)| {
            let bytes = uniform(
                &mut per_frame,
                cfg.task_size_min_bytes,
                cfg.task_size_max_bytes,
            );
            let data_bits = bytes * 8.0;
            let cycles = data_bits * cfg.cycles_per_bit;
            UserEntry {
                device: UserDevice {
                    position,
                    cpu_speed,
                    compute_power: cfg.ued_compute_power,
                    tx_power: cfg.ued_tx_power,
                },
                task: Task {
                    data_bits,
                    deadline: cycles / cpu_speed,
                    cycles,
                },
            }
        })
        .collect();

    let uavs = uav_positions
        .into_iter()
        .zip(uav_speeds)
        .map(|(position, cpu_speed)| Uav {
            position,
            cpu_speed,
            compute_power: cfg.uav_compute_power,
        })
        .collect();

    Scenario {
        frame,
        users,
        uavs,
        irs: IrsGeometry {
            kx: cfg.irs_kx,
            kz: cfg.irs_kz,
            first_element: Vec3::new(cfg.irs_first_x, 0.0, cfg.irs_first_z),
            gap_x: cfg.irs_gap_x,
            gap_z: cfg.irs_gap_z,
            phases: PhaseShifts::zeros(cfg.irs_kx * cfg.irs_kz),
        },
        channel: ChannelParams {
            light_speed: cfg.light_speed,
            carrier_freq,
            absorption: Absorption::Constant {
                per_meter: cfg.absorption,
            },
            total_bandwidth: cfg.total_bandwidth,
            tx_power: cfg.tx_power,
            noise_power: cfg.noise_power,
        },
    }
}
