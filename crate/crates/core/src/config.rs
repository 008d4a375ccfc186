//! Experiment configuration.
//!
//! The on-disk format is a flat `key = value` document (TOML syntax, no tables).
//! Every key is optional; absent keys take the defaults of
//! [`ExperimentConfig::default`].

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Carrier selection for a frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CarrierPolicy {
    /// One carrier drawn uniformly from `[min_hz, max_hz]` per frame.
    Uniform {
        min_hz: f64,
        max_hz: f64,
    },
    Fixed {
        hz: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub num_users: usize,
    pub num_uavs: usize,
    pub frames: u64,
    pub seed: u64,

    pub area_length: f64,
    pub area_width: f64,
    pub uav_height: f64,
    pub uav_speed_min: f64,
    pub uav_speed_max: f64,
    pub user_speed_min: f64,
    pub user_speed_max: f64,
    pub task_size_min_bytes: f64,
    pub task_size_max_bytes: f64,
    pub cycles_per_bit: f64,

    pub carrier: CarrierPolicy,
    pub light_speed: f64,
    pub absorption: f64,
    pub total_bandwidth: f64,
    pub tx_power: f64,
    pub noise_power: f64,
    pub ued_compute_power: f64,
    pub ued_tx_power: f64,
    pub uav_compute_power: f64,

    pub irs_kx: usize,
    pub irs_kz: usize,
    pub irs_first_x: f64,
    pub irs_first_z: f64,
    pub irs_gap_x: f64,
    pub irs_gap_z: f64,

    pub overdue_penalty: f64,
    pub oppo_candidates: usize,
    pub woa_whales: usize,
    pub woa_rounds: usize,
    pub woa_spiral: f64,

    pub batch_size: usize,
    pub buffer_factor: f64,
    pub training_interval: u64,
    pub learning_rate: f64,
    pub dropout_rate: f64,
    pub hidden_layers: usize,
    pub hidden_width: usize,

    pub window: usize,
    pub opt_random_samples: usize,
    pub brute_force_cap: u64,

    pub disable_oppo: bool,
    pub disable_initial_reference: bool,
    pub resample_positions_per_frame: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            num_users: 10,
            num_uavs: 3,
            frames: 20_000,
            seed: 0,

            area_length: 800.0,
            area_width: 600.0,
            uav_height: 20.0,
            uav_speed_min: 0.08e9,
            uav_speed_max: 0.4e9,
            user_speed_min: 0.04e9,
            user_speed_max: 0.08e9,
            task_size_min_bytes: 32.0,
            task_size_max_bytes: 100_000.0,
            cycles_per_bit: 100.0,

            carrier: CarrierPolicy::Uniform {
                min_hz: 200e9,
                max_hz: 400e9,
            },
            light_speed: 3e8,
            absorption: 0.005,
            total_bandwidth: 10e9,
            tx_power: 0.1,
            noise_power: 1e-12,
            ued_compute_power: 100.0,
            ued_tx_power: 50.0,
            uav_compute_power: 200.0,

            irs_kx: 5,
            irs_kz: 5,
            irs_first_x: 4.0,
            irs_first_z: 4.0,
            irs_gap_x: 0.0005,
            irs_gap_z: 0.0005,

            overdue_penalty: 100.0,
            oppo_candidates: 20,
            woa_whales: 3,
            woa_rounds: 5,
            woa_spiral: 1.0,

            batch_size: 256,
            buffer_factor: 1.5,
            training_interval: 10,
            learning_rate: 0.001,
            dropout_rate: 0.1,
            hidden_layers: 6,
            hidden_width: 256,

            window: 1000,
            opt_random_samples: 10,
            brute_force_cap: 1_000_000,

            disable_oppo: false,
            disable_initial_reference: false,
            resample_positions_per_frame: true,
        }
    }
}

/// Short symbol aliases accepted in config files.
const ALIASES: &[(&str, &str)] = &[
    ("U", "num_users"),
    ("M", "num_uavs"),
    ("N", "frames"),
    ("H", "oppo_candidates"),
    ("W", "woa_whales"),
    ("E", "woa_rounds"),
    ("b", "woa_spiral"),
    ("lambda", "training_interval"),
    ("lr", "learning_rate"),
    ("batch", "batch_size"),
    ("dropout", "dropout_rate"),
    ("penalty", "overdue_penalty"),
    ("buffer", "buffer_factor"),
];

fn canonical(key: &str) -> &str {
    ALIASES
        .iter()
        .find(|(alias, _)| *alias == key)
        .map(|(_, name)| *name)
        .unwrap_or(key)
}

fn as_f64(key: &str, value: &toml::Value) -> Result<f64> {
    match value {
        toml::Value::Float(v) => Ok(*v),
        toml::Value::Integer(v) => Ok(*v as f64),
        other => Err(Error::config(
            key,
            format!("expected a number, got {other}"),
        )),
    }
}

fn as_u64(key: &str, value: &toml::Value) -> Result<u64> {
    match value {
        toml::Value::Integer(v) if *v >= 0 => Ok(*v as u64),
        toml::Value::Float(v) if *v >= 0.0 && v.fract() == 0.0 && *v <= u64::MAX as f64 => {
            Ok(*v as u64)
        }
        other => Err(Error::config(
            key,
            format!("expected a non-negative integer, got {other}"),
        )),
    }
}

fn as_usize(key: &str, value: &toml::Value) -> Result<usize> {
    as_u64(key, value).map(|v| v as usize)
}

fn as_bool(key: &str, value: &toml::Value) -> Result<bool> {
    match value {
        toml::Value::Boolean(v) => Ok(*v),
        toml::Value::Integer(0) => Ok(false),
        toml::Value::Integer(1) => Ok(true),
        other => Err(Error::config(
            key,
            format!("expected a boolean, got {other}"),
        )),
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("<file>", e.message().to_string()))?;
        let mut cfg = Self::default();
        let mut carrier_fixed: Option<f64> = None;
        let (mut carrier_min, mut carrier_max) = match cfg.carrier {
            CarrierPolicy::Uniform { min_hz, max_hz } => (min_hz, max_hz),
            CarrierPolicy::Fixed { hz } => (hz, hz),
        };
        for (raw_key, value) in &table {
            let key = canonical(raw_key);
            match key {
                "num_users" => cfg.num_users = as_usize(raw_key, value)?,
                "num_uavs" => cfg.num_uavs = as_usize(raw_key, value)?,
                "frames" => cfg.frames = as_u64(raw_key, value)?,
                "seed" => cfg.seed = as_u64(raw_key, value)?,
                "area_length" => cfg.area_length = as_f64(raw_key, value)?,
                "area_width" => cfg.area_width = as_f64(raw_key, value)?,
                "uav_height" => cfg.uav_height = as_f64(raw_key, value)?,
                "uav_speed_min" => cfg.uav_speed_min = as_f64(raw_key, value)?,
                "uav_speed_max" => cfg.uav_speed_max = as_f64(raw_key, value)?,
                "user_speed_min" => cfg.user_speed_min = as_f64(raw_key, value)?,
                "user_speed_max" => cfg.user_speed_max = as_f64(raw_key, value)?,
                "task_size_min_bytes" => cfg.task_size_min_bytes = as_f64(raw_key, value)?,
                "task_size_max_bytes" => cfg.task_size_max_bytes = as_f64(raw_key, value)?,
                "cycles_per_bit" => cfg.cycles_per_bit = as_f64(raw_key, value)?,
                "carrier_freq" => carrier_fixed = Some(as_f64(raw_key, value)?),
                "carrier_freq_min" => carrier_min = as_f64(raw_key, value)?,
                "carrier_freq_max" => carrier_max = as_f64(raw_key, value)?,
                "light_speed" => cfg.light_speed = as_f64(raw_key, value)?,
                "absorption" => cfg.absorption = as_f64(raw_key, value)?,
                "total_bandwidth" => cfg.total_bandwidth = as_f64(raw_key, value)?,
                "tx_power" => cfg.tx_power = as_f64(raw_key, value)?,
                "noise_power" => cfg.noise_power = as_f64(raw_key, value)?,
                "ued_compute_power" => cfg.ued_compute_power = as_f64(raw_key, value)?,
                "ued_tx_power" => cfg.ued_tx_power = as_f64(raw_key, value)?,
                "uav_compute_power" => cfg.uav_compute_power = as_f64(raw_key, value)?,
                "irs_kx" => cfg.irs_kx = as_usize(raw_key, value)?,
                "irs_kz" => cfg.irs_kz = as_usize(raw_key, value)?,
                "irs_first_x" => cfg.irs_first_x = as_f64(raw_key, value)?,
                "irs_first_z" => cfg.irs_first_z = as_f64(raw_key, value)?,
                "irs_gap_x" => cfg.irs_gap_x = as_f64(raw_key, value)?,
                "irs_gap_z" => cfg.irs_gap_z = as_f64(raw_key, value)?,
                "overdue_penalty" => cfg.overdue_penalty = as_f64(raw_key, value)?,
                "oppo_candidates" => cfg.oppo_candidates = as_usize(raw_key, value)?,
                "woa_whales" => cfg.woa_whales = as_usize(raw_key, value)?,
                "woa_rounds" => cfg.woa_rounds = as_usize(raw_key, value)?,
                "woa_spiral" => cfg.woa_spiral = as_f64(raw_key, value)?,
                "batch_size" => cfg.batch_size = as_usize(raw_key, value)?,
                "buffer_factor" => cfg.buffer_factor = as_f64(raw_key, value)?,
                "training_interval" => cfg.training_interval = as_u64(raw_key, value)?,
                "learning_rate" => cfg.learning_rate = as_f64(raw_key, value)?,
                "dropout_rate" => cfg.dropout_rate = as_f64(raw_key, value)?,
                "hidden_layers" => cfg.hidden_layers = as_usize(raw_key, value)?,
                "hidden_width" => cfg.hidden_width = as_usize(raw_key, value)?,
                "window" => cfg.window = as_usize(raw_key, value)?,
                "opt_random_samples" => cfg.opt_random_samples = as_usize(raw_key, value)?,
                "brute_force_cap" => cfg.brute_force_cap = as_u64(raw_key, value)?,
                "disable_oppo" => cfg.disable_oppo = as_bool(raw_key, value)?,
                "disable_initial_reference" => {
                    cfg.disable_initial_reference = as_bool(raw_key, value)?
                }
                "resample_positions_per_frame" => {
                    cfg.resample_positions_per_frame = as_bool(raw_key, value)?
                }
                _ => return Err(Error::config(raw_key, "unknown key")),
            }
        }
        cfg.carrier = match carrier_fixed {
            Some(hz) => CarrierPolicy::Fixed { hz },
            None => CarrierPolicy::Uniform {
                min_hz: carrier_min,
                max_hz: carrier_max,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Renders the config back into the flat key/value format.
    pub fn to_flat_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        put("num_users", self.num_users.to_string());
        put("num_uavs", self.num_uavs.to_string());
        put("frames", self.frames.to_string());
        put("seed", self.seed.to_string());
        put("area_length", fmt_f(self.area_length));
        put("area_width", fmt_f(self.area_width));
        put("uav_height", fmt_f(self.uav_height));
        put("uav_speed_min", fmt_f(self.uav_speed_min));
        put("uav_speed_max", fmt_f(self.uav_speed_max));
        put("user_speed_min", fmt_f(self.user_speed_min));
        put("user_speed_max", fmt_f(self.user_speed_max));
        put("task_size_min_bytes", fmt_f(self.task_size_min_bytes));
        put("task_size_max_bytes", fmt_f(self.task_size_max_bytes));
        put("cycles_per_bit", fmt_f(self.cycles_per_bit));
        match self.carrier {
            CarrierPolicy::Fixed { hz } => put("carrier_freq", fmt_f(hz)),
            CarrierPolicy::Uniform { min_hz, max_hz } => {
                put("carrier_freq_min", fmt_f(min_hz));
                put("carrier_freq_max", fmt_f(max_hz));
            }
        }
        put("light_speed", fmt_f(self.light_speed));
        put("absorption", fmt_f(self.absorption));
        put("total_bandwidth", fmt_f(self.total_bandwidth));
        put("tx_power", fmt_f(self.tx_power));
        put("noise_power", fmt_f(self.noise_power));
        put("ued_compute_power", fmt_f(self.ued_compute_power));
        put("ued_tx_power", fmt_f(self.ued_tx_power));
        put("uav_compute_power", fmt_f(self.uav_compute_power));
        put("irs_kx", self.irs_kx.to_string());
        put("irs_kz", self.irs_kz.to_string());
        put("irs_first_x", fmt_f(self.irs_first_x));
        put("irs_first_z", fmt_f(self.irs_first_z));
        put("irs_gap_x", fmt_f(self.irs_gap_x));
        put("irs_gap_z", fmt_f(self.irs_gap_z));
        put("overdue_penalty", fmt_f(self.overdue_penalty));
        put("oppo_candidates", self.oppo_candidates.to_string());
        put("woa_whales", self.woa_whales.to_string());
        put("woa_rounds", self.woa_rounds.to_string());
        put("woa_spiral", fmt_f(self.woa_spiral));
        put("batch_size", self.batch_size.to_string());
        put("buffer_factor", fmt_f(self.buffer_factor));
        put("training_interval", self.training_interval.to_string());
        put("learning_rate", fmt_f(self.learning_rate));
        put("dropout_rate", fmt_f(self.dropout_rate));
        put("hidden_layers", self.hidden_layers.to_string());
        put("hidden_width", self.hidden_width.to_string());
        put("window", self.window.to_string());
        put("opt_random_samples", self.opt_random_samples.to_string());
        put("brute_force_cap", self.brute_force_cap.to_string());
        put("disable_oppo", self.disable_oppo.to_string());
        put(
            "disable_initial_reference",
            self.disable_initial_reference.to_string(),
        );
        put(
            "resample_positions_per_frame",
            self.resample_positions_per_frame.to_string(),
        );
        out
    }

    pub fn buffer_capacity(&self) -> usize {
        (self.buffer_factor * self.batch_size as f64).round() as usize
    }

    /// Number of offloading options per user, `M + 1`.
    pub fn options(&self) -> usize {
        self.num_uavs + 1
    }

    pub fn training_enabled(&self) -> bool {
        self.training_interval >= 1 && self.training_interval <= self.frames
    }

    /// Hex SHA-256 over the flat rendering; stamped into checkpoints.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_flat_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, v: f64| -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(
                    key,
                    format!("must be finite and > 0, got {v}"),
                ))
            }
        };
        let range = |key_lo: &str, lo: f64, hi: f64| -> Result<()> {
            positive(key_lo, lo)?;
            if hi >= lo && hi.is_finite() {
                Ok(())
            } else {
                Err(Error::config(key_lo, format!("empty range [{lo}, {hi}]")))
            }
        };
        if self.num_users == 0 {
            return Err(Error::config("num_users", "must be >= 1"));
        }
        positive("area_length", self.area_length)?;
        positive("area_width", self.area_width)?;
        positive("uav_height", self.uav_height)?;
        range("uav_speed_min", self.uav_speed_min, self.uav_speed_max)?;
        range("user_speed_min", self.user_speed_min, self.user_speed_max)?;
        range(
            "task_size_min_bytes",
            self.task_size_min_bytes,
            self.task_size_max_bytes,
        )?;
        positive("cycles_per_bit", self.cycles_per_bit)?;
        match self.carrier {
            CarrierPolicy::Fixed { hz } => positive("carrier_freq", hz)?,
            CarrierPolicy::Uniform { min_hz, max_hz } => range("carrier_freq_min", min_hz, max_hz)?,
        }
        positive("light_speed", self.light_speed)?;
        if !(self.absorption.is_finite() && self.absorption >= 0.0) {
            return Err(Error::config("absorption", "must be finite and >= 0"));
        }
        positive("total_bandwidth", self.total_bandwidth)?;
        positive("tx_power", self.tx_power)?;
        positive("noise_power", self.noise_power)?;
        positive("ued_compute_power", self.ued_compute_power)?;
        positive("ued_tx_power", self.ued_tx_power)?;
        positive("uav_compute_power", self.uav_compute_power)?;
        if self.irs_kx == 0 {
            return Err(Error::config("irs_kx", "must be >= 1"));
        }
        if self.irs_kz == 0 {
            return Err(Error::config("irs_kz", "must be >= 1"));
        }
        positive("irs_gap_x", self.irs_gap_x)?;
        positive("irs_gap_z", self.irs_gap_z)?;
        if !(self.overdue_penalty.is_finite() && self.overdue_penalty >= 0.0) {
            return Err(Error::config("overdue_penalty", "must be finite and >= 0"));
        }
        let max_h = self.num_users * self.options();
        if self.oppo_candidates == 0 || self.oppo_candidates > max_h {
            return Err(Error::config(
                "oppo_candidates",
                format!(
                    "H = {} must satisfy 1 <= H <= U*(M+1) = {max_h}",
                    self.oppo_candidates
                ),
            ));
        }
        if self.woa_whales == 0 {
            return Err(Error::config("woa_whales", "must be >= 1"));
        }
        if self.woa_rounds == 0 {
            return Err(Error::config("woa_rounds", "must be >= 1"));
        }
        if !self.woa_spiral.is_finite() {
            return Err(Error::config("woa_spiral", "must be finite"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be >= 1"));
        }
        if !(self.buffer_factor.is_finite() && self.buffer_factor > 0.0) {
            return Err(Error::config("buffer_factor", "must be finite and > 0"));
        }
        if self.training_enabled() && self.buffer_capacity() < self.batch_size {
            return Err(Error::config(
                "buffer_factor",
                format!(
                    "buffer capacity {} is below batch size {}",
                    self.buffer_capacity(),
                    self.batch_size
                ),
            ));
        }
        positive("learning_rate", self.learning_rate)?;
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::config("dropout_rate", "must lie in [0, 1)"));
        }
        if self.hidden_layers == 0 {
            return Err(Error::config("hidden_layers", "must be >= 1"));
        }
        if self.hidden_width == 0 {
            return Err(Error::config("hidden_width", "must be >= 1"));
        }
        if self.window == 0 {
            return Err(Error::config("window", "must be >= 1"));
        }
        if self.opt_random_samples == 0 {
            return Err(Error::config("opt_random_samples", "must be >= 1"));
        }
        Ok(())
    }
}

fn fmt_f(v: f64) -> String {
    // `{:?}` keeps a decimal point or exponent so the value re-parses as a float.
    format!("{v:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_takes_training_defaults() {
        let cfg = ExperimentConfig::parse("U = 10\nM = 3\nseed = 1\n").unwrap();
        assert_eq!(cfg.num_users, 10);
        assert_eq!(cfg.num_uavs, 3);
        assert_eq!(cfg.seed, 1);
        assert_eq!(cfg.oppo_candidates, 20);
        assert_eq!(cfg.woa_whales, 3);
        assert_eq!(cfg.woa_rounds, 5);
        assert_eq!(cfg.training_interval, 10);
        assert_eq!(cfg.learning_rate, 0.001);
        assert_eq!(cfg.batch_size, 256);
        assert_eq!(cfg.dropout_rate, 0.1);
        assert_eq!(cfg.overdue_penalty, 100.0);
        assert_eq!(cfg.buffer_capacity(), 384);
    }

    #[test]
    fn zero_candidates_rejected() {
        let err = ExperimentConfig::parse("H = 0").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "oppo_candidates"));
    }

    #[test]
    fn too_many_candidates_rejected() {
        let err = ExperimentConfig::parse("U = 20\nM = 3\nH = 90").unwrap_err();
        assert!(err.to_string().contains("oppo_candidates"));
        assert!(err.to_string().contains("80"));
    }

    #[test]
    fn unparseable_value_names_key() {
        let err = ExperimentConfig::parse("num_users = \"ten\"").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "num_users"));
        let err = ExperimentConfig::parse("num_users = = 3").unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
    }

    #[test]
    fn unknown_key_rejected() {
        let err = ExperimentConfig::parse("num_user = 3").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "num_user"));
    }

    #[test]
    fn small_buffer_allowed_only_without_training() {
        assert!(ExperimentConfig::parse("buffer_factor = 0.5").is_err());
        let cfg = ExperimentConfig::parse("buffer_factor = 0.5\nframes = 5\nlambda = 10").unwrap();
        assert!(!cfg.training_enabled());
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = ExperimentConfig::load("/definitely/not/here.toml").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn flat_text_round_trips() {
        let mut cfg = ExperimentConfig::default();
        cfg.num_users = 4;
        cfg.oppo_candidates = 7;
        cfg.carrier = CarrierPolicy::Fixed { hz: 3e11 };
        cfg.disable_oppo = true;
        let back = ExperimentConfig::parse(&cfg.to_flat_text()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }
}
