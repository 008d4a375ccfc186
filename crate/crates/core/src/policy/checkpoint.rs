use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::net::PolicyNet;
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

/// Network parameters, optimizer state and the hash of the producing config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config_hash: String,
    /// Frames processed when the checkpoint was taken.
    pub frame: u64,
    pub net: PolicyNet,
}

impl Checkpoint {
    pub fn new(net: PolicyNet, config_hash: String, frame: u64) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            config_hash,
            frame,
            net,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint =
            serde_json::from_str(text).map_err(|e| Error::Schema(format!("checkpoint: {e}")))?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Schema(format!(
                "checkpoint version {} is not supported (expected {CHECKPOINT_VERSION})",
                ck.version
            )));
        }
        ck.net.validate()?;
        Ok(ck)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
