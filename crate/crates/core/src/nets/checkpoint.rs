use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::network::Network;
use super::optim::Optimizer;

pub const NETWORK_MAGIC: &str = "MODEGAN-NETWORK";
pub const NETWORK_VERSION: u32 = 1;

/// Self-describing record of one network, its optimizer and the step counter.
///
/// Serialized as JSON; floats use shortest round-trip formatting so save/load is
/// bit-exact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct NetworkCheckpoint<T> {
    pub magic: String,
    pub version: u32,
    pub scalar: String,
    pub network: Network<T>,
    pub optimizer: Optimizer<T>,
    pub step: u64,
}

impl<T: Scalar> NetworkCheckpoint<T> {
    pub fn new(network: Network<T>, optimizer: Optimizer<T>, step: u64) -> Self {
        Self {
            magic: NETWORK_MAGIC.to_string(),
            version: NETWORK_VERSION,
            scalar: T::NAME.to_string(),
            network,
            optimizer,
            step,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Self = serde_json::from_str(text)?;
        check_header(&ckpt.magic, NETWORK_MAGIC, ckpt.version, NETWORK_VERSION)?;
        if ckpt.scalar != T::NAME {
            return Err(Error::Checkpoint(format!(
                "stored as {}, loading as {}",
                ckpt.scalar,
                T::NAME
            )));
        }
        if !ckpt.network.params.matches(&ckpt.network.spec) {
            return Err(Error::Checkpoint("parameters do not match the stored spec".into()));
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

pub(crate) fn check_header(magic: &str, want: &str, version: u32, max: u32) -> Result<()> {
    if magic != want {
        return Err(Error::Checkpoint(format!("bad magic `{magic}`, expected `{want}`")));
    }
    if version == 0 || version > max {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    Ok(())
}
