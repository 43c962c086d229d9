//! Run manifests: the fully resolved configuration plus content digests of
//! every input file, written before training starts so a run can be
//! reproduced (and verified bit-for-bit) later.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::learner::TrainConfig;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub version: u32,
    pub config: TrainConfig,
    pub inputs: Vec<InputDigest>,
}

pub const MANIFEST_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    /// Build a manifest from the resolved config and the input files it
    /// depends on, digesting each file's bytes.
    pub fn new(config: TrainConfig, inputs: &[&Path]) -> io::Result<Self> {
        let mut digests = Vec::with_capacity(inputs.len());
        for path in inputs {
            let bytes = fs::read(path)?;
            digests.push(InputDigest {
                path: path.display().to_string(),
                sha256: sha256_hex(&bytes),
            });
        }
        Ok(RunManifest { version: MANIFEST_VERSION, config, inputs: digests })
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, json)
    }

    pub fn read(path: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}
