// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! Model checkpoints: a JSON document holding the model kind, its
//! configuration and the flat parameter vector.
//!
//! ```json
//! {"format": "sgmatch-checkpoint", "version": 1, "kind": "matcher",
//!  "config": {...}, "params": [0.12, -0.5, ...]}
//! ```
//!
//! The fingerprint is the hex SHA-256 of the kind, the compact JSON config and
//! the little-endian bytes of every parameter.

use std::fs;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "sgmatch-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Matcher,
    Aligner,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub kind: ModelKind,
    pub config: serde_json::Value,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn new<C: Serialize>(kind: ModelKind, config: &C, params: Vec<f64>) -> Result<Self> {
        let config =
            serde_json::to_value(config).map_err(|e| Error::format("checkpoint config", e))?;
        Ok(Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            kind,
            config,
            params,
        })
    }

    pub fn config_as<C: DeserializeOwned>(&self) -> Result<C> {
        serde_json::from_value(self.config.clone())
            .map_err(|e| Error::format("checkpoint config", e))
    }

    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(
            serde_json::to_string(&self.kind)
                .unwrap_or_default()
                .as_bytes(),
        );
        hasher.update(self.config.to_string().as_bytes());
        for p in &self.params {
            hasher.update(p.to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint =
            serde_json::from_str(text).map_err(|e| Error::format("checkpoint", e))?;
        if ckpt.format != CHECKPOINT_FORMAT || ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::format(
                "checkpoint",
                format!("unsupported format {} v{}", ckpt.format, ckpt.version),
            ));
        }
        if ckpt.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Numerical(
                "checkpoint holds non-finite parameters".into(),
            ));
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|_| Error::ModelMissing(path.display().to_string()))?;
        Self::from_json(&text)
    }
}
