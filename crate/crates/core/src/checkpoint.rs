//! Parameter checkpoints tied to an architecture digest.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: u32 = 1;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: u32,
    pub digest: String,
    pub epoch: usize,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn new(digest: String, epoch: usize, params: Vec<f64>) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT,
            digest,
            epoch,
            params,
        }
    }

    /// JSON with every parameter written to 17 significant digits.
    pub fn to_json(&self) -> String {
        let params: Vec<String> = self.params.iter().map(|p| format!("{p:.16e}")).collect();
        format!(
            "{{\n  \"format\": {},\n  \"digest\": {},\n  \"epoch\": {},\n  \"params\": [{}]\n}}\n",
            self.format,
            serde_json::Value::String(self.digest.clone()),
            self.epoch,
            params.join(", ")
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if c.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unsupported format {}", c.format)));
        }
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// The parameters, provided the checkpoint was written for `digest` with `n_params` slots.
    pub fn params_for(&self, digest: &str, n_params: usize) -> Result<&[f64]> {
        if self.digest != digest {
            return Err(Error::Checkpoint(format!(
                "architecture digest mismatch: checkpoint has {}, config has {digest}",
                self.digest
            )));
        }
        if self.params.len() != n_params {
            return Err(Error::Checkpoint(format!(
                "checkpoint holds {} parameters, model needs {n_params}",
                self.params.len()
            )));
        }
        Ok(&self.params)
    }
}
