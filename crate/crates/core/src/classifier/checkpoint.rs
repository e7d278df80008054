//! JSON checkpoints: named parameter arrays with shapes, optimizer state,
//! config and seed. Floats are written with round-trip precision, so a
//! save/load cycle is bit-exact.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::network::{ModelParams, PARAM_NAMES};
use crate::error::{Error, Result};
use crate::nn::{Amsgrad, Tensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedArray {
    pub name: String,
    pub shape: [usize; 2],
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub seed: u64,
    pub config: ModelConfig,
    pub params: Vec<NamedArray>,
    pub optimizer: Amsgrad,
}

impl Checkpoint {
    pub fn new(config: &ModelConfig, params: &ModelParams, optimizer: &Amsgrad) -> Self {
        Self {
            seed: config.seed,
            config: config.clone(),
            params: params
                .named()
                .map(|(name, t)| NamedArray {
                    name: name.to_string(),
                    shape: [t.rows(), t.cols()],
                    data: t.data().to_vec(),
                })
                .collect(),
            optimizer: optimizer.clone(),
        }
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        if self.params.len() != PARAM_NAMES.len() {
            return Err(Error::InvalidInput(format!("checkpoint has {} arrays", self.params.len())));
        }
        let tensors = self
            .params
            .iter()
            .zip(PARAM_NAMES)
            .map(|(a, name)| {
                if a.name != name {
                    return Err(Error::InvalidInput(format!("expected array {name}, found {}", a.name)));
                }
                Tensor::from_vec(a.shape[0], a.shape[1], a.data.clone())
            })
            .collect::<Result<_>>()?;
        Ok(ModelParams { tensors })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
