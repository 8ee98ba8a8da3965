//! JSON checkpoints of the trainable tensors. Frozen parts are rebuilt from
//! the config seed, so a checkpoint is only meaningful with its config.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::prompting::PromptMode;

use super::model::Model;

pub const FORMAT: &str = "kgprompt-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub mode: PromptMode,
    pub lambda: f64,
    pub gnn_layers: usize,
    pub tensors: BTreeMap<String, Tensor>,
}

impl Checkpoint {
    pub fn from_model(model: &Model) -> Self {
        let mut tensors = BTreeMap::new();
        tensors.insert("gnn.node_embed".to_string(), model.gnn.node_embed.clone());
        tensors.insert("gnn.rel_embed".to_string(), model.gnn.rel_embed.clone());
        tensors.insert("gnn.mlp.weight".to_string(), model.gnn.mlp_weight.clone());
        tensors.insert("gnn.mlp.bias".to_string(), model.gnn.mlp_bias.clone());
        tensors.insert("prompt.mu".to_string(), model.prompt.mu.clone());
        if let Some(psi) = &model.prompt.psi {
            tensors.insert("prompt.psi".to_string(), psi.clone());
        }
        Self {
            format: FORMAT.to_string(),
            version: VERSION,
            mode: model.prompt.mode,
            lambda: model.prompt.lambda,
            gnn_layers: model.gnn.layers,
            tensors,
        }
    }

    /// Overwrites the trainable tensors of `model`, checking names and shapes.
    pub fn apply(&self, model: &mut Model) -> Result<()> {
        if self.format != FORMAT || self.version != VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        if self.mode != model.prompt.mode {
            return Err(Error::Checkpoint("prompt mode differs from the config".into()));
        }
        let take = |name: &str, target: &Tensor| -> Result<Tensor> {
            let t = self
                .tensors
                .get(name)
                .ok_or_else(|| Error::Checkpoint(format!("missing tensor {name}")))?;
            if t.shape() != target.shape() || t.data().len() != t.rows() * t.cols() {
                return Err(Error::Checkpoint(format!(
                    "tensor {name} has shape {:?}, model expects {:?}",
                    t.shape(),
                    target.shape()
                )));
            }
            Ok(t.clone())
        };
        let node_embed = take("gnn.node_embed", &model.gnn.node_embed)?;
        let rel_embed = take("gnn.rel_embed", &model.gnn.rel_embed)?;
        let mlp_weight = take("gnn.mlp.weight", &model.gnn.mlp_weight)?;
        let mlp_bias = take("gnn.mlp.bias", &model.gnn.mlp_bias)?;
        let mu = take("prompt.mu", &model.prompt.mu)?;
        let psi = match &model.prompt.psi {
            Some(p) => Some(take("prompt.psi", p)?),
            None => None,
        };
        model.gnn.node_embed = node_embed;
        model.gnn.rel_embed = rel_embed;
        model.gnn.mlp_weight = mlp_weight;
        model.gnn.mlp_bias = mlp_bias;
        model.gnn.layers = self.gnn_layers;
        model.prompt.mu = mu;
        model.prompt.psi = psi;
        model.prompt.lambda = self.lambda;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Checkpoint(e.to_string()))
    }
}
