use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{TrainConfig, TrainError};
use crate::artifact::{self, ArtifactError};
use crate::latent::LatentBank;
use crate::neural::{Architecture, DecoderParams, LipschitzLayer, LossBreakdown};

pub const CHECKPOINT_FORMAT: &str = "shapeopt-checkpoint";
pub const CHECKPOINT_VERSION: &str = "1";

/// One decoder layer with its weight matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerRecord {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub k: f64,
}

/// Latent codes stored as a `len(ids) x dim` row-major block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatentRecord {
    pub dim: usize,
    pub ids: Vec<String>,
    pub codes: Vec<f64>,
}

/// Complete training state as written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: String,
    pub config: TrainConfig,
    pub architecture: Architecture,
    pub output_scale: f64,
    pub layers: Vec<LayerRecord>,
    pub latents: LatentRecord,
    pub epoch: usize,
    pub loss_history: Vec<LossBreakdown>,
}

impl Checkpoint {
    pub fn capture(
        params: &DecoderParams,
        bank: &LatentBank,
        config: &TrainConfig,
        epoch: usize,
        loss_history: &[LossBreakdown],
    ) -> Self {
        let layers = params
            .layers
            .iter()
            .map(|l| LayerRecord {
                rows: l.outputs(),
                cols: l.inputs(),
                weights: l.weights.iter().copied().collect(),
                bias: l.bias.to_vec(),
                k: l.k,
            })
            .collect();
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION.into(),
            config: config.clone(),
            architecture: params.architecture(),
            output_scale: params.output_scale,
            layers,
            latents: LatentRecord {
                dim: bank.dim(),
                ids: bank.ids().to_vec(),
                codes: bank.codes().iter().flatten().copied().collect(),
            },
            epoch,
            loss_history: loss_history.to_vec(),
        }
    }

    pub fn decoder(&self) -> Result<DecoderParams, TrainError> {
        let mut layers = Vec::with_capacity(self.layers.len());
        for (i, r) in self.layers.iter().enumerate() {
            let weights = Array2::from_shape_vec((r.rows, r.cols), r.weights.clone())
                .map_err(|e| TrainError::Config(format!("layer {i}: {e}")))?;
            layers.push(LipschitzLayer {
                weights,
                bias: Array1::from(r.bias.clone()),
                k: r.k,
            });
        }
        let params = DecoderParams::from_layers(
            self.architecture.encoding,
            self.architecture.latent_dim,
            self.output_scale,
            layers,
        )?;
        if params.architecture() != self.architecture {
            return Err(TrainError::Config("layer shapes disagree with the recorded architecture".into()));
        }
        Ok(params)
    }

    pub fn latent_bank(&self) -> Result<LatentBank, TrainError> {
        let LatentRecord { dim, ids, codes } = &self.latents;
        if *dim == 0 || codes.len() != ids.len() * dim {
            return Err(TrainError::Config(format!(
                "{} latent values for {} codes of dimension {dim}",
                codes.len(),
                ids.len()
            )));
        }
        let mut bank = LatentBank::new(*dim);
        for (id, code) in ids.iter().zip(codes.chunks(*dim)) {
            bank.insert(id.clone(), code.to_vec())
                .map_err(|e| TrainError::Config(e.to_string()))?;
        }
        Ok(bank)
    }

    pub fn save(&self, path: &Path) -> Result<(), ArtifactError> {
        artifact::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self, ArtifactError> {
        artifact::read_versioned(path, CHECKPOINT_FORMAT, CHECKPOINT_VERSION)
    }
}

pub fn save_checkpoint(checkpoint: &Checkpoint, path: &Path) -> Result<(), ArtifactError> {
    checkpoint.save(path)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, ArtifactError> {
    Checkpoint::load(path)
}
