//! The implicit decoder: sinusoidal coordinate encoding, Lipschitz-bounded
//! fully connected layers, and exact reverse-mode gradients.

mod decoder;
mod encoding;
mod layer;
mod loss;

use thiserror::Error;

pub use decoder::{
    decoder_backward, decoder_forward, Architecture, DecoderParams, GradientBundle, LossBreakdown, LossConfig,
    SampleBatch,
};
pub use encoding::{positional_encoding, EncodingConfig};
pub use layer::{lipschitz_normalize, sigmoid, softplus, softplus_inverse, LipschitzLayer, NormalizedWeights};
pub use loss::{lipschitz_loss, lipschitz_loss_grad, truncated_l1, truncated_l1_grad};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NeuralError {
    #[error("latent has {actual} entries, decoder expects {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("non-finite activation in layer {layer}")]
    NonFinite { layer: usize },
    #[error("non-finite loss or gradient")]
    NonFiniteLoss,
    #[error("empty batch")]
    EmptyBatch,
    #[error("batch references unknown shape {0}")]
    UnknownShape(usize),
    #[error("invalid decoder configuration: {0}")]
    Config(String),
}
