use ndarray::{s, Array1, Array2, ArrayView2, Axis as NdAxis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::loss::{lipschitz_loss, lipschitz_loss_grad, truncated_l1, truncated_l1_grad};
use super::{EncodingConfig, LipschitzLayer, NeuralError, NormalizedWeights};
use crate::geometry::Vec3;

/// Layer layout of the decoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Architecture {
    /// Widths of the hidden layers; one scalar output layer follows.
    pub hidden: Vec<usize>,
    pub encoding: EncodingConfig,
    pub latent_dim: usize,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            hidden: vec![256; 8],
            encoding: EncodingConfig::default(),
            latent_dim: 5,
        }
    }
}

/// Trainable state of the implicit decoder
/// `f(x, z) = scale * tanh(L_n(relu(... relu(L_1([gamma(x), z])))))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderParams {
    pub encoding: EncodingConfig,
    pub latent_dim: usize,
    /// Output range `[-scale, scale]`; matched to the loss clamp.
    pub output_scale: f64,
    pub layers: Vec<LipschitzLayer>,
}

/// Loss weights of the auto-decoder objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub delta: f64,
    pub lipschitz_weight: f64,
}

/// Per-sample training triples; `shape[i]` indexes the latent code used for
/// sample `i`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleBatch {
    pub points: Vec<Vec3>,
    pub targets: Vec<f64>,
    pub shape: Vec<usize>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn push(&mut self, point: Vec3, target: f64, shape: usize) {
        self.points.push(point);
        self.targets.push(target);
        self.shape.push(shape);
    }
}

/// Objective value split into its three terms.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    /// Mean truncated L1 over the batch.
    pub clip: f64,
    /// Squared norms of the referenced codes, divided by the batch size.
    pub latent: f64,
    /// Unweighted product of layer bounds.
    pub lipschitz: f64,
    pub total: f64,
}

/// Gradients of the batch objective, shaped like the parameters plus one
/// vector per latent code.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
    pub k: Vec<f64>,
    pub latents: Vec<Vec<f64>>,
}

impl GradientBundle {
    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
            && self.k.iter().all(|v| v.is_finite())
            && self.latents.iter().flatten().all(|v| v.is_finite())
    }
}

struct ForwardCache {
    /// Input to each layer.
    inputs: Vec<Array2<f64>>,
    /// Pre-activation of each layer.
    pre: Vec<Array2<f64>>,
    norms: Vec<NormalizedWeights>,
    output: Array1<f64>,
}

impl DecoderParams {
    /// Randomly initialized decoder.
    pub fn new(arch: &Architecture, output_scale: f64, rng: &mut impl Rng) -> Result<Self, NeuralError> {
        if arch.latent_dim == 0 {
            return Err(NeuralError::Config("latent_dim must be at least 1".into()));
        }
        if arch.hidden.contains(&0) {
            return Err(NeuralError::Config("hidden layer of width 0".into()));
        }
        let mut widths = vec![arch.encoding.dim() + arch.latent_dim];
        widths.extend(&arch.hidden);
        widths.push(1);
        let layers = widths.windows(2).map(|w| LipschitzLayer::init(w[0], w[1], rng)).collect();
        Self::from_layers(arch.encoding, arch.latent_dim, output_scale, layers)
    }

    pub fn from_layers(
        encoding: EncodingConfig,
        latent_dim: usize,
        output_scale: f64,
        layers: Vec<LipschitzLayer>,
    ) -> Result<Self, NeuralError> {
        if layers.is_empty() {
            return Err(NeuralError::Config("decoder needs at least one layer".into()));
        }
        if !(output_scale > 0.0 && output_scale.is_finite()) {
            return Err(NeuralError::Config(format!("output scale {output_scale}")));
        }
        let mut expected = encoding.dim() + latent_dim;
        for (i, l) in layers.iter().enumerate() {
            if l.inputs() != expected || l.bias.len() != l.outputs() {
                return Err(NeuralError::Config(format!(
                    "layer {i} is {}x{} with {} biases, expected {expected} inputs",
                    l.outputs(),
                    l.inputs(),
                    l.bias.len()
                )));
            }
            expected = l.outputs();
        }
        if expected != 1 {
            return Err(NeuralError::Config(format!("last layer has {expected} outputs")));
        }
        Ok(Self {
            encoding,
            latent_dim,
            output_scale,
            layers,
        })
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            hidden: self.layers[..self.layers.len() - 1].iter().map(|l| l.outputs()).collect(),
            encoding: self.encoding,
            latent_dim: self.latent_dim,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.encoding.dim() + self.latent_dim
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len() + 1).sum()
    }

    /// Product of the per-layer bounds: a Lipschitz constant of the network
    /// with respect to its input in the infinity norm (for `output_scale <= 1`).
    pub fn lipschitz_bound(&self) -> f64 {
        lipschitz_loss(&self.layers)
    }

    fn check_latent(&self, z: &[f64]) -> Result<(), NeuralError> {
        if z.len() != self.latent_dim {
            return Err(NeuralError::DimensionMismatch {
                expected: self.latent_dim,
                actual: z.len(),
            });
        }
        Ok(())
    }

    fn input_row(&self, x: &Vec3, z: &[f64], row: &mut [f64]) {
        let e = self.encoding.dim();
        self.encoding.encode_into(x, &mut row[..e]);
        row[e..].copy_from_slice(z);
    }

    fn forward_cached(&self, inputs: Array2<f64>, keep: bool) -> Result<ForwardCache, NeuralError> {
        let last = self.layers.len() - 1;
        let mut cache = ForwardCache {
            inputs: Vec::new(),
            pre: Vec::new(),
            norms: Vec::new(),
            output: Array1::zeros(0),
        };
        let mut x = inputs;
        for (i, layer) in self.layers.iter().enumerate() {
            let norm = layer.normalize();
            let mut pre = x.dot(&norm.matrix.t());
            pre += &layer.bias;
            if pre.iter().any(|v| !v.is_finite()) {
                return Err(NeuralError::NonFinite { layer: i });
            }
            let next = if i == last {
                pre.mapv(|v| self.output_scale * v.tanh())
            } else {
                pre.mapv(|v| v.max(0.0))
            };
            if keep {
                cache.inputs.push(x);
                cache.pre.push(pre);
                cache.norms.push(norm);
            }
            x = next;
        }
        cache.output = x.column(0).to_owned();
        Ok(cache)
    }

    /// Predicted signed distance at `x` for shape code `z`.
    pub fn forward(&self, x: &Vec3, z: &[f64]) -> Result<f64, NeuralError> {
        Ok(self.forward_batch(std::slice::from_ref(x), z)?[0])
    }

    /// Evaluates many points for one latent code.
    pub fn forward_batch(&self, points: &[Vec3], z: &[f64]) -> Result<Vec<f64>, NeuralError> {
        self.check_latent(z)?;
        let mut inputs = Array2::zeros((points.len(), self.input_dim()));
        for (p, mut row) in points.iter().zip(inputs.rows_mut()) {
            self.input_row(p, z, row.as_slice_mut().expect("standard layout"));
        }
        Ok(self.forward_cached(inputs, false)?.output.to_vec())
    }

    fn batch_inputs(&self, batch: &SampleBatch, codes: &[Vec<f64>]) -> Result<Array2<f64>, NeuralError> {
        if batch.is_empty() {
            return Err(NeuralError::EmptyBatch);
        }
        if batch.targets.len() != batch.len() || batch.shape.len() != batch.len() {
            return Err(NeuralError::Config("batch columns differ in length".into()));
        }
        for z in codes {
            self.check_latent(z)?;
        }
        let mut inputs = Array2::zeros((batch.len(), self.input_dim()));
        for (i, mut row) in inputs.rows_mut().into_iter().enumerate() {
            let z = codes.get(batch.shape[i]).ok_or(NeuralError::UnknownShape(batch.shape[i]))?;
            self.input_row(&batch.points[i], z, row.as_slice_mut().expect("standard layout"));
        }
        Ok(inputs)
    }

    fn breakdown(&self, output: &Array1<f64>, batch: &SampleBatch, codes: &[Vec<f64>], cfg: &LossConfig) -> Result<LossBreakdown, NeuralError> {
        let n = batch.len() as f64;
        let clip = output
            .iter()
            .zip(&batch.targets)
            .map(|(&y, &d)| truncated_l1(y, d, cfg.delta))
            .sum::<f64>()
            / n;
        let latent = present_shapes(batch, codes.len())
            .map(|s| codes[s].iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            / n;
        let lipschitz = lipschitz_loss(&self.layers);
        let total = clip + latent + cfg.lipschitz_weight * lipschitz;
        if !total.is_finite() {
            return Err(NeuralError::NonFiniteLoss);
        }
        Ok(LossBreakdown {
            clip,
            latent,
            lipschitz,
            total,
        })
    }

    /// Batch objective without gradients.
    pub fn batch_loss(&self, batch: &SampleBatch, codes: &[Vec<f64>], cfg: &LossConfig) -> Result<LossBreakdown, NeuralError> {
        let inputs = self.batch_inputs(batch, codes)?;
        let cache = self.forward_cached(inputs, false)?;
        self.breakdown(&cache.output, batch, codes, cfg)
    }

    /// Batch objective `(sum_i clip(f(x_i, z_{s_i}), d_i) + sum_s |z_s|^2) / n
    /// + w * prod_l softplus(k_l)` and its exact gradient, where `s` runs
    /// over the codes the batch references.
    pub fn backward(
        &self,
        batch: &SampleBatch,
        codes: &[Vec<f64>],
        cfg: &LossConfig,
    ) -> Result<(LossBreakdown, GradientBundle), NeuralError> {
        let inputs = self.batch_inputs(batch, codes)?;
        let cache = self.forward_cached(inputs, true)?;
        let loss = self.breakdown(&cache.output, batch, codes, cfg)?;
        let n = batch.len() as f64;
        let last = self.layers.len() - 1;

        // d loss / d pre-activation of the output layer
        let mut dpre = Array2::zeros((batch.len(), 1));
        for i in 0..batch.len() {
            let t = cache.pre[last][[i, 0]].tanh();
            let dy = truncated_l1_grad(cache.output[i], batch.targets[i], cfg.delta) / n;
            dpre[[i, 0]] = dy * self.output_scale * (1.0 - t * t);
        }

        let mut weights = vec![Array2::zeros((0, 0)); self.layers.len()];
        let mut biases = vec![Array1::zeros(0); self.layers.len()];
        let mut k = lipschitz_loss_grad(&self.layers)
            .into_iter()
            .map(|g| g * cfg.lipschitz_weight)
            .collect::<Vec<_>>();
        let mut dinput = Array2::zeros((0, 0));
        for l in (0..=last).rev() {
            let grad_hat = dpre.t().dot(&cache.inputs[l]);
            biases[l] = dpre.sum_axis(NdAxis(0));
            let dx = dpre.dot(&cache.norms[l].matrix);
            let (gw, gk) = self.layers[l].normalization_backward(&cache.norms[l], &grad_hat);
            weights[l] = gw;
            k[l] += gk;
            if l > 0 {
                dpre = relu_backward(dx.view(), cache.pre[l - 1].view());
            } else {
                dinput = dx;
            }
        }

        let e = self.encoding.dim();
        let mut latents: Vec<Vec<f64>> = codes.iter().map(|z| vec![0.0; z.len()]).collect();
        for i in 0..batch.len() {
            let row = dinput.slice(s![i, e..]);
            for (g, d) in latents[batch.shape[i]].iter_mut().zip(row) {
                *g += d;
            }
        }
        for s in present_shapes(batch, codes.len()) {
            for (g, z) in latents[s].iter_mut().zip(&codes[s]) {
                *g += 2.0 * z / n;
            }
        }
        let grads = GradientBundle {
            weights,
            biases,
            k,
            latents,
        };
        if !grads.is_finite() {
            return Err(NeuralError::NonFiniteLoss);
        }
        Ok((loss, grads))
    }
}

/// Codes referenced by at least one sample, ascending.
fn present_shapes(batch: &SampleBatch, count: usize) -> impl Iterator<Item = usize> {
    let mut seen = vec![false; count];
    for &s in &batch.shape {
        seen[s] = true;
    }
    (0..count).filter(move |&s| seen[s])
}

fn relu_backward(dx: ArrayView2<f64>, pre: ArrayView2<f64>) -> Array2<f64> {
    let mut out = dx.to_owned();
    out.zip_mut_with(&pre, |g, &p| {
        if p <= 0.0 {
            *g = 0.0;
        }
    });
    out
}

/// Free-function form of [`DecoderParams::forward`].
pub fn decoder_forward(params: &DecoderParams, x: &Vec3, z: &[f64]) -> Result<f64, NeuralError> {
    params.forward(x, z)
}

/// Free-function form of [`DecoderParams::backward`].
pub fn decoder_backward(
    params: &DecoderParams,
    batch: &SampleBatch,
    codes: &[Vec<f64>],
    cfg: &LossConfig,
) -> Result<(LossBreakdown, GradientBundle), NeuralError> {
    params.backward(batch, codes, cfg)
}
