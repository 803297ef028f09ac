//! Auto-decoder training: decoder weights and one latent code per shape are
//! fitted jointly with Adam against the clamped-L1 objective.

mod adam;
mod checkpoint;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifact::ArtifactError;
use crate::geometry::{marching_cubes, GeometryError, ScalarGrid, SdfSampleSet, TriMesh, Vec3};
use crate::latent::LatentBank;
use crate::neural::{Architecture, DecoderParams, LossBreakdown, LossConfig, NeuralError, SampleBatch};

use adam::AdamSlot;
pub use checkpoint::{
    load_checkpoint, save_checkpoint, Checkpoint, LatentRecord, LayerRecord, CHECKPOINT_FORMAT, CHECKPOINT_VERSION,
};
pub use crate::neural::{truncated_l1, truncated_l1_grad};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training needs at least 2 non-empty shapes: {0}")]
    InsufficientData(String),
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error("loss became non-finite at epoch {epoch}")]
    Diverged { epoch: usize, last_good: Box<Checkpoint> },
}

/// Optimizer and loss settings. `batch_size` counts samples per shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr_weights: f64,
    pub lr_latents: f64,
    /// Clamp band of the loss; also the decoder's output range.
    pub delta: f64,
    /// Weight of the Lipschitz-bound product in the objective.
    pub lipschitz_weight: f64,
    pub latent_init_std: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 8000,
            batch_size: 2048,
            lr_weights: 5e-4,
            lr_latents: 1e-3,
            delta: 0.1,
            lipschitz_weight: 1e-7,
            latent_init_std: 0.01,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |what: &str| Err(TrainError::Config(what.into()));
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return bad("delta must be positive");
        }
        if !(self.lipschitz_weight >= 0.0 && self.lipschitz_weight.is_finite()) {
            return bad("lipschitz_weight must be non-negative");
        }
        if !(self.lr_weights > 0.0 && self.lr_latents > 0.0 && self.lr_weights.is_finite() && self.lr_latents.is_finite()) {
            return bad("learning rates must be positive");
        }
        if !(self.latent_init_std >= 0.0) {
            return bad("latent_init_std must be non-negative");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        Ok(())
    }

    pub fn loss_config(&self) -> LossConfig {
        LossConfig {
            delta: self.delta,
            lipschitz_weight: self.lipschitz_weight,
        }
    }
}

/// Objective for a single shape: mean clamped L1 over `samples`, plus
/// `|z|^2`, plus the weighted Lipschitz product.
pub fn total_loss(
    params: &DecoderParams,
    z: &[f64],
    samples: &SdfSampleSet,
    cfg: &TrainConfig,
) -> Result<LossBreakdown, TrainError> {
    let batch = SampleBatch {
        points: samples.points.clone(),
        targets: samples.distances.clone(),
        shape: vec![0; samples.len()],
    };
    Ok(params.batch_loss(&batch, &[z.to_vec()], &cfg.loss_config())?)
}

/// Decoder, codes, and per-epoch losses after training.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: DecoderParams,
    pub bank: LatentBank,
    pub history: Vec<LossBreakdown>,
}

impl TrainOutcome {
    pub fn checkpoint(&self, cfg: &TrainConfig) -> Checkpoint {
        Checkpoint::capture(&self.params, &self.bank, cfg, self.history.len(), &self.history)
    }
}

struct LayerSlots {
    weights: AdamSlot,
    bias: AdamSlot,
    k: AdamSlot,
}

/// Step-by-step trainer. One epoch is one optimizer step on a batch holding
/// `batch_size` samples of every shape.
pub struct Trainer {
    cfg: TrainConfig,
    data: Vec<SdfSampleSet>,
    params: DecoderParams,
    bank: LatentBank,
    rng: ChaCha8Rng,
    layer_slots: Vec<LayerSlots>,
    latent_slots: Vec<AdamSlot>,
    history: Vec<LossBreakdown>,
    last_good: Option<(DecoderParams, LatentBank)>,
}

impl Trainer {
    pub fn new(dataset: Vec<SdfSampleSet>, arch: &Architecture, cfg: TrainConfig) -> Result<Self, TrainError> {
        cfg.validate()?;
        if dataset.len() < 2 {
            return Err(TrainError::InsufficientData(format!("got {} shapes", dataset.len())));
        }
        if let Some(empty) = dataset.iter().find(|s| s.is_empty()) {
            return Err(TrainError::InsufficientData(format!("shape {:?} has no samples", empty.shape_id)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let params = DecoderParams::new(arch, cfg.delta, &mut rng)?;
        let mut bank = LatentBank::new(arch.latent_dim);
        let init = Normal::new(0.0, cfg.latent_init_std).map_err(|e| TrainError::Config(e.to_string()))?;
        for set in &dataset {
            let code = (0..arch.latent_dim).map(|_| init.sample(&mut rng)).collect();
            bank.insert(set.shape_id.clone(), code)
                .map_err(|e| TrainError::Config(e.to_string()))?;
        }
        let layer_slots = params
            .layers
            .iter()
            .map(|l| LayerSlots {
                weights: AdamSlot::new(l.weights.len()),
                bias: AdamSlot::new(l.bias.len()),
                k: AdamSlot::new(1),
            })
            .collect();
        let latent_slots = (0..dataset.len()).map(|_| AdamSlot::new(arch.latent_dim)).collect();
        Ok(Self {
            cfg,
            data: dataset,
            params,
            bank,
            rng,
            layer_slots,
            latent_slots,
            history: Vec::new(),
            last_good: None,
        })
    }

    pub fn params(&self) -> &DecoderParams {
        &self.params
    }

    pub fn bank(&self) -> &LatentBank {
        &self.bank
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn epoch(&self) -> usize {
        self.history.len()
    }

    pub fn history(&self) -> &[LossBreakdown] {
        &self.history
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::capture(&self.params, &self.bank, &self.cfg, self.epoch(), &self.history)
    }

    /// Largest amount by which a normalized weight row exceeds its layer's
    /// bound; never positive beyond rounding.
    pub fn max_row_excess(&self) -> f64 {
        self.params
            .layers
            .iter()
            .map(|l| {
                let bound = l.bound();
                l.normalize()
                    .matrix
                    .rows()
                    .into_iter()
                    .map(|r| r.iter().map(|v| v.abs()).sum::<f64>() - bound)
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn draw_batch(&mut self) -> SampleBatch {
        let per_shape = self.cfg.batch_size;
        let mut batch = SampleBatch::default();
        for (s, set) in self.data.iter().enumerate() {
            for _ in 0..per_shape {
                let i = self.rng.random_range(0..set.len());
                batch.push(set.points[i], set.distances[i], s);
            }
        }
        batch
    }

    fn diverged(&self) -> TrainError {
        let (params, bank) = match &self.last_good {
            Some((p, b)) => (p, b),
            None => (&self.params, &self.bank),
        };
        let done = self.history.len().saturating_sub(1);
        TrainError::Diverged {
            epoch: self.epoch(),
            last_good: Box::new(Checkpoint::capture(params, bank, &self.cfg, done, &self.history[..done])),
        }
    }

    /// Runs one epoch and returns its loss, measured before the update.
    pub fn step(&mut self) -> Result<LossBreakdown, TrainError> {
        let batch = self.draw_batch();
        let (loss, grads) = match self.params.backward(&batch, self.bank.codes(), &self.cfg.loss_config()) {
            Ok(r) => r,
            Err(NeuralError::NonFinite { .. } | NeuralError::NonFiniteLoss) => return Err(self.diverged()),
            Err(e) => return Err(e.into()),
        };
        self.last_good = Some((self.params.clone(), self.bank.clone()));
        let t = self.history.len() as u64 + 1;
        let lr = self.cfg.lr_weights;
        for (l, layer) in self.params.layers.iter_mut().enumerate() {
            let slots = &mut self.layer_slots[l];
            let gw = grads.weights[l].as_standard_layout();
            slots.weights.update(
                layer.weights.as_slice_mut().expect("standard layout"),
                gw.as_slice().expect("standard layout"),
                lr,
                t,
            );
            slots.bias.update(
                layer.bias.as_slice_mut().expect("contiguous"),
                grads.biases[l].as_slice().expect("contiguous"),
                lr,
                t,
            );
            slots.k.update(std::slice::from_mut(&mut layer.k), &[grads.k[l]], lr, t);
        }
        for (s, code) in self.bank.codes_mut().iter_mut().enumerate() {
            self.latent_slots[s].update(code, &grads.latents[s], self.cfg.lr_latents, t);
        }
        self.history.push(loss);
        Ok(loss)
    }

    /// Trains for the configured number of epochs.
    pub fn run(mut self) -> Result<TrainOutcome, TrainError> {
        while self.epoch() < self.cfg.epochs {
            self.step()?;
        }
        Ok(self.finish())
    }

    pub fn finish(self) -> TrainOutcome {
        TrainOutcome {
            params: self.params,
            bank: self.bank,
            history: self.history,
        }
    }
}

/// Fits a decoder and one latent code per sample set.
pub fn train(dataset: Vec<SdfSampleSet>, arch: &Architecture, cfg: TrainConfig) -> Result<TrainOutcome, TrainError> {
    Trainer::new(dataset, arch, cfg)?.run()
}

const GRID_CHUNK: usize = 4096;

/// Decoder values on the `[-1, 1]^3` lattice. Nodes on the outer faces are
/// pinned to the positive output limit so the zero level set is closed.
pub fn sample_grid(params: &DecoderParams, z: &[f64], resolution: usize) -> Result<ScalarGrid, TrainError> {
    if resolution < 2 {
        return Err(TrainError::Config(format!("grid resolution {resolution} < 2")));
    }
    let n = resolution;
    let h = 2.0 / (n - 1) as f64;
    let mut values = Vec::with_capacity(n * n * n);
    let mut chunk = Vec::with_capacity(GRID_CHUNK);
    let flush = |chunk: &mut Vec<Vec3>, values: &mut Vec<f64>| -> Result<(), TrainError> {
        values.extend(params.forward_batch(chunk, z)?);
        chunk.clear();
        Ok(())
    };
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                chunk.push(Vec3::new(-1.0 + i as f64 * h, -1.0 + j as f64 * h, -1.0 + k as f64 * h));
                if chunk.len() == GRID_CHUNK {
                    flush(&mut chunk, &mut values)?;
                }
            }
        }
    }
    flush(&mut chunk, &mut values)?;
    let on_face = |i: usize| i == 0 || i == n - 1;
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                if on_face(i) || on_face(j) || on_face(k) {
                    values[i + n * (j + n * k)] = params.output_scale;
                }
            }
        }
    }
    Ok(ScalarGrid::unit_domain(n, values)?)
}

/// Extracts the zero level set of the decoder for code `z`.
pub fn reconstruct(params: &DecoderParams, z: &[f64], resolution: usize) -> Result<TriMesh, TrainError> {
    let grid = sample_grid(params, z, resolution)?;
    Ok(marching_cubes(&grid, 0.0)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{shapes, validate_watertight, SdfSampling};
    use crate::neural::EncodingConfig;

    fn tiny_arch() -> Architecture {
        Architecture {
            hidden: vec![16, 16],
            encoding: EncodingConfig {
                levels: 2,
                include_input: true,
            },
            latent_dim: 1,
        }
    }

    fn dataset() -> Vec<SdfSampleSet> {
        let sphere = shapes::icosphere(0.6, 3);
        let cube = shapes::box_mesh(Vec3::repeat(0.45));
        vec![
            crate::geometry::sample_sdf(&sphere, "sphere", 400, &SdfSampling::default(), 1).unwrap(),
            crate::geometry::sample_sdf(&cube, "box", 400, &SdfSampling::default(), 2).unwrap(),
        ]
    }

    fn cfg(epochs: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            batch_size: 64,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn total_loss_components() {
        let mut params = DecoderParams::new(&tiny_arch(), 0.1, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        for l in &mut params.layers {
            l.weights.fill(0.0);
            l.bias.fill(0.0);
        }
        let zero = SdfSampleSet::new("z", vec![Vec3::zeros(); 4], vec![0.0; 4]).unwrap();
        let c = TrainConfig::default();
        let only_lip = total_loss(&params, &[0.0], &zero, &c).unwrap();
        assert_eq!(only_lip.clip, 0.0);
        assert_eq!(only_lip.latent, 0.0);
        assert!((only_lip.total - c.lipschitz_weight * params.lipschitz_bound()).abs() < 1e-20);

        let unit = total_loss(&params, &[1.0], &zero, &c).unwrap();
        assert_eq!(unit.latent, 0.25);

        let ablate = TrainConfig {
            lipschitz_weight: 0.0,
            ..c
        };
        let set = SdfSampleSet::new("s", vec![Vec3::new(0.1, 0.2, 0.3); 3], vec![0.05, -0.02, 0.3]).unwrap();
        let l = total_loss(&params, &[0.5], &set, &ablate).unwrap();
        assert_eq!(l.total, l.clip + l.latent);
    }

    #[test]
    fn rejects_bad_inputs() {
        let one = dataset().into_iter().take(1).collect();
        assert!(matches!(Trainer::new(one, &tiny_arch(), cfg(1)), Err(TrainError::InsufficientData(_))));
        assert!(matches!(Trainer::new(vec![], &tiny_arch(), cfg(1)), Err(TrainError::InsufficientData(_))));
        let bad = TrainConfig { delta: 0.0, ..cfg(1) };
        assert!(matches!(Trainer::new(dataset(), &tiny_arch(), bad), Err(TrainError::Config(_))));
    }

    #[test]
    fn training_is_deterministic_and_respects_row_bounds() {
        let run = || {
            let mut t = Trainer::new(dataset(), &tiny_arch(), cfg(30)).unwrap();
            while t.epoch() < 30 {
                t.step().unwrap();
                assert!(t.max_row_excess() <= 1e-9);
            }
            t.finish()
        };
        let a = run();
        let b = run();
        assert_eq!(a.history, b.history);
        assert_eq!(a.bank, b.bank);
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let out = train(dataset(), &tiny_arch(), cfg(5)).unwrap();
        let ckpt = out.checkpoint(&cfg(5));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt.json");
        ckpt.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back, ckpt);
        let params = back.decoder().unwrap();
        let bank = back.latent_bank().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let x = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let z = &bank.codes()[0];
            assert_eq!(params.forward(&x, z).unwrap().to_bits(), out.params.forward(&x, z).unwrap().to_bits());
        }
    }

    #[test]
    fn reconstruction_of_an_analytic_decoder_is_closed() {
        // A single linear layer on the raw coordinates: f = 0.1 tanh(x - 0.2)
        let arch = Architecture {
            hidden: vec![],
            encoding: EncodingConfig {
                levels: 0,
                include_input: true,
            },
            latent_dim: 1,
        };
        let mut params = DecoderParams::new(&arch, 0.1, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        params.layers[0].weights.assign(&ndarray::arr2(&[[1.0, 0.0, 0.0, 0.0]]));
        params.layers[0].bias.fill(-0.2);
        params.layers[0].k = 5.0;
        for res in [8, 16] {
            let mesh = reconstruct(&params, &[0.0], res).unwrap();
            assert!(validate_watertight(&mesh).is_watertight);
        }
        params.layers[0].bias.fill(5.0);
        assert!(matches!(reconstruct(&params, &[0.0], 8), Err(TrainError::Geometry(GeometryError::EmptyIsoSurface { .. }))));
    }

    #[test]
    fn sphere_fixture_trains_downhill() {
        let out = train(dataset(), &tiny_arch(), cfg(200)).unwrap();
        let h = &out.history;
        let head: f64 = h[..10].iter().map(|l| l.total).sum::<f64>() / 10.0;
        let tail: f64 = h[h.len() - 10..].iter().map(|l| l.total).sum::<f64>() / 10.0;
        assert!(tail < head, "{tail} !< {head}");
    }
}
