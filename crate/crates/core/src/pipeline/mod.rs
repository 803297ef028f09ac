//! End-to-end orchestration: configuration, procedural data, and the
//! preprocess / train / reconstruct / evaluate / optimize / export stages.
//!
//! Every stage reads its inputs from and writes its outputs to one run
//! directory:
//!
//! ```text
//! config.toml            resolved configuration, rewritten by every stage
//! samples/               manifest.json and one <id>.json archive per shape
//! checkpoints/           decoder.json, latents.csv, loss_history.csv
//! meshes/dataset/        normalized training meshes
//! meshes/reconstructed/  decoded training codes
//! meshes/front/          designs of the final front (extraction resolution)
//! meshes/export/         the same designs at the run resolution
//! fronts/                generations.csv, front.csv, training_points.csv
//! report.csv             reconstruction metrics
//! ```

mod config;
mod dataset;
mod samples;
mod stages;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::artifact::ArtifactError;
use crate::evolution::EvolutionError;
use crate::geometry::GeometryError;
use crate::metrics::MetricsError;
use crate::training::TrainError;

pub use config::{DatasetConfig, EvaluateConfig, Overrides, RunConfig};
pub use dataset::{generate_procedural_dataset, NamedMesh, ProceduralSpec, ShapeFamily, WHEEL_RESOLUTION};
pub use samples::{load_samples, save_samples, SAMPLES_FORMAT, SAMPLES_VERSION};
pub use stages::{
    cmd_evaluate, cmd_export, cmd_optimize, cmd_preprocess, cmd_reconstruct, cmd_train, run_all, FrontDesign,
    OptimizeSummary, PreprocessSummary, ShapeStatus, TrainSummary,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("stage {stage} needs {} from an earlier stage; run `{needs}` first", .missing.display())]
    MissingArtifact {
        stage: &'static str,
        needs: &'static str,
        missing: PathBuf,
    },
    #[error("invalid input meshes:\n{}", .0.join("\n"))]
    InvalidInputs(Vec<String>),
    #[error("training diverged at epoch {epoch}; last good state saved to {}", .saved.display())]
    Diverged { epoch: usize, saved: PathBuf },
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("cannot write {path}: {message}")]
    Output { path: PathBuf, message: String },
}

impl PipelineError {
    /// Process exit status: 2 configuration, 3 data, 4 numeric divergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Evolution(EvolutionError::Config(_)) => 2,
            Self::Train(TrainError::Config(_)) => 2,
            Self::Diverged { .. } | Self::Train(TrainError::Diverged { .. }) => 4,
            _ => 3,
        }
    }
}

/// Fixed sub-paths of a run directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunLayout {
    root: PathBuf,
}

impl RunLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn config(&self) -> PathBuf {
        self.root.join("config.toml")
    }

    pub fn samples_dir(&self) -> PathBuf {
        self.root.join("samples")
    }

    pub fn manifest(&self) -> PathBuf {
        self.samples_dir().join("manifest.json")
    }

    pub fn sample_archive(&self, id: &str) -> PathBuf {
        self.samples_dir().join(format!("{id}.json"))
    }

    pub fn checkpoint(&self) -> PathBuf {
        self.root.join("checkpoints").join("decoder.json")
    }

    pub fn last_good_checkpoint(&self) -> PathBuf {
        self.root.join("checkpoints").join("last_good.json")
    }

    pub fn latents_csv(&self) -> PathBuf {
        self.root.join("checkpoints").join("latents.csv")
    }

    pub fn loss_csv(&self) -> PathBuf {
        self.root.join("checkpoints").join("loss_history.csv")
    }

    pub fn dataset_mesh(&self, id: &str) -> PathBuf {
        self.root.join("meshes").join("dataset").join(format!("{id}.obj"))
    }

    pub fn reconstructed_mesh(&self, id: &str) -> PathBuf {
        self.root.join("meshes").join("reconstructed").join(format!("{id}.obj"))
    }

    pub fn front_mesh(&self, index: usize) -> PathBuf {
        self.root.join("meshes").join("front").join(format!("design_{index:03}.obj"))
    }

    pub fn export_mesh(&self, index: usize) -> PathBuf {
        self.root.join("meshes").join("export").join(format!("design_{index:03}.obj"))
    }

    pub fn generations_csv(&self) -> PathBuf {
        self.root.join("fronts").join("generations.csv")
    }

    pub fn front_csv(&self) -> PathBuf {
        self.root.join("fronts").join("front.csv")
    }

    pub fn training_points_csv(&self) -> PathBuf {
        self.root.join("fronts").join("training_points.csv")
    }

    pub fn report(&self) -> PathBuf {
        self.root.join("report.csv")
    }
}
