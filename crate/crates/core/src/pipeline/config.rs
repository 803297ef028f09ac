use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{PipelineError, ProceduralSpec};
use crate::evolution::GaConfig;
use crate::geometry::SdfSampling;
use crate::neural::Architecture;
use crate::objectives::{Direction, ExtractionSettings, ObjectiveKind, ObjectiveSpec};
use crate::geometry::Axis;
use crate::training::TrainConfig;

/// Where training shapes come from and how they are sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    /// OBJ or STL files; relative paths resolve against the config file.
    pub meshes: Vec<PathBuf>,
    pub procedural: Vec<ProceduralSpec>,
    pub samples_per_shape: usize,
    pub sampling: SdfSampling,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            meshes: Vec::new(),
            procedural: Vec::new(),
            samples_per_shape: 15_000,
            sampling: SdfSampling::default(),
        }
    }
}

/// Settings of the reconstruction-quality report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateConfig {
    /// Surface points per cloud.
    pub points: usize,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        Self { points: 20_000 }
    }
}

/// Everything a run needs. `seed` drives every random choice: it is copied
/// into the training and GA settings when the config is resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    /// Margin of the latent search box, as a fraction of each code range.
    pub bounds_margin: f64,
    /// Lattice resolution used by `reconstruct` and `export`.
    pub resolution: usize,
    pub dataset: DatasetConfig,
    pub architecture: Architecture,
    pub train: TrainConfig,
    pub ga: GaConfig,
    pub objectives: Vec<ObjectiveSpec>,
    pub extraction: ExtractionSettings,
    pub evaluate: EvaluateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("run"),
            bounds_margin: 0.2,
            resolution: 64,
            dataset: DatasetConfig::default(),
            architecture: Architecture::default(),
            train: TrainConfig::default(),
            ga: GaConfig::default(),
            objectives: vec![
                ObjectiveSpec::new("mass", Direction::Minimize, ObjectiveKind::Mass { density: 1.0 }),
                ObjectiveSpec::new(
                    "stiffness",
                    Direction::Maximize,
                    ObjectiveKind::StiffnessProxy {
                        density: 1.0,
                        axis: Axis::Z,
                    },
                ),
            ],
            extraction: ExtractionSettings::default(),
            evaluate: EvaluateConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub bounds_margin: Option<f64>,
    pub resolution: Option<usize>,
}

impl RunConfig {
    /// Strict parse: unknown keys are errors.
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    /// Reads a config file and resolves relative mesh paths against its
    /// directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            PipelineError::Config(m) => PipelineError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for m in &mut cfg.dataset.meshes {
            if m.is_relative() {
                *m = base.join(&*m);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config is always representable as TOML")
    }

    /// Applies overrides, propagates the seed, and validates.
    pub fn resolve(mut self, overrides: &Overrides) -> Result<Self, PipelineError> {
        if let Some(s) = overrides.seed {
            self.seed = s;
        }
        if let Some(o) = &overrides.out {
            self.out = o.clone();
        }
        if let Some(m) = overrides.bounds_margin {
            self.bounds_margin = m;
        }
        if let Some(r) = overrides.resolution {
            self.resolution = r;
        }
        self.train.seed = self.seed;
        self.ga.seed = self.seed;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if !(self.bounds_margin >= 0.0 && self.bounds_margin.is_finite()) {
            return bad(format!("bounds_margin must be non-negative, got {}", self.bounds_margin));
        }
        if self.resolution < 8 {
            return bad(format!("resolution must be at least 8, got {}", self.resolution));
        }
        if self.extraction.resolution < 8 {
            return bad(format!("extraction resolution must be at least 8, got {}", self.extraction.resolution));
        }
        if self.extraction.silhouette_resolution == 0 {
            return bad("silhouette resolution must be positive".into());
        }
        if self.dataset.meshes.is_empty() && self.dataset.procedural.is_empty() {
            return bad("dataset lists no meshes and no procedural shapes".into());
        }
        if self.dataset.samples_per_shape < 100 {
            return bad(format!("samples_per_shape must be at least 100, got {}", self.dataset.samples_per_shape));
        }
        if self.evaluate.points == 0 {
            return bad("evaluate.points must be positive".into());
        }
        if self.architecture.latent_dim == 0 || self.architecture.hidden.contains(&0) {
            return bad("architecture needs latent_dim >= 1 and non-empty layers".into());
        }
        if self.objectives.is_empty() {
            return bad("at least one objective is required".into());
        }
        for (i, o) in self.objectives.iter().enumerate() {
            o.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
            if self.objectives[..i].iter().any(|p| p.name == o.name) {
                return bad(format!("duplicate objective name {:?}", o.name));
            }
        }
        self.train.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.ga.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::ShapeFamily;

    const SMALL: &str = r#"
seed = 3
out = "runs/demo"

[dataset]
procedural = [{ family = "sphere" }, { family = "box", range = [0.6, 0.8] }]

[architecture]
hidden = [32, 32]
latent_dim = 1

[train]
epochs = 10

[ga]
population_size = 8

[[objectives]]
name = "mass"
direction = "minimize"
evaluator = { kind = "mass", density = 2.0 }
"#;

    #[test]
    fn parses_and_resolves() {
        let cfg = RunConfig::from_toml(SMALL).unwrap();
        assert_eq!(cfg.dataset.procedural[1].family, ShapeFamily::Box);
        assert_eq!(cfg.dataset.samples_per_shape, 15_000);
        assert_eq!(cfg.objectives.len(), 1);
        let r = cfg
            .resolve(&Overrides {
                seed: Some(9),
                resolution: Some(32),
                ..Overrides::default()
            })
            .unwrap();
        assert_eq!((r.seed, r.train.seed, r.ga.seed, r.resolution), (9, 9, 9, 32));
    }

    #[test]
    fn echo_round_trips() {
        let cfg = RunConfig::from_toml(SMALL).unwrap().resolve(&Overrides::default()).unwrap();
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        let full = RunConfig {
            dataset: DatasetConfig {
                procedural: vec![ProceduralSpec::new(ShapeFamily::Wheel, 2)],
                ..DatasetConfig::default()
            },
            ..RunConfig::default()
        };
        assert_eq!(RunConfig::from_toml(&full.to_toml()).unwrap(), full);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_config_errors() {
        let typo = SMALL.replace("epochs = 10", "epocs = 10");
        assert!(matches!(RunConfig::from_toml(&typo), Err(PipelineError::Config(_))));
        let top = format!("sede = 1\n{SMALL}");
        assert!(matches!(RunConfig::from_toml(&top), Err(PipelineError::Config(_))));
        let cfg = RunConfig::from_toml(SMALL).unwrap();
        let odd = Overrides {
            bounds_margin: Some(-1.0),
            ..Overrides::default()
        };
        assert!(matches!(cfg.clone().resolve(&odd), Err(PipelineError::Config(_))));
        let low = Overrides {
            resolution: Some(4),
            ..Overrides::default()
        };
        assert!(matches!(cfg.resolve(&low), Err(PipelineError::Config(_))));
        assert!(matches!(
            RunConfig::default().resolve(&Overrides::default()),
            Err(PipelineError::Config(_))
        ));
    }
}
