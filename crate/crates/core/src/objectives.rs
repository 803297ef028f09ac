//! Objective evaluators that turn a latent genome into minimization values:
//! mass, a silhouette-based stiffness proxy, a frontal-area drag proxy, and
//! an external command hook.

use std::f64::consts::PI;
use std::io::Write;
use std::process::Command;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evolution::{Evaluator, Infeasible};
use crate::geometry::{mesh_volume, obj_string, validate_watertight, Axis, Silhouette, TriMesh};
use crate::neural::DecoderParams;
use crate::training::reconstruct;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("mass must be positive, got {0}")]
    NonPositiveMass(f64),
    #[error("frequency must be non-negative, got {0}")]
    NegativeFrequency(f64),
    #[error("invalid objective: {0}")]
    Config(String),
}

/// Stiffness of a single-degree-of-freedom oscillator, `m (2 pi f)^2`.
pub fn stiffness_from_frequency(mass: f64, frequency: f64) -> Result<f64, ObjectiveError> {
    if !(mass > 0.0) {
        return Err(ObjectiveError::NonPositiveMass(mass));
    }
    if !(frequency >= 0.0) {
        return Err(ObjectiveError::NegativeFrequency(frequency));
    }
    Ok(mass * (2.0 * PI * frequency).powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Minimize,
    Maximize,
}

impl Direction {
    /// Converts between user-facing and minimized values (an involution).
    pub fn to_internal(self, value: f64) -> f64 {
        match self {
            Self::Minimize => value,
            Self::Maximize => -value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveKind {
    /// `density * volume`.
    Mass { density: f64 },
    /// `m (2 pi f)^2` with `m = density * volume` and
    /// `f = sqrt(J / volume)`, `J` the polar moment of the silhouette.
    StiffnessProxy { density: f64, axis: Axis },
    /// Silhouette area seen along `axis`.
    DragProxy { axis: Axis },
    /// Runs `command args... <mesh.obj>` and reads line `line` (0-based)
    /// of its standard output as the value.
    External {
        command: String,
        #[serde(default)]
        args: Vec<String>,
        #[serde(default)]
        line: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    pub name: String,
    pub direction: Direction,
    pub evaluator: ObjectiveKind,
}

impl ObjectiveSpec {
    pub fn new(name: impl Into<String>, direction: Direction, evaluator: ObjectiveKind) -> Self {
        Self {
            name: name.into(),
            direction,
            evaluator,
        }
    }

    pub fn validate(&self) -> Result<(), ObjectiveError> {
        match &self.evaluator {
            ObjectiveKind::Mass { density } if !(*density >= 0.0 && density.is_finite()) => {
                Err(ObjectiveError::Config(format!("{}: density {density}", self.name)))
            }
            ObjectiveKind::StiffnessProxy { density, .. } if !(*density > 0.0 && density.is_finite()) => {
                Err(ObjectiveError::Config(format!("{}: density {density}", self.name)))
            }
            ObjectiveKind::External { command, .. } if command.trim().is_empty() => {
                Err(ObjectiveError::Config(format!("{}: empty command", self.name)))
            }
            _ => Ok(()),
        }
    }
}

/// Mesh resolutions used while scoring one genome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractionSettings {
    /// Lattice nodes per axis for marching cubes.
    pub resolution: usize,
    /// Pixels per side of silhouette rasters.
    pub silhouette_resolution: usize,
}

impl Default for ExtractionSettings {
    fn default() -> Self {
        Self {
            resolution: 64,
            silhouette_resolution: 256,
        }
    }
}

pub fn mass(mesh: &TriMesh, density: f64) -> f64 {
    density * mesh_volume(mesh)
}

pub fn stiffness_proxy(mesh: &TriMesh, density: f64, axis: Axis, raster: usize) -> Result<f64, Infeasible> {
    let volume = mesh_volume(mesh);
    if !(volume > 0.0) {
        return Err(Infeasible(format!("non-positive volume {volume}")));
    }
    let moment = Silhouette::rasterize(mesh, axis, raster)
        .map_err(|e| Infeasible(e.to_string()))?
        .polar_moment();
    let frequency = (moment / volume).sqrt();
    stiffness_from_frequency(density * volume, frequency).map_err(|e| Infeasible(e.to_string()))
}

pub fn drag_proxy(mesh: &TriMesh, axis: Axis, raster: usize) -> Result<f64, Infeasible> {
    Silhouette::rasterize(mesh, axis, raster)
        .map(|s| s.area())
        .map_err(|e| Infeasible(e.to_string()))
}

fn run_external(mesh: &TriMesh, command: &str, args: &[String]) -> Result<Vec<f64>, Infeasible> {
    let fail = |m: String| Infeasible(format!("{command}: {m}"));
    let mut file = tempfile::Builder::new()
        .suffix(".obj")
        .tempfile()
        .map_err(|e| fail(e.to_string()))?;
    file.write_all(obj_string(mesh).as_bytes()).map_err(|e| fail(e.to_string()))?;
    file.flush().map_err(|e| fail(e.to_string()))?;
    let out = Command::new(command)
        .args(args)
        .arg(file.path())
        .output()
        .map_err(|e| fail(e.to_string()))?;
    if !out.status.success() {
        return Err(fail(format!("exited with {}", out.status)));
    }
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim().parse::<f64>().map_err(|e| fail(format!("{l:?}: {e}"))))
        .collect()
}

/// Scores each objective on an already extracted mesh; values are
/// user-facing (not yet negated).
pub fn score_mesh(mesh: &TriMesh, objectives: &[ObjectiveSpec], settings: &ExtractionSettings) -> Result<Vec<f64>, Infeasible> {
    let mut external: Vec<((&str, &[String]), Vec<f64>)> = Vec::new();
    let mut values = Vec::with_capacity(objectives.len());
    for spec in objectives {
        let v = match &spec.evaluator {
            ObjectiveKind::Mass { density } => mass(mesh, *density),
            ObjectiveKind::StiffnessProxy { density, axis } => {
                stiffness_proxy(mesh, *density, *axis, settings.silhouette_resolution)?
            }
            ObjectiveKind::DragProxy { axis } => drag_proxy(mesh, *axis, settings.silhouette_resolution)?,
            ObjectiveKind::External { command, args, line } => {
                let key = (command.as_str(), args.as_slice());
                let lines = match external.iter().find(|(k, _)| *k == key) {
                    Some((_, v)) => v.clone(),
                    None => {
                        let v = run_external(mesh, command, args)?;
                        external.push((key, v.clone()));
                        v
                    }
                };
                *lines
                    .get(*line)
                    .ok_or_else(|| Infeasible(format!("{command}: no output line {line}")))?
            }
        };
        if !v.is_finite() {
            return Err(Infeasible(format!("{} is not finite", spec.name)));
        }
        values.push(v);
    }
    Ok(values)
}

/// Decodes a genome into a mesh and scores it. Genomes whose surface is
/// empty or not watertight are infeasible.
pub struct ShapeEvaluator<'a> {
    params: &'a DecoderParams,
    objectives: Vec<ObjectiveSpec>,
    settings: ExtractionSettings,
}

impl<'a> ShapeEvaluator<'a> {
    pub fn new(
        params: &'a DecoderParams,
        objectives: Vec<ObjectiveSpec>,
        settings: ExtractionSettings,
    ) -> Result<Self, ObjectiveError> {
        if objectives.is_empty() {
            return Err(ObjectiveError::Config("no objectives".into()));
        }
        if settings.resolution < 8 {
            return Err(ObjectiveError::Config(format!("extraction resolution {} < 8", settings.resolution)));
        }
        if settings.silhouette_resolution == 0 {
            return Err(ObjectiveError::Config("silhouette resolution 0".into()));
        }
        for o in &objectives {
            o.validate()?;
        }
        Ok(Self {
            params,
            objectives,
            settings,
        })
    }

    pub fn objectives(&self) -> &[ObjectiveSpec] {
        &self.objectives
    }

    pub fn extract(&self, genome: &[f64]) -> Result<TriMesh, Infeasible> {
        let mesh = reconstruct(self.params, genome, self.settings.resolution).map_err(|e| Infeasible(e.to_string()))?;
        let report = validate_watertight(&mesh);
        if !report.is_watertight {
            return Err(Infeasible(format!("extracted mesh is not watertight: {report:?}")));
        }
        Ok(mesh)
    }

    /// User-facing objective values of a genome.
    pub fn user_values(&self, genome: &[f64]) -> Result<Vec<f64>, Infeasible> {
        score_mesh(&self.extract(genome)?, &self.objectives, &self.settings)
    }

    /// Maps minimized values back to user-facing ones.
    pub fn to_user(&self, internal: &[f64]) -> Vec<f64> {
        internal
            .iter()
            .zip(&self.objectives)
            .map(|(v, o)| o.direction.to_internal(*v))
            .collect()
    }
}

impl Evaluator for ShapeEvaluator<'_> {
    fn objective_count(&self) -> usize {
        self.objectives.len()
    }

    fn evaluate(&self, genome: &[f64]) -> Result<Vec<f64>, Infeasible> {
        let user = self.user_values(genome)?;
        Ok(user
            .iter()
            .zip(&self.objectives)
            .map(|(v, o)| o.direction.to_internal(*v))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{shapes, Vec3};

    const RASTER: usize = 256;

    #[test]
    fn stiffness_formula() {
        assert!((stiffness_from_frequency(1.0, 1.0).unwrap() - 4.0 * PI * PI).abs() < 1e-12);
        assert_eq!(stiffness_from_frequency(1.0, 0.0).unwrap(), 0.0);
        assert!((stiffness_from_frequency(2.0, 3.0).unwrap() - 72.0 * PI * PI).abs() < 1e-9);
        assert!(stiffness_from_frequency(0.0, 1.0).is_err());
        assert!(stiffness_from_frequency(1.0, -1.0).is_err());
    }

    #[test]
    fn mass_of_boxes() {
        let cube = shapes::unit_cube();
        assert!((mass(&cube, 2.5) - 2.5).abs() < 1e-12);
        assert_eq!(mass(&cube, 0.0), 0.0);
    }

    #[test]
    fn wider_silhouette_is_stiffer_at_equal_volume() {
        // both boxes have volume 0.16; the flat one spreads its section
        // farther from the z axis
        let compact = shapes::box_mesh(Vec3::new(0.2, 0.2, 0.5));
        let flat = shapes::box_mesh(Vec3::new(0.4, 0.2, 0.25));
        assert!((mesh_volume(&compact) - mesh_volume(&flat)).abs() < 1e-12);
        let a = stiffness_proxy(&compact, 1.0, Axis::Z, RASTER).unwrap();
        let b = stiffness_proxy(&flat, 1.0, Axis::Z, RASTER).unwrap();
        assert!(b > a);
    }

    #[test]
    fn stiffness_proxy_scales_with_fourth_power() {
        // a box aligned with the raster so pixel coverage scales exactly
        let base = shapes::box_mesh(Vec3::new(0.25, 0.125, 0.2));
        let scaled = base.map_vertices(|v| v * 2.0);
        let p1 = stiffness_proxy(&base, 1.0, Axis::Z, RASTER).unwrap();
        let p2 = stiffness_proxy(&scaled, 1.0, Axis::Z, RASTER).unwrap();
        assert!((p2 / p1 / 16.0 - 1.0).abs() < 1e-9, "{}", p2 / p1);
    }

    #[test]
    fn drag_proxy_orders_axes() {
        let slab = shapes::box_mesh(Vec3::new(0.8, 0.4, 0.1));
        let x = drag_proxy(&slab, Axis::X, RASTER).unwrap();
        let z = drag_proxy(&slab, Axis::Z, RASTER).unwrap();
        assert!(z > x);
        // at equal volume a face-on cube shows V^(2/3), a sphere 1.21 V^(2/3)
        let sphere = shapes::icosphere(0.5, 5);
        let side = (4.0 / 3.0 * PI * 0.125f64).cbrt();
        let cube = shapes::box_mesh(Vec3::repeat(side / 2.0));
        assert!((mesh_volume(&cube) / mesh_volume(&sphere) - 1.0).abs() < 2e-3);
        let (s, c) = (drag_proxy(&sphere, Axis::X, RASTER).unwrap(), drag_proxy(&cube, Axis::X, RASTER).unwrap());
        assert!(s > c);
        // at equal width the inscribed sphere shows less than the box
        let boxed = shapes::box_mesh(Vec3::repeat(0.5));
        assert!(s < drag_proxy(&boxed, Axis::X, RASTER).unwrap());
    }

    #[test]
    fn directions_negate_once() {
        assert_eq!(Direction::Maximize.to_internal(3.0), -3.0);
        assert_eq!(Direction::Maximize.to_internal(Direction::Maximize.to_internal(3.0)), 3.0);
        assert_eq!(Direction::Minimize.to_internal(3.0), 3.0);
    }

    #[test]
    fn spec_parsing_is_strict() {
        let ok: ObjectiveSpec = toml::from_str(
            "name = \"stiff\"\ndirection = \"maximize\"\n[evaluator]\nkind = \"stiffness_proxy\"\ndensity = 1.0\naxis = \"z\"\n",
        )
        .unwrap();
        assert_eq!(ok.evaluator, ObjectiveKind::StiffnessProxy { density: 1.0, axis: Axis::Z });
        let bad = toml::from_str::<ObjectiveSpec>(
            "name = \"m\"\ndirection = \"minimize\"\n[evaluator]\nkind = \"mass\"\ndensity = 1.0\ncolour = 2\n",
        );
        assert!(bad.is_err());
    }

    #[cfg(unix)]
    #[test]
    fn external_command_protocol() {
        let cube = shapes::unit_cube();
        let spec = |command: &str, args: &[&str], line| {
            ObjectiveSpec::new(
                "ext",
                Direction::Minimize,
                ObjectiveKind::External {
                    command: command.into(),
                    args: args.iter().map(|s| s.to_string()).collect(),
                    line,
                },
            )
        };
        let s = ExtractionSettings::default();
        // prints the vertex count then 2.5
        let script = ["-c", "grep -c '^v ' \"$0\"; echo 2.5"];
        let v = score_mesh(&cube, &[spec("sh", &script, 0), spec("sh", &script, 1)], &s).unwrap();
        assert_eq!(v, vec![8.0, 2.5]);
        assert!(score_mesh(&cube, &[spec("sh", &["-c", "exit 3"], 0)], &s).is_err());
        assert!(score_mesh(&cube, &[spec("sh", &script, 5)], &s).is_err());
    }
}
