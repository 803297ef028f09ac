use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{generate_procedural_dataset, load_samples, save_samples, PipelineError, RunConfig, RunLayout};
use crate::artifact;
use crate::evolution::{run_nsga2, Evaluator};
use crate::geometry::{
    center_and_normalize, export_mesh, load_mesh, sample_sdf, validate_watertight, TriMesh, DEFAULT_TARGET_RADIUS,
};
use crate::latent::derive_bounds;
use crate::metrics::{distance_matrix, sample_surface, MetricsSummary};
use crate::objectives::{Direction, ShapeEvaluator};
use crate::training::{load_checkpoint, reconstruct, Checkpoint, TrainError, Trainer};

const MANIFEST_FORMAT: &str = "shapeopt-manifest";
const MANIFEST_VERSION: &str = "1";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format: String,
    version: String,
    ids: Vec<String>,
}

/// Outcome of preprocessing one input shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeStatus {
    pub id: String,
    /// Mesh file, or `None` for procedural shapes.
    pub source: Option<PathBuf>,
    pub watertight: bool,
    /// Training pairs written; 0 when the shape was skipped.
    pub samples: usize,
    /// Why the shape was rejected.
    pub problem: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessSummary {
    pub shapes: Vec<ShapeStatus>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub epochs: usize,
    pub final_clip: f64,
    pub final_total: f64,
    pub ids: Vec<String>,
    pub codes: Vec<Vec<f64>>,
}

/// A member of the run's Pareto front with user-facing objective values.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontDesign {
    pub genome: Vec<f64>,
    pub objectives: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeSummary {
    pub objective_names: Vec<String>,
    pub front: Vec<FrontDesign>,
    /// User-facing objectives of each training code; `None` if its decoded
    /// shape is infeasible.
    pub training_points: Vec<(String, Option<Vec<f64>>)>,
    pub generations: usize,
    pub evaluations: usize,
}

fn out_err(path: &Path, e: impl ToString) -> PipelineError {
    PipelineError::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| out_err(parent, e))?;
    }
    fs::write(path, text).map_err(|e| out_err(path, e))
}

fn write_mesh(mesh: &TriMesh, path: &Path) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| out_err(parent, e))?;
    }
    Ok(export_mesh(mesh, path)?)
}

/// Empties a directory this crate owns so stale designs do not linger.
fn reset_dir(dir: &Path) -> Result<(), PipelineError> {
    if dir.exists() {
        fs::remove_dir_all(dir).map_err(|e| out_err(dir, e))?;
    }
    fs::create_dir_all(dir).map_err(|e| out_err(dir, e))
}

fn csv_text(header: &[String], rows: &[Vec<String>]) -> Result<String, PipelineError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| PipelineError::Output {
        path: PathBuf::from("<csv>"),
        message: e.to_string(),
    };
    w.write_record(header).map_err(fail)?;
    for r in rows {
        w.write_record(r).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| PipelineError::Output {
        path: PathBuf::from("<csv>"),
        message: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn echo_config(cfg: &RunConfig, layout: &RunLayout) -> Result<(), PipelineError> {
    write_text(&layout.config(), &cfg.to_toml())
}

fn require(path: PathBuf, stage: &'static str, needs: &'static str) -> Result<PathBuf, PipelineError> {
    if path.exists() {
        Ok(path)
    } else {
        Err(PipelineError::MissingArtifact {
            stage,
            needs,
            missing: path,
        })
    }
}

fn read_manifest(layout: &RunLayout, stage: &'static str) -> Result<Vec<String>, PipelineError> {
    let path = require(layout.manifest(), stage, "preprocess")?;
    let m: Manifest = artifact::read_versioned(&path, MANIFEST_FORMAT, MANIFEST_VERSION)?;
    Ok(m.ids)
}

fn read_checkpoint(layout: &RunLayout, stage: &'static str) -> Result<Checkpoint, PipelineError> {
    Ok(load_checkpoint(&require(layout.checkpoint(), stage, "train")?)?)
}

/// Per-shape sampling seed, distinct for every shape of a run.
fn shape_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index as u64 + 1)
}

fn file_id(path: &Path) -> String {
    path.file_stem().map_or_else(|| "mesh".into(), |s| s.to_string_lossy().into_owned())
}

fn unique_id(base: String, taken: &[(ShapeStatus, Option<TriMesh>)]) -> String {
    let free = |id: &str| !taken.iter().any(|(s, _)| s.id == id);
    if free(&base) {
        return base;
    }
    (2..).map(|k| format!("{base}_{k}")).find(|id| free(id)).expect("unbounded suffixes")
}

/// Loads, validates and normalizes every input shape, then writes the
/// normalized meshes and one sample archive per shape. Invalid mesh files
/// abort the run unless `skip_invalid` is set.
pub fn cmd_preprocess(cfg: &RunConfig, skip_invalid: bool) -> Result<PreprocessSummary, PipelineError> {
    let layout = RunLayout::new(&cfg.out);
    echo_config(cfg, &layout)?;
    let mut shapes: Vec<(ShapeStatus, Option<TriMesh>)> = Vec::new();
    for path in &cfg.dataset.meshes {
        let id = unique_id(file_id(path), &shapes);
        let checked = load_mesh(path).and_then(|m| {
            let report = validate_watertight(&m);
            if report.is_watertight {
                center_and_normalize(&m, DEFAULT_TARGET_RADIUS)
            } else {
                Err(crate::geometry::GeometryError::NotWatertight {
                    boundary: report.boundary_edge_count,
                    flipped: report.flipped_edge_count,
                    nonmanifold: report.nonmanifold_edge_count,
                })
            }
        });
        let status = ShapeStatus {
            id,
            source: Some(path.clone()),
            watertight: checked.is_ok(),
            samples: 0,
            problem: checked.as_ref().err().map(|e| e.to_string()),
        };
        shapes.push((status, checked.ok()));
    }
    for named in generate_procedural_dataset(&cfg.dataset.procedural, cfg.seed)? {
        let id = unique_id(named.id, &shapes);
        shapes.push((
            ShapeStatus {
                id,
                source: None,
                watertight: true,
                samples: 0,
                problem: None,
            },
            Some(named.mesh),
        ));
    }

    let invalid: Vec<String> = shapes
        .iter()
        .filter_map(|(s, _)| {
            s.problem.as_ref().map(|p| {
                let src = s.source.as_ref().map_or_else(|| s.id.clone(), |p| p.display().to_string());
                format!("  {src}: {p}")
            })
        })
        .collect();
    if !invalid.is_empty() && !skip_invalid {
        return Err(PipelineError::InvalidInputs(invalid));
    }

    let mut ids = Vec::new();
    for (i, (status, mesh)) in shapes.iter_mut().enumerate() {
        let Some(mesh) = mesh else { continue };
        let set = sample_sdf(
            mesh,
            &status.id,
            cfg.dataset.samples_per_shape,
            &cfg.dataset.sampling,
            shape_seed(cfg.seed, i),
        )?;
        write_mesh(mesh, &layout.dataset_mesh(&status.id))?;
        save_samples(&set, &layout.sample_archive(&status.id))?;
        status.samples = set.len();
        ids.push(status.id.clone());
    }
    if ids.is_empty() {
        return Err(PipelineError::Data("no valid shapes to preprocess".into()));
    }
    artifact::write_json(
        &layout.manifest(),
        &Manifest {
            format: MANIFEST_FORMAT.into(),
            version: MANIFEST_VERSION.into(),
            ids,
        },
    )?;
    Ok(PreprocessSummary {
        shapes: shapes.into_iter().map(|(s, _)| s).collect(),
    })
}

/// Fits the decoder and latent codes to the preprocessed samples. On
/// divergence the last finite state is written next to the checkpoint.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainSummary, PipelineError> {
    let layout = RunLayout::new(&cfg.out);
    let ids = read_manifest(&layout, "train")?;
    echo_config(cfg, &layout)?;
    let sets = ids
        .iter()
        .map(|id| load_samples(&require(layout.sample_archive(id), "train", "preprocess")?).map_err(Into::into))
        .collect::<Result<Vec<_>, PipelineError>>()?;
    let mut trainer = Trainer::new(sets, &cfg.architecture, cfg.train.clone())?;
    for _ in 0..cfg.train.epochs {
        match trainer.step() {
            Ok(_) => {}
            Err(TrainError::Diverged { epoch, last_good }) => {
                let saved = layout.last_good_checkpoint();
                last_good.save(&saved)?;
                return Err(PipelineError::Diverged { epoch, saved });
            }
            Err(e) => return Err(e.into()),
        }
    }
    let outcome = trainer.finish();
    let checkpoint = outcome.checkpoint(&cfg.train);
    checkpoint.save(&layout.checkpoint())?;
    write_text(&layout.latents_csv(), &outcome.bank.to_csv())?;
    let rows: Vec<Vec<String>> = outcome
        .history
        .iter()
        .enumerate()
        .map(|(e, l)| {
            vec![
                e.to_string(),
                l.clip.to_string(),
                l.latent.to_string(),
                l.lipschitz.to_string(),
                l.total.to_string(),
            ]
        })
        .collect();
    let header = ["epoch", "clip", "latent", "lipschitz", "total"].map(String::from);
    write_text(&layout.loss_csv(), &csv_text(&header, &rows)?)?;
    let last = outcome.history.last().copied().unwrap_or_default();
    Ok(TrainSummary {
        epochs: outcome.history.len(),
        final_clip: last.clip,
        final_total: last.total,
        ids: outcome.bank.ids().to_vec(),
        codes: outcome.bank.codes().to_vec(),
    })
}

/// Decodes every training code at the run resolution. Returns the mesh
/// paths written.
pub fn cmd_reconstruct(cfg: &RunConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let layout = RunLayout::new(&cfg.out);
    let checkpoint = read_checkpoint(&layout, "reconstruct")?;
    echo_config(cfg, &layout)?;
    let params = checkpoint.decoder()?;
    let bank = checkpoint.latent_bank()?;
    let mut written = Vec::new();
    for (id, code) in bank.iter() {
        let mesh = reconstruct(&params, code, cfg.resolution)?;
        let path = layout.reconstructed_mesh(id);
        write_mesh(&mesh, &path)?;
        written.push(path);
    }
    Ok(written)
}

/// Reconstruction quality of the training set: chamfer distance of each
/// reconstruction to its own shape, and MMD / coverage over all pairs.
pub fn cmd_evaluate(cfg: &RunConfig) -> Result<MetricsSummary, PipelineError> {
    let layout = RunLayout::new(&cfg.out);
    let ids = read_manifest(&layout, "evaluate")?;
    echo_config(cfg, &layout)?;
    let n = cfg.evaluate.points;
    let mut generated = Vec::new();
    let mut reference = Vec::new();
    for (i, id) in ids.iter().enumerate() {
        let rec = load_mesh(require(layout.reconstructed_mesh(id), "evaluate", "reconstruct")?)?;
        let gt = load_mesh(require(layout.dataset_mesh(id), "evaluate", "preprocess")?)?;
        generated.push(sample_surface(&rec, n, shape_seed(cfg.seed, 2 * i), id)?);
        reference.push(sample_surface(&gt, n, shape_seed(cfg.seed, 2 * i + 1), id)?);
    }
    let matrix = distance_matrix(&generated, &reference)?;
    let own: Vec<f64> = (0..ids.len()).map(|i| matrix[i][i]).collect();
    let summary = MetricsSummary::new(&own, &matrix)?;
    write_text(&layout.report(), &summary.to_csv())?;
    Ok(summary)
}

fn objective_header(cfg: &RunConfig, dim: usize) -> Vec<String> {
    let mut h: Vec<String> = (0..dim).map(|j| format!("g{j}")).collect();
    h.extend(cfg.objectives.iter().map(|o| o.name.clone()));
    h
}

/// Searches the latent box around the training codes with NSGA-II and
/// writes the generation log, the run's Pareto front and its meshes.
pub fn cmd_optimize(cfg: &RunConfig) -> Result<OptimizeSummary, PipelineError> {
    let layout = RunLayout::new(&cfg.out);
    let checkpoint = read_checkpoint(&layout, "optimize")?;
    echo_config(cfg, &layout)?;
    let params = checkpoint.decoder()?;
    let bank = checkpoint.latent_bank()?;
    let bounds = derive_bounds(&bank, cfg.bounds_margin).map_err(|e| PipelineError::Data(e.to_string()))?;
    let evaluator = ShapeEvaluator::new(&params, cfg.objectives.clone(), cfg.extraction)
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let archive = run_nsga2(&evaluator, &bounds, bank.codes(), &cfg.ga)?;

    // the generation log holds the minimized values
    let internal_names: Vec<String> = cfg
        .objectives
        .iter()
        .map(|o| match o.direction {
            Direction::Minimize => o.name.clone(),
            Direction::Maximize => format!("neg_{}", o.name),
        })
        .collect();
    let mut log = Vec::new();
    archive
        .write_csv(&mut log, &internal_names)
        .map_err(|e| out_err(&layout.generations_csv(), e))?;
    write_text(&layout.generations_csv(), &String::from_utf8(log).expect("csv output is utf-8"))?;

    let front: Vec<FrontDesign> = archive
        .pareto_front()
        .into_iter()
        .map(|ind| FrontDesign {
            genome: ind.genome.clone(),
            objectives: evaluator.to_user(&ind.objectives),
        })
        .collect();
    let mut header = vec!["design".to_string()];
    header.extend(objective_header(cfg, bank.dim()));
    let rows: Vec<Vec<String>> = front
        .iter()
        .enumerate()
        .map(|(k, d)| {
            let mut r = vec![k.to_string()];
            r.extend(d.genome.iter().chain(&d.objectives).map(|v| v.to_string()));
            r
        })
        .collect();
    write_text(&layout.front_csv(), &csv_text(&header, &rows)?)?;

    let front_dir = layout.front_mesh(0).parent().expect("front mesh has a parent").to_path_buf();
    reset_dir(&front_dir)?;
    for (k, d) in front.iter().enumerate() {
        let mesh = evaluator.extract(&d.genome).map_err(|e| PipelineError::Data(e.0))?;
        write_mesh(&mesh, &layout.front_mesh(k))?;
    }

    let training_points: Vec<(String, Option<Vec<f64>>)> = bank
        .iter()
        .map(|(id, code)| (id.to_string(), evaluator.user_values(code).ok()))
        .collect();
    let mut header = vec!["shape_id".to_string()];
    header.extend(objective_header(cfg, bank.dim()));
    header.push("feasible".into());
    let rows: Vec<Vec<String>> = bank
        .iter()
        .zip(&training_points)
        .map(|((id, code), (_, values))| {
            let mut r = vec![id.to_string()];
            r.extend(code.iter().map(|v| v.to_string()));
            match values {
                Some(v) => r.extend(v.iter().map(|x| x.to_string())),
                None => r.extend(std::iter::repeat_n(String::new(), evaluator.objective_count())),
            }
            r.push(values.is_some().to_string());
            r
        })
        .collect();
    write_text(&layout.training_points_csv(), &csv_text(&header, &rows)?)?;

    Ok(OptimizeSummary {
        objective_names: cfg.objectives.iter().map(|o| o.name.clone()).collect(),
        front,
        training_points,
        generations: archive.generations.len(),
        evaluations: archive.evaluations,
    })
}

/// Re-extracts the designs of the final front at the run resolution.
pub fn cmd_export(cfg: &RunConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let layout = RunLayout::new(&cfg.out);
    let front_path = require(layout.front_csv(), "export", "optimize")?;
    let checkpoint = read_checkpoint(&layout, "export")?;
    echo_config(cfg, &layout)?;
    let params = checkpoint.decoder()?;
    let dim = params.latent_dim;
    let mut reader = csv::Reader::from_path(&front_path).map_err(|e| PipelineError::Data(e.to_string()))?;
    let export_dir = layout.export_mesh(0).parent().expect("export mesh has a parent").to_path_buf();
    reset_dir(&export_dir)?;
    let mut written = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| PipelineError::Data(e.to_string()))?;
        let genome = (1..=dim)
            .map(|j| record.get(j).and_then(|v| v.parse::<f64>().ok()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| PipelineError::Data(format!("{}: malformed row {k}", front_path.display())))?;
        let mesh = reconstruct(&params, &genome, cfg.resolution)?;
        let path = layout.export_mesh(k);
        write_mesh(&mesh, &path)?;
        written.push(path);
    }
    Ok(written)
}

/// Every stage in order.
pub fn run_all(cfg: &RunConfig, skip_invalid: bool) -> Result<OptimizeSummary, PipelineError> {
    cmd_preprocess(cfg, skip_invalid)?;
    cmd_train(cfg)?;
    cmd_reconstruct(cfg)?;
    cmd_evaluate(cfg)?;
    let summary = cmd_optimize(cfg)?;
    cmd_export(cfg)?;
    Ok(summary)
}
