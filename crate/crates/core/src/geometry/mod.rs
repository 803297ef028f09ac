//! Triangle meshes and signed-distance geometry: ingestion, validation,
//! normalization, distance queries, SDF sampling, iso-surface extraction and
//! scalar measures used by the shape objectives.

mod distance;
mod io;
mod marching_cubes;
mod measures;
mod mesh;
mod sampling;
pub mod shapes;

use std::path::PathBuf;

use thiserror::Error;

pub use distance::{closest_point_on_triangle, signed_distance, MeshSdf};
pub use io::{export_mesh, load_mesh, obj_string, parse_obj, parse_stl};
pub use marching_cubes::{marching_cubes, ScalarGrid};
pub use measures::{frontal_projected_area, mesh_volume, Axis, Silhouette};
pub use mesh::{center_and_normalize, validate_watertight, TriMesh, ValidationReport, DEGENERATE_AREA};
pub use sampling::{sample_sdf, sample_surface_points, SdfSampleSet, SdfSampling};

pub type Vec3 = nalgebra::Vector3<f64>;

/// Radius of the farthest vertex after normalization.
pub const DEFAULT_TARGET_RADIUS: f64 = 0.9;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported mesh format: {0}")]
    UnsupportedFormat(String),
    #[error("mesh has no faces")]
    EmptyMesh,
    #[error("face {face} references vertex {index} but mesh has {vertex_count} vertices")]
    IndexOutOfRange {
        face: usize,
        index: usize,
        vertex_count: usize,
    },
    #[error("face {0} repeats a vertex index")]
    DegenerateFace(usize),
    #[error("mesh has zero spatial extent")]
    ZeroExtent,
    #[error("mesh is not watertight ({boundary} boundary, {flipped} flipped, {nonmanifold} non-manifold edges)")]
    NotWatertight {
        boundary: usize,
        flipped: usize,
        nonmanifold: usize,
    },
    #[error("iso-surface is empty: every grid value lies on one side of {iso}")]
    EmptyIsoSurface { iso: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
