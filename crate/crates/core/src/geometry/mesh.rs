use std::collections::HashMap;

use super::{GeometryError, Vec3};

/// Faces below this area count as degenerate.
pub const DEGENERATE_AREA: f64 = 1e-12;

/// Indexed triangle surface. Faces are wound counter-clockwise when seen from
/// outside, so face normals point outward.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[u32; 3]>,
}

impl TriMesh {
    /// Builds a mesh, checking that every face references existing, distinct
    /// vertices.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[u32; 3]>) -> Result<Self, GeometryError> {
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&i| i as usize >= n) {
                return Err(GeometryError::IndexOutOfRange {
                    face: fi,
                    index: bad as usize,
                    vertex_count: n,
                });
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(GeometryError::DegenerateFace(fi));
            }
        }
        if let Some(v) = vertices.iter().find(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(GeometryError::InvalidArgument(format!(
                "non-finite vertex {:?}",
                v.as_slice()
            )));
        }
        Ok(Self { vertices, faces })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn triangle(&self, face: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[face];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn triangles(&self) -> impl Iterator<Item = [Vec3; 3]> + '_ {
        (0..self.faces.len()).map(move |f| self.triangle(f))
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.triangle(face);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Axis-aligned bounds `(min, max)`; `None` for a mesh without vertices.
    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), v| {
            (lo.inf(v), hi.sup(v))
        }))
    }

    /// Same surface with every face's winding reversed.
    pub fn flipped(&self) -> TriMesh {
        TriMesh {
            vertices: self.vertices.clone(),
            faces: self.faces.iter().map(|&[a, b, c]| [a, c, b]).collect(),
        }
    }

    /// Applies `f` to every vertex position.
    pub fn map_vertices(&self, f: impl Fn(&Vec3) -> Vec3) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(f).collect(),
            faces: self.faces.clone(),
        }
    }

    /// Euler characteristic V - E + F over referenced vertices.
    pub fn euler_characteristic(&self) -> i64 {
        let mut used = vec![false; self.vertices.len()];
        let mut edges = HashMap::new();
        for f in &self.faces {
            for i in 0..3 {
                used[f[i] as usize] = true;
                let (a, b) = (f[i], f[(i + 1) % 3]);
                edges.insert((a.min(b), a.max(b)), ());
            }
        }
        let v = used.iter().filter(|&&u| u).count() as i64;
        v - edges.len() as i64 + self.faces.len() as i64
    }
}

/// Result of the edge-manifold check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidationReport {
    pub is_watertight: bool,
    /// Interior edges whose two faces traverse them in the same direction.
    pub flipped_edge_count: usize,
    /// Edges used by exactly one face.
    pub boundary_edge_count: usize,
    /// Edges used by more than two faces.
    pub nonmanifold_edge_count: usize,
    pub degenerate_face_count: usize,
}

/// Classifies every undirected edge by how many faces use it and in which
/// directions.
pub fn validate_watertight(mesh: &TriMesh) -> ValidationReport {
    // (forward uses, backward uses) keyed by (min, max) vertex pair
    let mut uses: HashMap<(u32, u32), (u32, u32)> = HashMap::new();
    for f in mesh.faces() {
        for i in 0..3 {
            let (a, b) = (f[i], f[(i + 1) % 3]);
            let entry = uses.entry((a.min(b), a.max(b))).or_default();
            if a < b {
                entry.0 += 1;
            } else {
                entry.1 += 1;
            }
        }
    }
    let mut report = ValidationReport {
        is_watertight: false,
        flipped_edge_count: 0,
        boundary_edge_count: 0,
        nonmanifold_edge_count: 0,
        degenerate_face_count: (0..mesh.faces().len())
            .filter(|&f| mesh.face_area(f) < DEGENERATE_AREA)
            .count(),
    };
    for &(fwd, bwd) in uses.values() {
        match fwd + bwd {
            1 => report.boundary_edge_count += 1,
            2 if fwd != 1 => report.flipped_edge_count += 1,
            2 => {}
            _ => report.nonmanifold_edge_count += 1,
        }
    }
    report.is_watertight = !mesh.is_empty()
        && report.boundary_edge_count == 0
        && report.flipped_edge_count == 0
        && report.nonmanifold_edge_count == 0;
    report
}

/// Translates the bounding-box center to the origin and scales uniformly so
/// the farthest vertex sits at `target_radius`.
pub fn center_and_normalize(mesh: &TriMesh, target_radius: f64) -> Result<TriMesh, GeometryError> {
    if !(target_radius > 0.0 && target_radius <= 1.0) {
        return Err(GeometryError::InvalidArgument(format!(
            "target radius {target_radius} outside (0, 1]"
        )));
    }
    let (lo, hi) = mesh.bounds().ok_or(GeometryError::EmptyMesh)?;
    let center = (lo + hi) * 0.5;
    let radius = mesh
        .vertices()
        .iter()
        .map(|v| (v - center).norm())
        .fold(0.0, f64::max);
    if radius < 1e-12 {
        return Err(GeometryError::ZeroExtent);
    }
    let scale = target_radius / radius;
    Ok(mesh.map_vertices(|v| (v - center) * scale))
}
