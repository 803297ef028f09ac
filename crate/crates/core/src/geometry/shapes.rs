//! Closed primitive meshes and analytic signed-distance functions.
//!
//! The mesh builders all return watertight, outward-wound meshes. Shapes that
//! have no convenient explicit parameterization (the spoked wheel) are meshed
//! by contouring their analytic SDF.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use super::{marching_cubes, mesh_volume, GeometryError, ScalarGrid, TriMesh, Vec3};

/// Axis-aligned cube spanning `[-0.5, 0.5]^3`: 8 vertices, 12 triangles.
pub fn unit_cube() -> TriMesh {
    box_mesh(Vec3::repeat(0.5))
}

/// Axis-aligned box centered at the origin.
pub fn box_mesh(half: Vec3) -> TriMesh {
    let (x, y, z) = (half.x, half.y, half.z);
    let vertices = vec![
        Vec3::new(-x, -y, -z),
        Vec3::new(x, -y, -z),
        Vec3::new(x, y, -z),
        Vec3::new(-x, y, -z),
        Vec3::new(-x, -y, z),
        Vec3::new(x, -y, z),
        Vec3::new(x, y, z),
        Vec3::new(-x, y, z),
    ];
    let faces = vec![
        [0, 2, 1],
        [0, 3, 2],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [3, 7, 6],
        [3, 6, 2],
        [0, 4, 7],
        [0, 7, 3],
        [1, 2, 6],
        [1, 6, 5],
    ];
    TriMesh::new(vertices, faces).expect("static box topology")
}

/// Subdivided icosahedron projected onto a sphere. Subdivision `s` yields
/// `20 * 4^s` faces.
pub fn icosphere(radius: f64, subdivisions: u32) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(a, b, c)| Vec3::new(a, b, c).normalize())
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(u32, u32), u32> = HashMap::new();
        let mut midpoint = |a: u32, b: u32, vertices: &mut Vec<Vec3>| -> u32 {
            *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let m = (vertices[a as usize] + vertices[b as usize]).normalize();
                vertices.push(m);
                (vertices.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    for v in &mut vertices {
        *v *= radius;
    }
    outward(TriMesh::new(vertices, faces).expect("icosphere topology"))
}

/// Ring torus around the z axis.
pub fn torus(major: f64, minor: f64, segments: u32, tube_segments: u32) -> TriMesh {
    let (nu, nv) = (segments.max(3), tube_segments.max(3));
    let mut vertices = Vec::with_capacity((nu * nv) as usize);
    for i in 0..nu {
        let u = TAU * i as f64 / nu as f64;
        for j in 0..nv {
            let v = TAU * j as f64 / nv as f64;
            let ring = major + minor * v.cos();
            vertices.push(Vec3::new(ring * u.cos(), ring * u.sin(), minor * v.sin()));
        }
    }
    let idx = |i: u32, j: u32| (i % nu) * nv + (j % nv);
    let mut faces = Vec::with_capacity((2 * nu * nv) as usize);
    for i in 0..nu {
        for j in 0..nv {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    outward(TriMesh::new(vertices, faces).expect("torus topology"))
}

/// Capsule along z: a cylinder of the given half length capped by hemispheres.
pub fn capsule(radius: f64, half_length: f64, segments: u32, cap_rings: u32) -> TriMesh {
    let (nu, nr) = (segments.max(3), cap_rings.max(1));
    let mut vertices = vec![Vec3::new(0.0, 0.0, -half_length - radius)];
    let mut rings = Vec::new();
    // bottom hemisphere rings up to the equator, then the top hemisphere
    for (offset, lats) in [
        (-half_length, (1..=nr).map(|r| -PI / 2.0 + PI / 2.0 * r as f64 / nr as f64).collect::<Vec<_>>()),
        (half_length, (0..nr).map(|r| PI / 2.0 * r as f64 / nr as f64).collect()),
    ] {
        for phi in lats {
            let start = vertices.len() as u32;
            for i in 0..nu {
                let theta = TAU * i as f64 / nu as f64;
                vertices.push(Vec3::new(
                    radius * phi.cos() * theta.cos(),
                    radius * phi.cos() * theta.sin(),
                    radius * phi.sin() + offset,
                ));
            }
            rings.push(start);
        }
    }
    vertices.push(Vec3::new(0.0, 0.0, half_length + radius));
    let top = (vertices.len() - 1) as u32;
    let mut faces = Vec::new();
    for i in 0..nu {
        let j = (i + 1) % nu;
        faces.push([0, rings[0] + j, rings[0] + i]);
        let last = *rings.last().unwrap();
        faces.push([top, last + i, last + j]);
    }
    for w in rings.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        for i in 0..nu {
            let j = (i + 1) % nu;
            faces.push([lo + i, lo + j, hi + j]);
            faces.push([lo + i, hi + j, hi + i]);
        }
    }
    outward(TriMesh::new(vertices, faces).expect("capsule topology"))
}

/// Parameters of the spoked-wheel analogue: a flat annular rim joined to a
/// central hub by evenly spaced radial struts, all extruded along z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WheelParams {
    pub spokes: u32,
    pub rim_outer: f64,
    pub rim_inner: f64,
    pub hub_radius: f64,
    pub strut_half_width: f64,
    pub half_thickness: f64,
}

impl Default for WheelParams {
    fn default() -> Self {
        Self {
            spokes: 4,
            rim_outer: 0.85,
            rim_inner: 0.68,
            hub_radius: 0.22,
            strut_half_width: 0.07,
            half_thickness: 0.16,
        }
    }
}

impl WheelParams {
    pub fn validate(&self) -> Result<(), GeometryError> {
        let ok = self.spokes >= 1
            && self.rim_outer <= 0.95
            && self.rim_inner < self.rim_outer
            && self.hub_radius > 0.0
            && self.hub_radius < self.rim_inner
            && self.strut_half_width > 0.0
            && self.half_thickness > 0.0
            && self.half_thickness <= 0.9;
        if ok {
            Ok(())
        } else {
            Err(GeometryError::InvalidArgument(format!("invalid wheel parameters {self:?}")))
        }
    }
}

pub fn sphere_sdf(p: &Vec3, radius: f64) -> f64 {
    p.norm() - radius
}

pub fn box_sdf(p: &Vec3, half: &Vec3) -> f64 {
    let q = p.abs() - half;
    q.sup(&Vec3::zeros()).norm() + q.max().min(0.0)
}

pub fn torus_sdf(p: &Vec3, major: f64, minor: f64) -> f64 {
    let ring = (p.x * p.x + p.y * p.y).sqrt() - major;
    (ring * ring + p.z * p.z).sqrt() - minor
}

pub fn capsule_sdf(p: &Vec3, radius: f64, half_length: f64) -> f64 {
    let z = p.z.clamp(-half_length, half_length);
    (p - Vec3::new(0.0, 0.0, z)).norm() - radius
}

/// Extrudes a 2D distance along z with the given half thickness.
fn extrude(d2: f64, z: f64, half_thickness: f64) -> f64 {
    let w = (d2, z.abs() - half_thickness);
    w.0.max(w.1).min(0.0) + (w.0.max(0.0).powi(2) + w.1.max(0.0).powi(2)).sqrt()
}

fn box2_sdf(x: f64, y: f64, hx: f64, hy: f64) -> f64 {
    let (qx, qy) = (x.abs() - hx, y.abs() - hy);
    (qx.max(0.0).powi(2) + qy.max(0.0).powi(2)).sqrt() + qx.max(qy).min(0.0)
}

pub fn wheel_sdf(p: &Vec3, w: &WheelParams) -> f64 {
    let rho = (p.x * p.x + p.y * p.y).sqrt();
    let rim_mid = 0.5 * (w.rim_outer + w.rim_inner);
    let rim_half = 0.5 * (w.rim_outer - w.rim_inner);
    let rim = extrude((rho - rim_mid).abs() - rim_half, p.z, w.half_thickness);
    let hub = extrude(rho - w.hub_radius, p.z, w.half_thickness);
    let reach = 0.5 * rim_mid;
    let spokes = (0..w.spokes)
        .map(|i| {
            let a = TAU * i as f64 / w.spokes as f64;
            let (s, c) = a.sin_cos();
            let (u, v) = (c * p.x + s * p.y, -s * p.x + c * p.y);
            extrude(box2_sdf(u - reach, v, reach, w.strut_half_width), p.z, w.half_thickness)
        })
        .fold(f64::INFINITY, f64::min);
    rim.min(hub).min(spokes)
}

/// Contours `sdf` over `[-1, 1]^3` at the given lattice resolution.
pub fn mesh_from_sdf(resolution: usize, sdf: impl Fn(&Vec3) -> f64) -> Result<TriMesh, GeometryError> {
    let grid = ScalarGrid::sample_unit_domain(resolution, sdf)?;
    marching_cubes(&grid, 0.0)
}

pub fn wheel(params: &WheelParams, resolution: usize) -> Result<TriMesh, GeometryError> {
    params.validate()?;
    mesh_from_sdf(resolution, |p| wheel_sdf(p, params))
}

fn outward(mesh: TriMesh) -> TriMesh {
    if mesh_volume(&mesh) < 0.0 {
        mesh.flipped()
    } else {
        mesh
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::validate_watertight;

    #[test]
    fn primitives_are_closed_and_outward() {
        let meshes = [
            unit_cube(),
            icosphere(1.0, 2),
            torus(0.6, 0.2, 32, 16),
            capsule(0.3, 0.4, 24, 8),
        ];
        for m in &meshes {
            let r = validate_watertight(m);
            assert!(r.is_watertight, "{r:?}");
            assert_eq!(r.degenerate_face_count, 0);
            assert!(mesh_volume(m) > 0.0);
        }
        assert_eq!(meshes[2].euler_characteristic(), 0);
        assert_eq!(meshes[3].euler_characteristic(), 2);
    }

    #[test]
    fn cube_winding_matches_outward_convention() {
        assert!((mesh_volume(&unit_cube()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn analytic_sdfs_vanish_on_surface() {
        assert!(sphere_sdf(&Vec3::new(0.0, 0.5, 0.0), 0.5).abs() < 1e-15);
        assert!(box_sdf(&Vec3::new(0.5, 0.1, -0.2), &Vec3::repeat(0.5)).abs() < 1e-15);
        assert!((box_sdf(&Vec3::new(0.6, 0.0, 0.0), &Vec3::repeat(0.5)) - 0.1).abs() < 1e-12);
        assert!(torus_sdf(&Vec3::new(0.8, 0.0, 0.0), 0.6, 0.2).abs() < 1e-12);
        assert!(capsule_sdf(&Vec3::new(0.0, 0.0, 0.7), 0.3, 0.4).abs() < 1e-12);
        let w = WheelParams::default();
        assert!(wheel_sdf(&Vec3::zeros(), &w) < 0.0);
        assert!(wheel_sdf(&Vec3::new(0.0, 0.0, 0.5), &w) > 0.0);
    }

    #[test]
    fn capsule_volume_close_to_analytic() {
        let (r, h) = (0.3, 0.4);
        let exact = PI * r * r * 2.0 * h + 4.0 / 3.0 * PI * r.powi(3);
        let v = mesh_volume(&capsule(r, h, 96, 24));
        assert!((v - exact).abs() / exact < 0.01, "{v} vs {exact}");
    }
}
