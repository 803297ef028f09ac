use serde::{Deserialize, Serialize};

use super::{GeometryError, TriMesh, Vec3};

/// Enclosed volume by the signed tetrahedron sum; positive for outward
/// winding.
pub fn mesh_volume(mesh: &TriMesh) -> f64 {
    mesh.triangles().map(|[a, b, c]| a.dot(&b.cross(&c))).sum::<f64>() / 6.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    /// In-plane coordinates `(u, v)` of a point projected along this axis.
    fn project(self, p: &Vec3) -> (f64, f64) {
        match self {
            Axis::X => (p.y, p.z),
            Axis::Y => (p.z, p.x),
            Axis::Z => (p.x, p.y),
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            _ => Err(GeometryError::InvalidArgument(format!("unknown axis {s:?}"))),
        }
    }
}

/// Occupancy raster of a mesh projected along an axis onto a
/// `resolution x resolution` pixel grid covering `[-1, 1]^2`. A pixel is
/// covered when its center lies in some projected triangle.
#[derive(Debug, Clone)]
pub struct Silhouette {
    resolution: usize,
    covered: Vec<bool>,
}

impl Silhouette {
    pub fn rasterize(mesh: &TriMesh, axis: Axis, resolution: usize) -> Result<Self, GeometryError> {
        if resolution == 0 {
            return Err(GeometryError::InvalidArgument("raster resolution 0".into()));
        }
        let h = 2.0 / resolution as f64;
        let center = |i: usize| -1.0 + (i as f64 + 0.5) * h;
        let mut covered = vec![false; resolution * resolution];
        for tri in mesh.triangles() {
            let [a, b, c] = tri.map(|p| axis.project(&p));
            let area2 = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
            if area2 == 0.0 {
                continue;
            }
            let lo_u = a.0.min(b.0).min(c.0);
            let hi_u = a.0.max(b.0).max(c.0);
            let lo_v = a.1.min(b.1).min(c.1);
            let hi_v = a.1.max(b.1).max(c.1);
            let to_px = |x: f64| ((x + 1.0) / h - 0.5).clamp(0.0, (resolution - 1) as f64);
            let (i0, i1) = (to_px(lo_u).floor() as usize, to_px(hi_u).ceil() as usize);
            let (j0, j1) = (to_px(lo_v).floor() as usize, to_px(hi_v).ceil() as usize);
            let edge = |p: (f64, f64), q: (f64, f64), r: (f64, f64)| {
                ((q.0 - p.0) * (r.1 - p.1) - (q.1 - p.1) * (r.0 - p.0)) * area2.signum()
            };
            for j in j0..=j1 {
                for i in i0..=i1 {
                    let px = (center(i), center(j));
                    if edge(a, b, px) >= 0.0 && edge(b, c, px) >= 0.0 && edge(c, a, px) >= 0.0 {
                        covered[j * resolution + i] = true;
                    }
                }
            }
        }
        Ok(Self { resolution, covered })
    }

    fn pixel_area(&self) -> f64 {
        (2.0 / self.resolution as f64).powi(2)
    }

    fn covered_centers(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = 2.0 / self.resolution as f64;
        self.covered.iter().enumerate().filter(|(_, &c)| c).map(move |(idx, _)| {
            let (i, j) = (idx % self.resolution, idx / self.resolution);
            (-1.0 + (i as f64 + 0.5) * h, -1.0 + (j as f64 + 0.5) * h)
        })
    }

    pub fn area(&self) -> f64 {
        self.covered.iter().filter(|&&c| c).count() as f64 * self.pixel_area()
    }

    /// Polar second moment of the silhouette about the projection axis,
    /// integrated exactly over each covered pixel.
    pub fn polar_moment(&self) -> f64 {
        let h = 2.0 / self.resolution as f64;
        let own = h * h / 6.0;
        self.covered_centers().map(|(u, v)| u * u + v * v + own).sum::<f64>() * self.pixel_area()
    }
}

/// Area of the mesh silhouette seen along `axis`.
pub fn frontal_projected_area(mesh: &TriMesh, axis: Axis, resolution: usize) -> Result<f64, GeometryError> {
    Ok(Silhouette::rasterize(mesh, axis, resolution)?.area())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes::{box_mesh, icosphere, unit_cube};
    use std::f64::consts::PI;

    #[test]
    fn cube_volume_and_sign() {
        assert!((mesh_volume(&unit_cube()) - 1.0).abs() < 1e-9);
        assert!((mesh_volume(&unit_cube().flipped()) + 1.0).abs() < 1e-9);
    }

    #[test]
    fn icosphere_volume() {
        let v = mesh_volume(&icosphere(1.0, 4));
        let exact = 4.0 * PI / 3.0;
        assert!((v - exact).abs() / exact < 0.01);
    }

    #[test]
    fn projected_areas() {
        let a = frontal_projected_area(&unit_cube(), Axis::X, 256).unwrap();
        assert!((a - 1.0).abs() < 0.02);
        let s = frontal_projected_area(&icosphere(0.5, 4), Axis::X, 256).unwrap();
        assert!((s - PI * 0.25).abs() / (PI * 0.25) < 0.02);
        let empty = TriMesh::new(vec![], vec![]).unwrap();
        assert_eq!(frontal_projected_area(&empty, Axis::Z, 64).unwrap(), 0.0);
    }

    #[test]
    fn axes_see_different_extents() {
        let slab = box_mesh(Vec3::new(0.8, 0.2, 0.4));
        let ax = frontal_projected_area(&slab, Axis::X, 200).unwrap();
        let ay = frontal_projected_area(&slab, Axis::Y, 200).unwrap();
        let az = frontal_projected_area(&slab, Axis::Z, 200).unwrap();
        assert!((ax - 0.32).abs() < 0.01 && (ay - 1.28).abs() < 0.02 && (az - 0.64).abs() < 0.01);
    }

    #[test]
    fn square_polar_moment() {
        // square of side s: J = s^4 / 6
        let sil = Silhouette::rasterize(&unit_cube(), Axis::Z, 256).unwrap();
        assert!((sil.polar_moment() - 1.0 / 6.0).abs() < 1e-3);
    }
}
