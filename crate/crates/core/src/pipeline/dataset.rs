use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::shapes::{self, WheelParams};
use crate::geometry::{center_and_normalize, validate_watertight, GeometryError, TriMesh, Vec3, DEFAULT_TARGET_RADIUS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeFamily {
    Sphere,
    Box,
    Torus,
    Capsule,
    Wheel,
}

impl ShapeFamily {
    pub fn name(self) -> &'static str {
        match self {
            Self::Sphere => "sphere",
            Self::Box => "box",
            Self::Torus => "torus",
            Self::Capsule => "capsule",
            Self::Wheel => "wheel",
        }
    }

    /// Range of the family's shape parameter when none is configured:
    /// box side ratios, torus tube-to-ring ratio, capsule length-to-radius
    /// ratio, wheel strut half width. Spheres have no free parameter.
    pub fn default_range(self) -> [f64; 2] {
        match self {
            Self::Sphere => [1.0, 1.0],
            Self::Box => [0.5, 1.0],
            Self::Torus => [0.25, 0.45],
            Self::Capsule => [0.5, 1.5],
            Self::Wheel => [0.05, 0.1],
        }
    }
}

/// `count` shapes of one family with the family parameter drawn uniformly
/// from `range`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProceduralSpec {
    pub family: ShapeFamily,
    #[serde(default = "one")]
    pub count: usize,
    #[serde(default)]
    pub range: Option<[f64; 2]>,
    /// Strut count of wheels.
    #[serde(default = "four")]
    pub spokes: u32,
}

fn one() -> usize {
    1
}

fn four() -> u32 {
    4
}

impl ProceduralSpec {
    pub fn new(family: ShapeFamily, count: usize) -> Self {
        Self {
            family,
            count,
            range: None,
            spokes: 4,
        }
    }

    fn checked_range(&self) -> Result<[f64; 2], GeometryError> {
        let r = self.range.unwrap_or(self.family.default_range());
        let positive = r[0] > 0.0 && r[0] <= r[1] && r[1].is_finite();
        let valid = positive
            && match self.family {
                ShapeFamily::Box => r[1] <= 1.0,
                ShapeFamily::Torus => r[1] < 1.0,
                ShapeFamily::Wheel => r[1] <= 0.15,
                _ => true,
            };
        if !valid || self.spokes == 0 {
            return Err(GeometryError::InvalidArgument(format!(
                "invalid parameter range {r:?} for {} (spokes {})",
                self.family.name(),
                self.spokes
            )));
        }
        Ok(r)
    }
}

/// A generated mesh with its identifier.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedMesh {
    pub id: String,
    pub mesh: TriMesh,
}

/// Resolution of the lattice used to mesh wheels.
pub const WHEEL_RESOLUTION: usize = 64;

/// Watertight, normalized meshes for every procedural entry, in order. Identifiers are
/// `<family>_<index>` with the index counting across all entries.
pub fn generate_procedural_dataset(specs: &[ProceduralSpec], seed: u64) -> Result<Vec<NamedMesh>, GeometryError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for spec in specs {
        let [lo, hi] = spec.checked_range()?;
        for _ in 0..spec.count {
            let t = if hi > lo { rng.random_range(lo..=hi) } else { lo };
            let raw = match spec.family {
                ShapeFamily::Sphere => shapes::icosphere(1.0, 4),
                ShapeFamily::Box => {
                    let s = if hi > lo { rng.random_range(lo..=hi) } else { lo };
                    shapes::box_mesh(Vec3::new(1.0, t, s))
                }
                ShapeFamily::Torus => shapes::torus(1.0, t, 48, 24),
                ShapeFamily::Capsule => shapes::capsule(1.0, t, 32, 8),
                ShapeFamily::Wheel => shapes::wheel(
                    &WheelParams {
                        spokes: spec.spokes,
                        strut_half_width: t,
                        ..WheelParams::default()
                    },
                    WHEEL_RESOLUTION,
                )?,
            };
            let mesh = center_and_normalize(&raw, DEFAULT_TARGET_RADIUS)?;
            let report = validate_watertight(&mesh);
            if !report.is_watertight {
                return Err(GeometryError::NotWatertight {
                    boundary: report.boundary_edge_count,
                    flipped: report.flipped_edge_count,
                    nonmanifold: report.nonmanifold_edge_count,
                });
            }
            out.push(NamedMesh {
                id: format!("{}_{}", spec.family.name(), out.len()),
                mesh,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mesh_volume;
    use std::f64::consts::PI;

    #[test]
    fn every_family_is_watertight_and_normalized() {
        let specs: Vec<ProceduralSpec> = [
            ShapeFamily::Sphere,
            ShapeFamily::Box,
            ShapeFamily::Torus,
            ShapeFamily::Capsule,
            ShapeFamily::Wheel,
        ]
        .into_iter()
        .map(|f| ProceduralSpec::new(f, 1))
        .collect();
        let meshes = generate_procedural_dataset(&specs, 4).unwrap();
        assert_eq!(meshes.len(), 5);
        assert_eq!(meshes[2].id, "torus_2");
        for m in &meshes {
            let r = m.mesh.vertices().iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!((r - 0.9).abs() < 1e-9, "{}: {r}", m.id);
            assert!(mesh_volume(&m.mesh) > 0.0);
        }
    }

    #[test]
    fn sphere_volume_is_close_to_analytic() {
        let m = generate_procedural_dataset(&[ProceduralSpec::new(ShapeFamily::Sphere, 1)], 0).unwrap();
        let exact = 4.0 / 3.0 * PI * 0.9f64.powi(3);
        assert!((mesh_volume(&m[0].mesh) / exact - 1.0).abs() < 0.01);
    }

    #[test]
    fn same_seed_same_meshes() {
        let specs = [ProceduralSpec::new(ShapeFamily::Box, 3), ProceduralSpec::new(ShapeFamily::Torus, 2)];
        let a = generate_procedural_dataset(&specs, 11).unwrap();
        assert_eq!(a, generate_procedural_dataset(&specs, 11).unwrap());
        assert_ne!(a, generate_procedural_dataset(&specs, 12).unwrap());
    }

    #[test]
    fn four_spoke_wheel_has_quarter_turn_symmetry() {
        let m = generate_procedural_dataset(&[ProceduralSpec::new(ShapeFamily::Wheel, 1)], 0).unwrap();
        let verts = m[0].mesh.vertices();
        let mut sorted: Vec<Vec3> = verts.to_vec();
        sorted.sort_by(|a, b| a.x.total_cmp(&b.x));
        for v in verts {
            let r = Vec3::new(-v.y, v.x, v.z);
            let from = sorted.partition_point(|p| p.x < r.x - 1e-6);
            let hit = sorted[from..]
                .iter()
                .take_while(|p| p.x <= r.x + 1e-6)
                .any(|p| (p - r).amax() <= 1e-6);
            assert!(hit, "no rotated partner for {v:?}");
        }
    }

    #[test]
    fn rejects_bad_ranges() {
        let mut spec = ProceduralSpec::new(ShapeFamily::Torus, 1);
        spec.range = Some([0.5, 1.5]);
        assert!(generate_procedural_dataset(&[spec], 0).is_err());
        let mut spec = ProceduralSpec::new(ShapeFamily::Box, 1);
        spec.range = Some([0.8, 0.2]);
        assert!(generate_procedural_dataset(&[spec], 0).is_err());
    }
}
