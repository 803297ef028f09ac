use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{GeometryError, MeshSdf, TriMesh, Vec3};

/// Signed-distance training pairs for one shape.
#[derive(Debug, Clone, PartialEq)]
pub struct SdfSampleSet {
    pub shape_id: String,
    pub points: Vec<Vec3>,
    pub distances: Vec<f64>,
}

impl SdfSampleSet {
    pub fn new(shape_id: impl Into<String>, points: Vec<Vec3>, distances: Vec<f64>) -> Result<Self, GeometryError> {
        if points.len() != distances.len() {
            return Err(GeometryError::InvalidArgument(format!(
                "{} points but {} distances",
                points.len(),
                distances.len()
            )));
        }
        if let Some(p) = points.iter().find(|p| p.amax() > 1.0) {
            return Err(GeometryError::InvalidArgument(format!(
                "sample {:?} outside [-1, 1]^3",
                p.as_slice()
            )));
        }
        if distances.iter().any(|d| !d.is_finite()) {
            return Err(GeometryError::InvalidArgument("non-finite distance".into()));
        }
        Ok(Self {
            shape_id: shape_id.into(),
            points,
            distances,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Mix of near-surface and uniform samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SdfSampling {
    /// Fraction of points drawn near the surface; the rest are uniform in
    /// the domain.
    pub near_fraction: f64,
    /// Standard deviations of the two noise tiers; the near-surface points
    /// are split evenly between them.
    pub sigmas: [f64; 2],
}

impl Default for SdfSampling {
    fn default() -> Self {
        Self {
            near_fraction: 0.95,
            sigmas: [0.01, 0.05],
        }
    }
}

impl SdfSampling {
    /// Number of near-surface points out of `n_total`.
    pub fn near_count(&self, n_total: usize) -> usize {
        (n_total as f64 * self.near_fraction).round() as usize
    }
}

/// Area-weighted uniform points on the surface.
pub fn sample_surface_points(mesh: &TriMesh, n: usize, rng: &mut impl Rng) -> Result<Vec<Vec3>, GeometryError> {
    if mesh.is_empty() {
        return Err(GeometryError::EmptyMesh);
    }
    let mut cdf = Vec::with_capacity(mesh.faces().len());
    let mut acc = 0.0;
    for f in 0..mesh.faces().len() {
        acc += mesh.face_area(f);
        cdf.push(acc);
    }
    if acc <= 0.0 {
        return Err(GeometryError::ZeroExtent);
    }
    Ok((0..n)
        .map(|_| {
            let r = rng.random::<f64>() * acc;
            let face = cdf.partition_point(|&c| c <= r).min(cdf.len() - 1);
            let [a, b, c] = mesh.triangle(face);
            let (u, v): (f64, f64) = (rng.random(), rng.random());
            let su = u.sqrt();
            a * (1.0 - su) + b * (su * (1.0 - v)) + c * (su * v)
        })
        .collect())
}

/// Draws `n_total` (point, signed distance) pairs for a watertight mesh that
/// has been normalized into `[-1, 1]^3`.
pub fn sample_sdf(
    mesh: &TriMesh,
    shape_id: &str,
    n_total: usize,
    sampling: &SdfSampling,
    seed: u64,
) -> Result<SdfSampleSet, GeometryError> {
    if n_total < 100 {
        return Err(GeometryError::InvalidArgument(format!(
            "need at least 100 samples, got {n_total}"
        )));
    }
    if !(0.0..=1.0).contains(&sampling.near_fraction) || sampling.sigmas.iter().any(|s| !(*s >= 0.0)) {
        return Err(GeometryError::InvalidArgument(format!("bad sampling config {sampling:?}")));
    }
    if let Some((lo, hi)) = mesh.bounds() {
        if lo.amin() < -1.0 || hi.amax() > 1.0 {
            return Err(GeometryError::InvalidArgument("mesh is not normalized into [-1, 1]^3".into()));
        }
    }
    let sdf = MeshSdf::new(mesh)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_near = sampling.near_count(n_total);
    let surface = sample_surface_points(mesh, n_near, &mut rng)?;
    let mut points = Vec::with_capacity(n_total);
    for (i, s) in surface.into_iter().enumerate() {
        let sigma = sampling.sigmas[usize::from(i >= n_near / 2)];
        let offset = if sigma > 0.0 {
            let normal = Normal::new(0.0, sigma).expect("finite sigma");
            Vec3::new(normal.sample(&mut rng), normal.sample(&mut rng), normal.sample(&mut rng))
        } else {
            Vec3::zeros()
        };
        points.push((s + offset).map(|c| c.clamp(-1.0, 1.0)));
    }
    for _ in n_near..n_total {
        points.push(Vec3::new(
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
        ));
    }
    let distances = points.iter().map(|p| sdf.distance(p)).collect();
    SdfSampleSet::new(shape_id, points, distances)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes::{icosphere, unit_cube};

    #[test]
    fn counts_follow_the_mix() {
        let sphere = icosphere(0.8, 3);
        let set = sample_sdf(&sphere, "s", 15_000, &SdfSampling::default(), 1).unwrap();
        assert_eq!(set.len(), 15_000);
        assert_eq!(SdfSampling::default().near_count(15_000), 14_250);
        assert!(set.points.iter().all(|p| p.amax() <= 1.0));
    }

    #[test]
    fn zero_noise_samples_sit_on_the_surface() {
        let cfg = SdfSampling {
            near_fraction: 1.0,
            sigmas: [0.0, 0.0],
        };
        let set = sample_sdf(&unit_cube(), "c", 500, &cfg, 9).unwrap();
        assert!(set.distances.iter().all(|d| d.abs() < 1e-6));
    }

    #[test]
    fn deterministic_per_seed() {
        let m = icosphere(0.5, 2);
        let a = sample_sdf(&m, "s", 300, &SdfSampling::default(), 42).unwrap();
        let b = sample_sdf(&m, "s", 300, &SdfSampling::default(), 42).unwrap();
        let c = sample_sdf(&m, "s", 300, &SdfSampling::default(), 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn signs_match_the_analytic_sphere() {
        let m = icosphere(0.6, 4);
        let set = sample_sdf(&m, "s", 2000, &SdfSampling::default(), 5).unwrap();
        for (p, d) in set.points.iter().zip(&set.distances) {
            let exact = p.norm() - 0.6;
            if exact.abs() > 0.01 {
                assert_eq!(d.signum(), exact.signum(), "{p:?}");
            }
        }
    }

    #[test]
    fn rejects_small_or_unnormalized_requests() {
        assert!(sample_sdf(&unit_cube(), "c", 99, &SdfSampling::default(), 0).is_err());
        let big = unit_cube().map_vertices(|v| v * 4.0);
        assert!(sample_sdf(&big, "c", 100, &SdfSampling::default(), 0).is_err());
    }
}
