//! Chamfer distance, minimum matching distance and coverage between sets of
//! surface point clouds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{sample_surface_points, GeometryError, TriMesh, Vec3};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("point cloud {0:?} contains a non-finite coordinate")]
    NonFinite(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    source_id: String,
    points: Vec<Vec3>,
}

impl PointCloud {
    pub fn new(source_id: impl Into<String>, points: Vec<Vec3>) -> Result<Self, MetricsError> {
        let source_id = source_id.into();
        if points.is_empty() {
            return Err(MetricsError::Empty("point cloud"));
        }
        if points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(MetricsError::NonFinite(source_id));
        }
        Ok(Self { source_id, points })
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `n` area-weighted uniform samples of the mesh surface.
pub fn sample_surface(mesh: &TriMesh, n: usize, seed: u64, source_id: &str) -> Result<PointCloud, MetricsError> {
    if n == 0 {
        return Err(MetricsError::Empty("sample count"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PointCloud::new(source_id, sample_surface_points(mesh, n, &mut rng)?)
}

/// Clouds at most this large are searched exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 2000;

/// Uniform bucket grid over a point set for exact nearest-neighbour queries.
struct BucketGrid<'a> {
    points: &'a [Vec3],
    lo: Vec3,
    cell: f64,
    dims: [i64; 3],
    start: Vec<usize>,
    order: Vec<usize>,
}

impl<'a> BucketGrid<'a> {
    fn new(points: &'a [Vec3]) -> Self {
        let mut lo = points[0];
        let mut hi = points[0];
        for p in points {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let extent = (hi - lo).max().max(1e-12);
        let per_axis = ((points.len() as f64 / 2.0).cbrt().ceil() as i64).max(1);
        let cell = extent / per_axis as f64;
        let dims = [0, 1, 2].map(|a| ((((hi[a] - lo[a]) / cell).floor() as i64) + 1).max(1));
        let mut grid = Self {
            points,
            lo,
            cell,
            dims,
            start: Vec::new(),
            order: Vec::new(),
        };
        let n_cells = (dims[0] * dims[1] * dims[2]) as usize;
        let keys: Vec<usize> = points.iter().map(|p| grid.flat(grid.cell_of(p))).collect();
        let mut counts = vec![0usize; n_cells + 1];
        for &k in &keys {
            counts[k + 1] += 1;
        }
        for i in 0..n_cells {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut order = vec![0; points.len()];
        for (i, &k) in keys.iter().enumerate() {
            order[fill[k]] = i;
            fill[k] += 1;
        }
        grid.start = counts;
        grid.order = order;
        grid
    }

    fn cell_of(&self, p: &Vec3) -> [i64; 3] {
        [0, 1, 2].map(|a| (((p[a] - self.lo[a]) / self.cell).floor() as i64).clamp(0, self.dims[a] - 1))
    }

    fn flat(&self, c: [i64; 3]) -> usize {
        (c[0] + self.dims[0] * (c[1] + self.dims[1] * c[2])) as usize
    }

    fn nearest_squared(&self, q: &Vec3) -> f64 {
        let c = self.cell_of(q);
        let max_ring = self.dims.iter().max().copied().unwrap_or(1);
        let mut best = f64::INFINITY;
        for r in 0..=max_ring {
            for dk in -r..=r {
                for dj in -r..=r {
                    for di in -r..=r {
                        if di.abs().max(dj.abs()).max(dk.abs()) != r {
                            continue;
                        }
                        let cell = [c[0] + di, c[1] + dj, c[2] + dk];
                        if (0..3).any(|a| cell[a] < 0 || cell[a] >= self.dims[a]) {
                            continue;
                        }
                        let f = self.flat(cell);
                        for &i in &self.order[self.start[f]..self.start[f + 1]] {
                            best = best.min((self.points[i] - q).norm_squared());
                        }
                    }
                }
            }
            // every point outside the searched block is more than r cells
            // away; the slack absorbs rounding in the cell assignment
            let reach = (r as f64 - 0.01) * self.cell;
            if r > 0 && best <= reach * reach {
                break;
            }
        }
        best
    }
}

fn nearest_squared_exhaustive(points: &[Vec3], q: &Vec3) -> f64 {
    points.iter().map(|p| (p - q).norm_squared()).fold(f64::INFINITY, f64::min)
}

/// Sum over `from` of the squared distance to the nearest point of `to`.
fn one_sided(from: &[Vec3], to: &[Vec3]) -> f64 {
    if to.len() <= EXHAUSTIVE_LIMIT {
        from.iter().map(|q| nearest_squared_exhaustive(to, q)).sum()
    } else {
        let grid = BucketGrid::new(to);
        from.iter().map(|q| grid.nearest_squared(q)).sum()
    }
}

/// Symmetric chamfer distance in sum form: nearest-neighbour squared
/// distances summed over both clouds.
pub fn chamfer_distance(a: &PointCloud, b: &PointCloud) -> f64 {
    one_sided(&a.points, &b.points) + one_sided(&b.points, &a.points)
}

/// `d[g][r]` = chamfer distance between generated cloud `g` and reference `r`.
pub fn distance_matrix(generated: &[PointCloud], reference: &[PointCloud]) -> Result<Vec<Vec<f64>>, MetricsError> {
    if generated.is_empty() {
        return Err(MetricsError::Empty("generated set"));
    }
    if reference.is_empty() {
        return Err(MetricsError::Empty("reference set"));
    }
    Ok(generated
        .iter()
        .map(|g| reference.iter().map(|r| chamfer_distance(g, r)).collect())
        .collect())
}

/// Mean over reference clouds of the distance to the closest generated cloud.
pub fn mmd(generated: &[PointCloud], reference: &[PointCloud]) -> Result<f64, MetricsError> {
    Ok(mmd_from_matrix(&distance_matrix(generated, reference)?))
}

pub fn mmd_from_matrix(d: &[Vec<f64>]) -> f64 {
    let refs = d[0].len();
    (0..refs)
        .map(|r| d.iter().map(|row| row[r]).fold(f64::INFINITY, f64::min))
        .sum::<f64>()
        / refs as f64
}

/// Fraction of reference clouds that are the nearest match of at least one
/// generated cloud. Ties go to the lowest reference index.
pub fn coverage(generated: &[PointCloud], reference: &[PointCloud]) -> Result<f64, MetricsError> {
    Ok(coverage_from_matrix(&distance_matrix(generated, reference)?))
}

pub fn coverage_from_matrix(d: &[Vec<f64>]) -> f64 {
    let refs = d[0].len();
    let mut hit = vec![false; refs];
    for row in d {
        let mut best = 0;
        for r in 1..refs {
            if row[r] < row[best] {
                best = r;
            }
        }
        hit[best] = true;
    }
    hit.iter().filter(|h| **h).count() as f64 / refs as f64
}

/// Aggregate reconstruction quality, formatted like a results table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsSummary {
    pub cd_mean: f64,
    pub cd_median: f64,
    pub mmd: f64,
    pub coverage: f64,
}

impl MetricsSummary {
    /// `per_shape_cd` holds each reconstruction's distance to its own
    /// reference; `matrix` is the full generated-by-reference table.
    pub fn new(per_shape_cd: &[f64], matrix: &[Vec<f64>]) -> Result<Self, MetricsError> {
        if per_shape_cd.is_empty() || matrix.is_empty() {
            return Err(MetricsError::Empty("reconstruction set"));
        }
        let mut sorted = per_shape_cd.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let cd_median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        Ok(Self {
            cd_mean: per_shape_cd.iter().sum::<f64>() / n as f64,
            cd_median,
            mmd: mmd_from_matrix(matrix),
            coverage: coverage_from_matrix(matrix),
        })
    }

    /// `metric,value,value_x1000` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value,value_x1000\n");
        for (name, v) in [
            ("cd_mean", self.cd_mean),
            ("cd_median", self.cd_median),
            ("mmd", self.mmd),
            ("cov", self.coverage),
        ] {
            out.push_str(&format!("{name},{v},{}\n", v * 1000.0));
        }
        out
    }
}
