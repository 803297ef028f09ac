//! Marching cubes over a regular scalar lattice.
//!
//! The 256-entry case table is generated once from the cube's face structure
//! instead of being transcribed. Each cube face decides its crossing segments
//! from its own four corner signs alone (on a face with four crossings the
//! inside corners are cut off separately), so neighbouring cells always agree
//! on the shared face and the extracted surface has no cracks.

use std::sync::OnceLock;

use super::{GeometryError, TriMesh, Vec3};

/// Scalar samples on an `n x n x n` lattice, x varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGrid {
    resolution: usize,
    origin: Vec3,
    spacing: f64,
    values: Vec<f64>,
}

impl ScalarGrid {
    pub fn new(resolution: usize, origin: Vec3, spacing: f64, values: Vec<f64>) -> Result<Self, GeometryError> {
        if resolution < 2 {
            return Err(GeometryError::InvalidArgument(format!("grid resolution {resolution} < 2")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(GeometryError::InvalidArgument(format!("grid spacing {spacing}")));
        }
        if values.len() != resolution.pow(3) {
            return Err(GeometryError::InvalidArgument(format!(
                "{} values for resolution {resolution}",
                values.len()
            )));
        }
        Ok(Self {
            resolution,
            origin,
            spacing,
            values,
        })
    }

    /// Lattice spanning `[-1, 1]^3` with `resolution` nodes per axis.
    pub fn unit_domain(resolution: usize, values: Vec<f64>) -> Result<Self, GeometryError> {
        let spacing = 2.0 / (resolution.max(2) - 1) as f64;
        Self::new(resolution, Vec3::repeat(-1.0), spacing, values)
    }

    /// Evaluates `f` at every node of the `[-1, 1]^3` lattice.
    pub fn sample_unit_domain(resolution: usize, f: impl Fn(&Vec3) -> f64) -> Result<Self, GeometryError> {
        if resolution < 2 {
            return Err(GeometryError::InvalidArgument(format!("grid resolution {resolution} < 2")));
        }
        let values = unit_lattice_points(resolution).iter().map(f).collect();
        Self::unit_domain(resolution, values)
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.resolution * (j + self.resolution * k)
    }

    pub fn position(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin + Vec3::new(i as f64, j as f64, k as f64) * self.spacing
    }
}

/// Node positions of the `[-1, 1]^3` lattice in storage order.
pub(crate) fn unit_lattice_points(resolution: usize) -> Vec<Vec3> {
    let h = 2.0 / (resolution - 1) as f64;
    let coord = |i: usize| -1.0 + i as f64 * h;
    let mut pts = Vec::with_capacity(resolution.pow(3));
    for k in 0..resolution {
        for j in 0..resolution {
            for i in 0..resolution {
                pts.push(Vec3::new(coord(i), coord(j), coord(k)));
            }
        }
    }
    pts
}

const CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

const EDGES: [[usize; 2]; 12] = [
    [0, 1],
    [1, 2],
    [2, 3],
    [3, 0],
    [4, 5],
    [5, 6],
    [6, 7],
    [7, 4],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

/// Cube faces as cyclic corner loops with their outward normals.
const FACES: [([usize; 4], [f64; 3]); 6] = [
    ([0, 1, 2, 3], [0.0, 0.0, -1.0]),
    ([4, 5, 6, 7], [0.0, 0.0, 1.0]),
    ([0, 1, 5, 4], [0.0, -1.0, 0.0]),
    ([3, 2, 6, 7], [0.0, 1.0, 0.0]),
    ([0, 3, 7, 4], [-1.0, 0.0, 0.0]),
    ([1, 2, 6, 5], [1.0, 0.0, 0.0]),
];

fn edge_between(a: usize, b: usize) -> usize {
    EDGES
        .iter()
        .position(|e| (e[0] == a && e[1] == b) || (e[0] == b && e[1] == a))
        .expect("face corners are cube-adjacent")
}

fn corner_pos(c: usize) -> Vec3 {
    Vec3::new(CORNERS[c][0] as f64, CORNERS[c][1] as f64, CORNERS[c][2] as f64)
}

/// Crossing loops of one inside-corner bitmask, triangulated.
fn triangulate_case(case: usize) -> Vec<Vec<[u8; 3]>> {
    let inside = |c: usize| case & (1 << c) != 0;
    let mid = |e: usize| (corner_pos(EDGES[e][0]) + corner_pos(EDGES[e][1])) * 0.5;
    // next[e] = successor of crossing edge e along its loop
    let mut next = [usize::MAX; 12];
    for (loop_corners, normal) in FACES {
        let normal = Vec3::from(normal);
        let face_edges: Vec<usize> = (0..4)
            .map(|i| edge_between(loop_corners[i], loop_corners[(i + 1) % 4]))
            .filter(|&e| inside(EDGES[e][0]) != inside(EDGES[e][1]))
            .collect();
        let pairs: Vec<(usize, usize)> = match face_edges.len() {
            0 => vec![],
            2 => vec![(face_edges[0], face_edges[1])],
            4 => loop_corners
                .iter()
                .enumerate()
                .filter(|(_, &c)| inside(c))
                .map(|(i, &c)| {
                    (
                        edge_between(loop_corners[(i + 3) % 4], c),
                        edge_between(c, loop_corners[(i + 1) % 4]),
                    )
                })
                .collect(),
            _ => unreachable!("a face has an even number of sign changes"),
        };
        for (e1, e2) in pairs {
            // orient so the inside corner of e1 lies on the left seen from outside
            let inner = if inside(EDGES[e1][0]) { EDGES[e1][0] } else { EDGES[e1][1] };
            let (p, q) = (mid(e1), mid(e2));
            let side = (q - p).cross(&(corner_pos(inner) - p)).dot(&normal);
            let (from, to) = if side > 0.0 { (e1, e2) } else { (e2, e1) };
            next[from] = to;
        }
    }
    let mut visited = [false; 12];
    let mut loops = Vec::new();
    for start in 0..12 {
        if next[start] == usize::MAX || visited[start] {
            continue;
        }
        let mut cycle = vec![start];
        visited[start] = true;
        let mut e = next[start];
        while e != start {
            visited[e] = true;
            cycle.push(e);
            e = next[e];
        }
        loops.push(fan(&cycle));
    }
    loops
}

fn faces_of_edge(e: usize) -> [usize; 2] {
    let mut out = [usize::MAX; 2];
    let mut n = 0;
    for (f, (corners, _)) in FACES.iter().enumerate() {
        if corners.contains(&EDGES[e][0]) && corners.contains(&EDGES[e][1]) {
            out[n] = f;
            n += 1;
        }
    }
    out
}

fn share_face(a: usize, b: usize) -> bool {
    let fb = faces_of_edge(b);
    faces_of_edge(a).iter().any(|f| fb.contains(f))
}

/// Triangulates one crossing loop. A diagonal between two edges of a common
/// cube face could be chosen by the neighbouring cell as well, so the fan
/// apex is picked to avoid those; loops with no such apex are fanned around
/// an extra centre vertex ([`LOOP_CENTRE`]).
fn fan(cycle: &[usize]) -> Vec<[u8; 3]> {
    let n = cycle.len();
    let apex = (0..n).find(|&s| (2..n - 1).all(|i| !share_face(cycle[s], cycle[(s + i) % n])));
    // the loop runs clockwise about the outward normal, so triangles are
    // emitted reversed
    match apex {
        Some(s) => (1..n - 1)
            .map(|i| [cycle[s] as u8, cycle[(s + i + 1) % n] as u8, cycle[(s + i) % n] as u8])
            .collect(),
        None => (0..n)
            .map(|i| [LOOP_CENTRE, cycle[(i + 1) % n] as u8, cycle[i] as u8])
            .collect(),
    }
}

/// Marker for the centre vertex of a loop in the case table.
const LOOP_CENTRE: u8 = 12;

/// Per case, the triangles of each crossing loop as cube-edge triples.
fn case_table() -> &'static [Vec<Vec<[u8; 3]>>] {
    static TABLE: OnceLock<Vec<Vec<Vec<[u8; 3]>>>> = OnceLock::new();
    TABLE.get_or_init(|| (0..256).map(triangulate_case).collect())
}

/// Extracts the `iso` level set. Values below `iso` count as inside; the
/// resulting faces are wound so normals point toward larger values.
pub fn marching_cubes(grid: &ScalarGrid, iso: f64) -> Result<TriMesh, GeometryError> {
    if !iso.is_finite() {
        return Err(GeometryError::InvalidArgument(format!("iso value {iso}")));
    }
    let n = grid.resolution();
    let values = grid.values();
    let table = case_table();
    // vertex id per lattice edge, keyed by (node index, axis)
    let mut edge_vertex = vec![u32::MAX; n * n * n * 3];
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut ids = [0u32; 13];
    for k in 0..n - 1 {
        for j in 0..n - 1 {
            for i in 0..n - 1 {
                let node = |c: usize| grid.index(i + CORNERS[c][0], j + CORNERS[c][1], k + CORNERS[c][2]);
                let mut case = 0usize;
                for c in 0..8 {
                    if values[node(c)] < iso {
                        case |= 1 << c;
                    }
                }
                let loops = &table[case];
                if loops.is_empty() {
                    continue;
                }
                for (e, &[a, b]) in EDGES.iter().enumerate() {
                    let (na, nb) = (node(a), node(b));
                    if (values[na] < iso) == (values[nb] < iso) {
                        continue;
                    }
                    let (lo, hi) = if na < nb { (a, b) } else { (b, a) };
                    let axis = (0..3).find(|&d| CORNERS[lo][d] != CORNERS[hi][d]).unwrap();
                    let key = node(lo) * 3 + axis;
                    if edge_vertex[key] == u32::MAX {
                        let (va, vb) = (values[node(lo)], values[node(hi)]);
                        let t = ((iso - va) / (vb - va)).clamp(0.0, 1.0);
                        let pa = grid.position(i + CORNERS[lo][0], j + CORNERS[lo][1], k + CORNERS[lo][2]);
                        let pb = grid.position(i + CORNERS[hi][0], j + CORNERS[hi][1], k + CORNERS[hi][2]);
                        vertices.push(pa + (pb - pa) * t);
                        edge_vertex[key] = (vertices.len() - 1) as u32;
                    }
                    ids[e] = edge_vertex[key];
                }
                for tris in loops {
                    if tris.iter().any(|t| t[0] == LOOP_CENTRE) {
                        let centre = tris.iter().map(|t| vertices[ids[t[1] as usize] as usize]).sum::<Vec3>()
                            / tris.len() as f64;
                        vertices.push(centre);
                        ids[LOOP_CENTRE as usize] = (vertices.len() - 1) as u32;
                    }
                    for t in tris {
                        faces.push([ids[t[0] as usize], ids[t[1] as usize], ids[t[2] as usize]]);
                    }
                }
            }
        }
    }
    if faces.is_empty() {
        return Err(GeometryError::EmptyIsoSurface { iso });
    }
    TriMesh::new(vertices, faces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes::{box_sdf, sphere_sdf, torus_sdf};
    use crate::geometry::{mesh_volume, validate_watertight};

    #[test]
    fn random_fields_give_closed_manifolds() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for trial in 0..400 {
            let n = 4 + trial % 5;
            let values: Vec<f64> = (0..n * n * n)
                .map(|idx| {
                    let (i, j, k) = (idx % n, idx / n % n, idx / (n * n));
                    if [i, j, k].iter().any(|&c| c == 0 || c == n - 1) {
                        1.0
                    } else {
                        rng.random_range(-1.0..1.0)
                    }
                })
                .collect();
            let grid = ScalarGrid::unit_domain(n, values).unwrap();
            let Ok(mesh) = marching_cubes(&grid, 0.0) else { continue };
            let report = validate_watertight(&mesh);
            assert!(report.is_watertight, "trial {trial}: {report:?}");
        }
    }

    #[test]
    fn table_uses_exactly_the_crossing_edges() {
        let table = case_table();
        assert!(table[0].is_empty() && table[255].is_empty());
        assert_eq!(table[1].len(), 1);
        for (case, loops) in table.iter().enumerate() {
            let inside = |c: usize| case & (1 << c) != 0;
            let crossing: Vec<usize> = (0..12).filter(|&e| inside(EDGES[e][0]) != inside(EDGES[e][1])).collect();
            let mut used: Vec<usize> = loops
                .iter()
                .flatten()
                .flatten()
                .filter(|&&e| e != LOOP_CENTRE)
                .map(|&e| e as usize)
                .collect();
            used.sort_unstable();
            used.dedup();
            assert_eq!(used, crossing, "case {case}");
        }
    }

    #[test]
    fn single_corner_triangle_faces_away_from_it() {
        let tri = case_table()[1][0][0];
        let mid = |e: u8| (corner_pos(EDGES[e as usize][0]) + corner_pos(EDGES[e as usize][1])) * 0.5;
        let (a, b, c) = (mid(tri[0]), mid(tri[1]), mid(tri[2]));
        let normal = (b - a).cross(&(c - a));
        assert!(normal.dot(&Vec3::repeat(1.0)) > 0.0);
    }

    #[test]
    fn sphere_is_closed_with_accurate_volume() {
        let grid = ScalarGrid::sample_unit_domain(64, |p| sphere_sdf(p, 0.5)).unwrap();
        let mesh = marching_cubes(&grid, 0.0).unwrap();
        assert!(validate_watertight(&mesh).is_watertight);
        let exact = 4.0 / 3.0 * std::f64::consts::PI * 0.125;
        assert!((mesh_volume(&mesh) - exact).abs() / exact < 0.02);
    }

    #[test]
    fn box_and_torus_topology() {
        let half = Vec3::new(0.5, 0.3, 0.4);
        let grid = ScalarGrid::sample_unit_domain(33, |p| box_sdf(p, &half)).unwrap();
        let m = marching_cubes(&grid, 0.0).unwrap();
        assert!(validate_watertight(&m).is_watertight);
        assert_eq!(m.euler_characteristic(), 2);
        let grid = ScalarGrid::sample_unit_domain(40, |p| torus_sdf(p, 0.55, 0.2)).unwrap();
        let m = marching_cubes(&grid, 0.0).unwrap();
        assert!(validate_watertight(&m).is_watertight);
        assert_eq!(m.euler_characteristic(), 0);
    }

    #[test]
    fn one_sided_grid_is_empty() {
        let grid = ScalarGrid::unit_domain(4, vec![1.0; 64]).unwrap();
        assert!(matches!(
            marching_cubes(&grid, 0.0),
            Err(GeometryError::EmptyIsoSurface { .. })
        ));
    }

    #[test]
    fn grid_shape_is_checked() {
        assert!(ScalarGrid::unit_domain(4, vec![0.0; 63]).is_err());
        assert!(ScalarGrid::new(1, Vec3::zeros(), 1.0, vec![0.0]).is_err());
        assert!(ScalarGrid::new(2, Vec3::zeros(), 0.0, vec![0.0; 8]).is_err());
    }
}
