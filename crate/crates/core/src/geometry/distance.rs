//! Point-to-mesh distance queries with inside/outside classification.

use super::{validate_watertight, GeometryError, TriMesh, Vec3};

/// Closest point to `p` on triangle `abc` (Voronoi-region walk).
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

pub(crate) fn triangle_distance_squared(p: &Vec3, tri: &[Vec3; 3]) -> f64 {
    (p - closest_point_on_triangle(p, &tri[0], &tri[1], &tri[2])).norm_squared()
}

#[derive(Debug, Clone, Copy)]
struct Aabb {
    lo: Vec3,
    hi: Vec3,
}

impl Aabb {
    fn empty() -> Self {
        Self {
            lo: Vec3::repeat(f64::INFINITY),
            hi: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    fn grow(&mut self, p: &Vec3) {
        self.lo = self.lo.inf(p);
        self.hi = self.hi.sup(p);
    }

    fn distance_squared(&self, p: &Vec3) -> f64 {
        let d = (self.lo - p).sup(&(p - self.hi)).sup(&Vec3::zeros());
        d.norm_squared()
    }

    /// Slab test for the ray `origin + t * dir`, `t >= 0`.
    fn hit_by_ray(&self, origin: &Vec3, inv_dir: &Vec3) -> bool {
        let mut tmin = 0.0f64;
        let mut tmax = f64::INFINITY;
        for i in 0..3 {
            let t1 = (self.lo[i] - origin[i]) * inv_dir[i];
            let t2 = (self.hi[i] - origin[i]) * inv_dir[i];
            tmin = tmin.max(t1.min(t2));
            tmax = tmax.min(t1.max(t2));
        }
        tmin <= tmax
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { bounds: Aabb, start: usize, end: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

const LEAF_SIZE: usize = 4;

/// Bounding-volume hierarchy over the triangles of one mesh.
#[derive(Debug, Clone)]
struct Bvh {
    nodes: Vec<Node>,
    order: Vec<usize>,
}

impl Bvh {
    fn build(tris: &[[Vec3; 3]]) -> Self {
        let centroids: Vec<Vec3> = tris.iter().map(|t| (t[0] + t[1] + t[2]) / 3.0).collect();
        let mut bvh = Bvh {
            nodes: Vec::with_capacity(2 * tris.len() / LEAF_SIZE + 1),
            order: (0..tris.len()).collect(),
        };
        bvh.build_range(tris, &centroids, 0, tris.len());
        bvh
    }

    fn build_range(&mut self, tris: &[[Vec3; 3]], centroids: &[Vec3], start: usize, end: usize) -> usize {
        let mut bounds = Aabb::empty();
        let mut cbounds = Aabb::empty();
        for &t in &self.order[start..end] {
            for v in &tris[t] {
                bounds.grow(v);
            }
            cbounds.grow(&centroids[t]);
        }
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { bounds, start, end });
            return id;
        }
        let extent = cbounds.hi - cbounds.lo;
        let axis = extent.imax();
        let mid = (start + end) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            centroids[a][axis].total_cmp(&centroids[b][axis]).then(a.cmp(&b))
        });
        self.nodes.push(Node::Leaf { bounds, start, end });
        let left = self.build_range(tris, centroids, start, mid);
        let right = self.build_range(tris, centroids, mid, end);
        self.nodes[id] = Node::Inner { bounds, left, right };
        id
    }

    fn nearest_squared(&self, tris: &[[Vec3; 3]], p: &Vec3) -> f64 {
        let mut best = f64::INFINITY;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if node.bounds().distance_squared(p) >= best {
                continue;
            }
            match *node {
                Node::Leaf { start, end, .. } => {
                    for &t in &self.order[start..end] {
                        best = best.min(triangle_distance_squared(p, &tris[t]));
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[left].bounds().distance_squared(p);
                    let dr = self.nodes[right].bounds().distance_squared(p);
                    // visit the nearer child first
                    if dl < dr {
                        stack.push(right);
                        stack.push(left);
                    } else {
                        stack.push(left);
                        stack.push(right);
                    }
                }
            }
        }
        best
    }

    fn count_ray_hits(&self, tris: &[[Vec3; 3]], origin: &Vec3, dir: &Vec3) -> usize {
        let inv = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut hits = 0;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if !node.bounds().hit_by_ray(origin, &inv) {
                continue;
            }
            match *node {
                Node::Leaf { start, end, .. } => {
                    hits += self.order[start..end]
                        .iter()
                        .filter(|&&t| ray_hits_triangle(origin, dir, &tris[t]))
                        .count();
                }
                Node::Inner { left, right, .. } => {
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
        hits
    }
}

/// Moller-Trumbore; counts hits strictly in front of the origin.
fn ray_hits_triangle(origin: &Vec3, dir: &Vec3, tri: &[Vec3; 3]) -> bool {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let pvec = dir.cross(&e2);
    let det = e1.dot(&pvec);
    if det.abs() < 1e-14 {
        return false;
    }
    let inv_det = 1.0 / det;
    let tvec = origin - tri[0];
    let u = tvec.dot(&pvec) * inv_det;
    if !(0.0..=1.0).contains(&u) {
        return false;
    }
    let qvec = tvec.cross(&e1);
    let v = dir.dot(&qvec) * inv_det;
    if v < 0.0 || u + v > 1.0 {
        return false;
    }
    e2.dot(&qvec) * inv_det > 1e-12
}

/// Signed solid angle of triangle `abc` seen from `p` (Van Oosterom-Strackee).
fn solid_angle(p: &Vec3, tri: &[Vec3; 3]) -> f64 {
    let a = tri[0] - p;
    let b = tri[1] - p;
    let c = tri[2] - p;
    let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
    let numer = a.dot(&b.cross(&c));
    let denom = la * lb * lc + a.dot(&b) * lc + b.dot(&c) * la + c.dot(&a) * lb;
    2.0 * numer.atan2(denom)
}

/// Fixed, mutually non-aligned ray directions for the parity vote.
const RAY_DIRECTIONS: [[f64; 3]; 3] = [
    [0.5773502691896258, 0.5773502691896257, 0.5773502691896259],
    [-0.6247, 0.3127, 0.7155],
    [0.2113, -0.8714, -0.4427],
];

/// Signed-distance oracle for one validated, watertight mesh.
#[derive(Debug, Clone)]
pub struct MeshSdf {
    tris: Vec<[Vec3; 3]>,
    bvh: Bvh,
}

impl MeshSdf {
    pub fn new(mesh: &TriMesh) -> Result<Self, GeometryError> {
        if mesh.is_empty() {
            return Err(GeometryError::EmptyMesh);
        }
        let report = validate_watertight(mesh);
        if !report.is_watertight {
            return Err(GeometryError::NotWatertight {
                boundary: report.boundary_edge_count,
                flipped: report.flipped_edge_count,
                nonmanifold: report.nonmanifold_edge_count,
            });
        }
        let tris: Vec<[Vec3; 3]> = mesh.triangles().collect();
        let bvh = Bvh::build(&tris);
        Ok(Self { tris, bvh })
    }

    pub fn unsigned_distance(&self, p: &Vec3) -> f64 {
        self.bvh.nearest_squared(&self.tris, p).sqrt()
    }

    /// Generalized winding number; ~1 inside, ~0 outside.
    pub fn winding_number(&self, p: &Vec3) -> f64 {
        self.tris.iter().map(|t| solid_angle(p, t)).sum::<f64>() / (4.0 * std::f64::consts::PI)
    }

    /// Parity of three ray casts; falls back to the winding number when the
    /// rays disagree.
    pub fn is_inside(&self, p: &Vec3) -> bool {
        let votes: Vec<bool> = RAY_DIRECTIONS
            .iter()
            .map(|d| self.bvh.count_ray_hits(&self.tris, p, &Vec3::from(*d)) % 2 == 1)
            .collect();
        if votes.iter().all(|&v| v == votes[0]) {
            votes[0]
        } else {
            self.winding_number(p) > 0.5
        }
    }

    /// Negative inside, positive outside.
    pub fn distance(&self, p: &Vec3) -> f64 {
        let d = self.unsigned_distance(p);
        if d > 0.0 && self.is_inside(p) {
            -d
        } else {
            d
        }
    }
}

/// One-off signed distance query. Builds the acceleration structure on every
/// call; use [`MeshSdf`] for repeated queries.
pub fn signed_distance(mesh: &TriMesh, query: &Vec3) -> Result<f64, GeometryError> {
    Ok(MeshSdf::new(mesh)?.distance(query))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes::{icosphere, torus, unit_cube};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sphere_distances() {
        let sdf = MeshSdf::new(&icosphere(1.0, 4)).unwrap();
        assert!((sdf.distance(&Vec3::new(2.0, 0.0, 0.0)) - 1.0).abs() < 2e-2);
        assert!((sdf.distance(&Vec3::zeros()) + 1.0).abs() < 2e-2);
    }

    #[test]
    fn cube_face_distance_is_exact() {
        let d = signed_distance(&unit_cube(), &Vec3::new(0.6, 0.0, 0.0)).unwrap();
        assert!((d - 0.1).abs() < 1e-15, "{d}");
        let inside = signed_distance(&unit_cube(), &Vec3::new(0.2, 0.1, 0.0)).unwrap();
        assert!((inside + 0.3).abs() < 1e-15);
    }

    #[test]
    fn open_mesh_is_rejected() {
        let cube = unit_cube();
        let open = TriMesh::new(cube.vertices().to_vec(), cube.faces()[2..].to_vec()).unwrap();
        assert!(matches!(
            signed_distance(&open, &Vec3::zeros()),
            Err(GeometryError::NotWatertight { .. })
        ));
    }

    #[test]
    fn bvh_matches_exhaustive_scan_exactly() {
        let mesh = torus(0.55, 0.2, 40, 20);
        let sdf = MeshSdf::new(&mesh).unwrap();
        let tris: Vec<_> = mesh.triangles().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..300 {
            let p = Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let brute = tris
                .iter()
                .map(|t| triangle_distance_squared(&p, t))
                .fold(f64::INFINITY, f64::min)
                .sqrt();
            assert_eq!(sdf.unsigned_distance(&p), brute);
        }
    }

    #[test]
    fn parity_agrees_with_winding_number() {
        let sdf = MeshSdf::new(&torus(0.55, 0.2, 40, 20)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let p = Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-0.5..0.5),
            );
            assert_eq!(sdf.is_inside(&p), sdf.winding_number(&p) > 0.5, "{p:?}");
        }
    }
}
