//! Triangle meshes, parity inside tests and the ASCII `v`/`f` mesh format.

use std::path::Path;

use crate::Vec3;

#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("face {face} references vertex {index}, mesh has {count}")]
    BadIndex { face: usize, index: usize, count: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
}

/// Fixed ray directions; later entries are used when an earlier ray grazes
/// an edge or vertex.
const RAY_DIRECTIONS: [[f64; 3]; 6] = [
    [0.577_215_664_9, 0.318_309_886_1, 0.751_988_312_4],
    [-0.414_213_562_3, 0.732_050_807_5, 0.541_196_100_1],
    [0.267_949_192_4, -0.839_099_631_2, 0.473_146_789_3],
    [-0.707_106_781_1, -0.301_029_995_7, -0.639_945_372_8],
    [0.122_462_048_3, 0.959_492_973_6, -0.253_841_015_9],
    [0.882_296_270_5, -0.190_983_005_6, -0.430_512_734_2],
];

enum RayHit {
    Miss,
    Hit,
    Degenerate,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let count = vertices.len();
        for (face, tri) in triangles.iter().enumerate() {
            if let Some(&index) = tri.iter().find(|&&v| v >= count) {
                return Err(MeshError::BadIndex { face, index, count });
            }
        }
        Ok(Self { vertices, triangles })
    }

    /// Axis-aligned box `[min, max]` with outward-facing triangles.
    pub fn cuboid(min: Vec3, max: Vec3) -> Self {
        let corner = |i: usize| {
            Vec3::new(
                if i & 1 == 0 { min.x } else { max.x },
                if i & 2 == 0 { min.y } else { max.y },
                if i & 4 == 0 { min.z } else { max.z },
            )
        };
        let vertices = (0..8).map(corner).collect();
        let triangles = vec![
            [0, 2, 3], [0, 3, 1], // z = min
            [4, 5, 7], [4, 7, 6], // z = max
            [0, 1, 5], [0, 5, 4], // y = min
            [2, 6, 7], [2, 7, 3], // y = max
            [0, 4, 6], [0, 6, 2], // x = min
            [1, 3, 7], [1, 7, 5], // x = max
        ];
        Self { vertices, triangles }
    }

    pub fn unit_cube() -> Self {
        Self::cuboid(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0))
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        let mut it = self.triangles.iter().flatten().map(|&v| self.vertices[v]);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), p| (lo.inf(&p), hi.sup(&p))))
    }

    /// Enclosed volume by the divergence theorem (absolute value).
    pub fn volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let (a, b, c) = (self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum::<f64>()
            .abs()
    }

    /// Parity test: true iff a ray from `p` crosses the surface an odd number
    /// of times. Degenerate (edge/vertex) hits retry along another direction.
    pub fn point_inside(&self, p: &Vec3) -> bool {
        if self.triangles.is_empty() {
            return false;
        }
        if let Some((lo, hi)) = self.bounds() {
            if (0..3).any(|a| p[a] < lo[a] || p[a] > hi[a]) {
                return false;
            }
        }
        let mut last = false;
        for dir in RAY_DIRECTIONS {
            let dir = Vec3::from(dir).normalize();
            match self.crossings(p, &dir) {
                Some(n) => return n % 2 == 1,
                None => last = true,
            }
        }
        // Every direction grazed something; fall back to majority on the last.
        let dir = Vec3::from(RAY_DIRECTIONS[0]).normalize();
        last && self.crossings_lenient(p, &dir) % 2 == 1
    }

    /// Inside test that also accepts points within `tol` of the surface.
    pub fn point_inside_or_on(&self, p: &Vec3, tol: f64) -> bool {
        if self.triangles.is_empty() {
            return false;
        }
        if let Some((lo, hi)) = self.bounds() {
            if (0..3).any(|a| p[a] < lo[a] - tol || p[a] > hi[a] + tol) {
                return false;
            }
        }
        self.distance_to_surface(p) <= tol || self.point_inside(p)
    }

    pub fn distance_to_surface(&self, p: &Vec3) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                point_triangle_distance(p, &self.vertices[t[0]], &self.vertices[t[1]], &self.vertices[t[2]])
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn crossings(&self, origin: &Vec3, dir: &Vec3) -> Option<usize> {
        let mut n = 0;
        for t in &self.triangles {
            match ray_triangle(origin, dir, &self.vertices[t[0]], &self.vertices[t[1]], &self.vertices[t[2]]) {
                RayHit::Hit => n += 1,
                RayHit::Miss => {}
                RayHit::Degenerate => return None,
            }
        }
        Some(n)
    }

    fn crossings_lenient(&self, origin: &Vec3, dir: &Vec3) -> usize {
        self.triangles
            .iter()
            .filter(|t| {
                matches!(
                    ray_triangle(origin, dir, &self.vertices[t[0]], &self.vertices[t[1]], &self.vertices[t[2]]),
                    RayHit::Hit | RayHit::Degenerate
                )
            })
            .count()
    }

    /// Parses the ASCII `v`/`f` format: `v x y z` vertex lines and `f a b c ...`
    /// face lines with 1-based (or negative, relative) indices. Polygons are
    /// fan-triangulated; all other records are ignored.
    pub fn parse_obj(text: &str) -> Result<Self, MeshError> {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            let mut parts = line.split_whitespace();
            let err = |msg: String| MeshError::Parse { line: lineno + 1, msg };
            match parts.next() {
                Some("v") => {
                    let coords: Vec<f64> = parts
                        .take(3)
                        .map(|s| s.parse::<f64>().map_err(|e| err(format!("bad coordinate {s:?}: {e}"))))
                        .collect::<Result<_, _>>()?;
                    if coords.len() != 3 {
                        return Err(err("vertex needs three coordinates".into()));
                    }
                    vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
                }
                Some("f") => {
                    let count = vertices.len() as i64;
                    let idx: Vec<usize> = parts
                        .map(|s| {
                            let head = s.split('/').next().unwrap_or("");
                            let v: i64 = head.parse().map_err(|e| err(format!("bad index {s:?}: {e}")))?;
                            let resolved = if v < 0 { count + v } else { v - 1 };
                            if v == 0 || resolved < 0 || resolved >= count {
                                return Err(err(format!("index {v} out of range")));
                            }
                            Ok(resolved as usize)
                        })
                        .collect::<Result<_, _>>()?;
                    if idx.len() < 3 {
                        return Err(err("face needs at least three vertices".into()));
                    }
                    for w in 1..idx.len() - 1 {
                        triangles.push([idx[0], idx[w], idx[w + 1]]);
                    }
                }
                _ => {}
            }
        }
        Ok(Self { vertices, triangles })
    }

    pub fn load_obj(path: &Path) -> Result<Self, MeshError> {
        Self::parse_obj(&std::fs::read_to_string(path)?)
    }

    pub fn to_obj(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            s.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
        }
        for t in &self.triangles {
            s.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
        }
        s
    }
}

/// Möller–Trumbore with explicit degeneracy reporting.
fn ray_triangle(o: &Vec3, d: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> RayHit {
    const EPS: f64 = 1e-12;
    let e1 = b - a;
    let e2 = c - a;
    let pvec = d.cross(&e2);
    let det = e1.dot(&pvec);
    let scale = e1.norm() * e2.norm();
    if scale == 0.0 {
        return RayHit::Miss;
    }
    if det.abs() < EPS * scale {
        // Ray parallel to the triangle plane: only matters if it lies in it.
        let n = e1.cross(&e2);
        if (o - a).dot(&n).abs() < EPS * scale * (1.0 + (o - a).norm()) {
            return RayHit::Degenerate;
        }
        return RayHit::Miss;
    }
    let inv = 1.0 / det;
    let tvec = o - a;
    let u = tvec.dot(&pvec) * inv;
    let qvec = tvec.cross(&e1);
    let v = d.dot(&qvec) * inv;
    let t = e2.dot(&qvec) * inv;
    let tol = 1e-10;
    if u < -tol || v < -tol || u + v > 1.0 + tol || t < -tol {
        return RayHit::Miss;
    }
    if u < tol || v < tol || u + v > 1.0 - tol || t < tol {
        return RayHit::Degenerate;
    }
    RayHit::Hit
}

fn point_triangle_distance(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    // Ericson, closest point on triangle.
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return ap.norm();
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return bp.norm();
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (p - (a + ab * v)).norm();
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return cp.norm();
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (p - (a + ac * w)).norm();
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (p - (b + (c - b) * w)).norm();
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (p - (a + ab * v + ac * w)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cube_centroid_inside_far_point_outside() {
        let m = TriangleMesh::unit_cube();
        assert!(m.point_inside(&Vec3::new(0.5, 0.5, 0.5)));
        assert!(!m.point_inside(&Vec3::new(2.0, 0.0, 0.0)));
    }

    #[test]
    fn empty_mesh_contains_nothing() {
        let m = TriangleMesh::default();
        assert!(!m.point_inside(&Vec3::zeros()));
        assert!(!m.point_inside_or_on(&Vec3::zeros(), 1.0));
    }

    #[test]
    fn random_points_agree_with_box_predicate() {
        let m = TriangleMesh::unit_cube();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut agree = 0;
        for _ in 0..1000 {
            let p = Vec3::new(
                rng.random_range(-0.5..1.5),
                rng.random_range(-0.5..1.5),
                rng.random_range(-0.5..1.5),
            );
            let oracle = (0..3).all(|a| p[a] > 0.0 && p[a] < 1.0);
            if m.point_inside(&p) == oracle {
                agree += 1;
            }
        }
        assert_eq!(agree, 1000);
    }

    #[test]
    fn grazing_rays_are_retried() {
        // Points whose first ray passes exactly through a cube vertex or edge.
        let m = TriangleMesh::unit_cube();
        let d = Vec3::from(RAY_DIRECTIONS[0]).normalize();
        let corner = Vec3::new(1.0, 1.0, 1.0);
        let p = corner - d * (0.3 / d.z);
        assert!(m.point_inside(&p));
        let edge_point = Vec3::new(1.0, 0.5, 1.0);
        let q = edge_point - d * 0.2;
        assert_eq!(m.point_inside(&q), (0..3).all(|a| q[a] > 0.0 && q[a] < 1.0));
    }

    #[test]
    fn surface_points_accepted_with_tolerance() {
        let m = TriangleMesh::unit_cube();
        assert!(m.point_inside_or_on(&Vec3::new(0.0, 0.0, 0.0), 1e-9));
        assert!(m.point_inside_or_on(&Vec3::new(1.0, 0.5, 0.25), 1e-9));
        assert!(!m.point_inside_or_on(&Vec3::new(1.0 + 1e-6, 0.5, 0.25), 1e-9));
    }

    #[test]
    fn obj_parse_roundtrip_and_quads() {
        let text = "# cube\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1/1/1 2/2/2 3/3/3 4/4/4\nusemtl x\n";
        let m = TriangleMesh::parse_obj(text).unwrap();
        assert_eq!(m.vertices.len(), 4);
        assert_eq!(m.triangles, vec![[0, 1, 2], [0, 2, 3]]);
        let again = TriangleMesh::parse_obj(&m.to_obj()).unwrap();
        assert_eq!(again, m);
        assert!(TriangleMesh::parse_obj("v 0 0\n").is_err());
        assert!(TriangleMesh::parse_obj("v 0 0 0\nf 1 2 3\n").is_err());
        let rel = TriangleMesh::parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n").unwrap();
        assert_eq!(rel.triangles, vec![[0, 1, 2]]);
    }

    #[test]
    fn cube_volume() {
        let m = TriangleMesh::cuboid(Vec3::zeros(), Vec3::new(2.0, 3.0, 0.5));
        assert!((m.volume() - 3.0).abs() < 1e-12);
    }
}
