use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LatticeError, LatticeMode, LatticeSpec, TriangleMesh};
use crate::model::{Mass, Material, Scene, SceneBuilder};
use crate::Vec3;

const MAX_REJECTIONS: usize = 100_000;

/// Uniform hash grid over points for k-nearest and radius queries.
#[derive(Debug)]
pub struct PointGrid {
    cell: f64,
    points: Vec<Vec3>,
    cells: HashMap<[i64; 3], Vec<usize>>,
}

impl PointGrid {
    pub fn new(cell: f64) -> Self {
        Self {
            cell,
            points: Vec::new(),
            cells: HashMap::new(),
        }
    }

    fn key(&self, p: &Vec3) -> [i64; 3] {
        std::array::from_fn(|a| (p[a] / self.cell).floor() as i64)
    }

    pub fn insert(&mut self, p: Vec3) -> usize {
        let id = self.points.len();
        let key = self.key(&p);
        self.cells.entry(key).or_default().push(id);
        self.points.push(p);
        id
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

    /// Distances to the `k` nearest points, ascending (fewer if the grid is smaller).
    pub fn k_nearest(&self, p: &Vec3, k: usize) -> Vec<f64> {
        let want = k.min(self.points.len());
        if want == 0 {
            return Vec::new();
        }
        let center = self.key(p);
        let mut best: Vec<f64> = Vec::with_capacity(want + 1);
        let mut seen = 0usize;
        let mut ring = 0i64;
        loop {
            for key in shell(center, ring) {
                if let Some(ids) = self.cells.get(&key) {
                    for &id in ids {
                        seen += 1;
                        let d = (self.points[id] - p).norm();
                        if best.len() < want || d < best[want - 1] {
                            let pos = best.partition_point(|&b| b <= d);
                            best.insert(pos, d);
                            best.truncate(want);
                        }
                    }
                }
            }
            // Anything outside rings 0..=ring lies at least ring*cell away.
            if best.len() == want && best[want - 1] <= ring as f64 * self.cell {
                return best;
            }
            if seen == self.points.len() {
                return best;
            }
            ring += 1;
        }
    }

    /// Index pairs `(a, b)`, `a < b`, at distance `<= radius`.
    pub fn pairs_within(&self, radius: f64) -> Vec<(usize, usize)> {
        let reach = (radius / self.cell).ceil() as i64;
        let mut out = Vec::new();
        for (a, p) in self.points.iter().enumerate() {
            let c = self.key(p);
            for dx in -reach..=reach {
                for dy in -reach..=reach {
                    for dz in -reach..=reach {
                        if let Some(ids) = self.cells.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                            for &b in ids {
                                if b > a && (self.points[b] - p).norm() <= radius {
                                    out.push((a, b));
                                }
                            }
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Cell keys at Chebyshev distance exactly `r` from `c`.
fn shell(c: [i64; 3], r: i64) -> impl Iterator<Item = [i64; 3]> {
    (-r..=r).flat_map(move |dx| {
        (-r..=r).flat_map(move |dy| {
            (-r..=r).filter_map(move |dz| {
                (dx.abs().max(dy.abs()).max(dz.abs()) == r).then_some([c[0] + dx, c[1] + dy, c[2] + dz])
            })
        })
    })
}

fn sample_inside(mesh: &TriangleMesh, lo: &Vec3, hi: &Vec3, rng: &mut ChaCha8Rng) -> Result<Vec3, LatticeError> {
    for _ in 0..MAX_REJECTIONS {
        let p = Vec3::new(
            rng.random_range(lo.x..=hi.x),
            rng.random_range(lo.y..=hi.y),
            rng.random_range(lo.z..=hi.z),
        );
        if mesh.point_inside(&p) {
            return Ok(p);
        }
    }
    Err(LatticeError::ZeroVolume)
}

/// Quasi-uniform lattice by Mitchell's best-candidate sampling. Each round
/// draws `candidates` interior points and keeps the one whose summed distance
/// to its `k_nearest` placed neighbours is largest, provided its nearest
/// neighbour is at least `cutoff` away. Sampling stops after `max_failures`
/// consecutive rejected rounds or at `target_count`. Springs form a radius
/// graph.
pub fn build_random_lattice(mesh: &TriangleMesh, spec: &LatticeSpec, material: &Material) -> Result<Scene, LatticeError> {
    spec.validate()?;
    let LatticeMode::BestCandidate {
        cutoff,
        candidates,
        k_nearest,
        connection_radius,
        max_failures,
        target_count,
    } = spec.mode
    else {
        return Err(LatticeError::InvalidSpec("expected best-candidate mode".into()));
    };
    let (lo, hi) = mesh.bounds().ok_or(LatticeError::ZeroVolume)?;
    if (0..3).any(|a| hi[a] - lo[a] <= 0.0) || mesh.volume() <= 0.0 {
        return Err(LatticeError::ZeroVolume);
    }
    if target_count == Some(0) {
        return Err(LatticeError::NoMasses);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut grid = PointGrid::new(cutoff);
    grid.insert(sample_inside(mesh, &lo, &hi, &mut rng)?);

    let mut failures = 0;
    while failures < max_failures && target_count.is_none_or(|n| grid.len() < n) {
        let mut best: Option<(f64, f64, Vec3)> = None;
        for _ in 0..candidates {
            let c = sample_inside(mesh, &lo, &hi, &mut rng)?;
            let near = grid.k_nearest(&c, k_nearest);
            let score: f64 = near.iter().sum();
            if best.as_ref().is_none_or(|b| score > b.0) {
                best = Some((score, near[0], c));
            }
        }
        let (_, nearest, p) = best.expect("candidates >= 1");
        if nearest < cutoff {
            failures += 1;
        } else {
            grid.insert(p);
            failures = 0;
        }
    }

    let node_mass = material.node_mass(grid.len(), mesh.volume());
    let mut b = SceneBuilder::new();
    for p in grid.points() {
        b.add_mass(Mass::new(node_mass, *p));
    }
    let mut edges = PointGrid::new(connection_radius);
    for p in grid.points() {
        edges.insert(*p);
    }
    for (i, j) in edges.pairs_within(connection_radius) {
        if (grid.points()[j] - grid.points()[i]).norm() > 0.0 {
            b.connect(i, j, material).expect("radius-graph pairs are unique");
        }
    }
    b.add_material(material.clone());
    Ok(b.build())
}
