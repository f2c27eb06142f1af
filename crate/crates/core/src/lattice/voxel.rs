use std::collections::HashMap;

use rayon::prelude::*;

use super::{LatticeError, LatticeMode, LatticeSpec, TriangleMesh};
use crate::model::{Mass, Material, Scene, SceneBuilder};
use crate::Vec3;

/// Neighbour offsets with a lexicographically positive direction, so each
/// unordered pair inside one cube is visited exactly once: 3 edges, 6 face
/// diagonals and 4 long diagonals per node, 26 neighbours in total.
fn forward_offsets() -> impl Iterator<Item = [i64; 3]> {
    (-1..=1i64)
        .flat_map(|a| (-1..=1i64).flat_map(move |b| (-1..=1i64).map(move |c| [a, b, c])))
        .filter(|o| *o > [0, 0, 0])
}

/// Voxel lattice over the interior of `mesh`. Grid nodes sit at multiples of
/// `dim` from the bounding-box minimum; nodes on the surface count as inside.
/// Every pair of surviving nodes sharing a cube (edge, face diagonal or long
/// diagonal) is joined by a spring.
pub fn build_voxel_lattice(mesh: &TriangleMesh, spec: &LatticeSpec, material: &Material) -> Result<Scene, LatticeError> {
    spec.validate()?;
    let dim = match spec.mode {
        LatticeMode::Voxel { dim } => dim,
        _ => return Err(LatticeError::InvalidSpec("expected voxel mode".into())),
    };
    let (lo, hi) = mesh.bounds().ok_or(LatticeError::NoMasses)?;
    let extent = hi - lo;
    let tol = 1e-9 * extent.norm().max(dim);
    let counts: [i64; 3] = std::array::from_fn(|a| ((extent[a] + tol) / dim).floor() as i64 + 1);

    let nodes: Vec<[i64; 3]> = (0..counts[0])
        .flat_map(|i| (0..counts[1]).flat_map(move |j| (0..counts[2]).map(move |k| [i, j, k])))
        .collect();
    let position = |n: &[i64; 3]| lo + Vec3::new(n[0] as f64, n[1] as f64, n[2] as f64) * dim;
    let inside: Vec<bool> = nodes
        .par_iter()
        .map(|n| mesh.point_inside_or_on(&position(n), tol))
        .collect();

    let kept: Vec<[i64; 3]> = nodes.iter().zip(&inside).filter(|(_, &ok)| ok).map(|(n, _)| *n).collect();
    if kept.is_empty() {
        return Err(LatticeError::NoMasses);
    }
    let node_mass = material.node_mass(kept.len(), mesh.volume());
    Ok(connect_grid(&kept, |n| position(n), node_mass, material))
}

fn connect_grid(kept: &[[i64; 3]], position: impl Fn(&[i64; 3]) -> Vec3, node_mass: f64, material: &Material) -> Scene {
    let index: HashMap<[i64; 3], usize> = kept.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let mut b = SceneBuilder::new();
    for n in kept {
        b.add_mass(Mass::new(node_mass, position(n)));
    }
    for (i, n) in kept.iter().enumerate() {
        for o in forward_offsets() {
            let m = [n[0] + o[0], n[1] + o[1], n[2] + o[2]];
            if let Some(&j) = index.get(&m) {
                b.connect(i, j, material).expect("grid endpoints are valid and distinct");
            }
        }
    }
    b.add_material(material.clone());
    b.build()
}

/// Solid block of `nx × ny × nz` voxels (so `(nx+1)(ny+1)(nz+1)` nodes) with
/// pitch `dim`, minimum corner at `origin`.
pub fn voxel_block(origin: Vec3, cells: [usize; 3], dim: f64, material: &Material) -> Scene {
    let kept: Vec<[i64; 3]> = (0..=cells[0] as i64)
        .flat_map(|i| (0..=cells[1] as i64).flat_map(move |j| (0..=cells[2] as i64).map(move |k| [i, j, k])))
        .collect();
    let volume = cells.iter().map(|&c| c as f64 * dim).product::<f64>();
    let node_mass = material.node_mass(kept.len(), volume);
    connect_grid(
        &kept,
        |n| origin + Vec3::new(n[0] as f64, n[1] as f64, n[2] as f64) * dim,
        node_mass,
        material,
    )
}
