//! Voxelizes a triangle mesh into a cubic lattice and prints its statistics.
//!
//! `cargo run --release --example voxel_lattice -- [mesh.obj] [dim]`
//!
//! Without a mesh a 4 x 1 x 1 cm bar is used.

use springsim::cli::lattice_summary;
use springsim::lattice::{build_lattice, LatticeSpec, TriangleMesh};
use springsim::model::Material;
use springsim::Vec3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let mesh = match args.next() {
        Some(path) => TriangleMesh::load_obj(path.as_ref())?,
        None => TriangleMesh::cuboid(Vec3::zeros(), Vec3::new(0.04, 0.01, 0.01)),
    };
    let dim: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.0025);
    let scene = build_lattice(&mesh, &LatticeSpec::voxel(dim), &Material::default())?;
    println!("{}", lattice_summary(&scene));
    let degrees = scene.degrees();
    let mut hist = [0usize; 27];
    for d in degrees {
        hist[d.min(26)] += 1;
    }
    for (d, n) in hist.iter().enumerate().filter(|(_, n)| **n > 0) {
        println!("  degree {d:2}: {n} masses");
    }
    Ok(())
}
