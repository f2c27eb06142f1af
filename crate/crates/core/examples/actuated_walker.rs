//! A bar on a frictional floor whose bottom springs breathe out of phase
//! front to back, so it crawls steadily along x.
//!
//! `cargo run --release --example actuated_walker -- [seconds] [hz]`

use springsim::engine::{simulate, EngineConfig, SimOptions};
use springsim::lattice::voxel_block;
use springsim::model::{ActuationGroup, ContactPlane, Material};
use springsim::Vec3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seconds: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3.0);
    let hz: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(4.0);
    let dim = 0.01;
    let mut scene = voxel_block(Vec3::zeros(), [8, 2, 2], dim, &Material::default());
    scene.planes.push(ContactPlane::floor(0.0, 0.8));
    scene.damping = 2e-4;
    scene.actuation.push(ActuationGroup::sinusoid("rear", 0.1, hz, 0.0));
    scene.actuation.push(ActuationGroup::sinusoid("front", 0.1, hz, std::f64::consts::FRAC_PI_2));
    let mid = 4.0 * dim;
    for s in &mut scene.springs {
        let (a, b) = (scene.masses[s.i].x, scene.masses[s.j].x);
        if a.y < 1e-9 && b.y < 1e-9 && (a.x - b.x).abs() > 1e-9 {
            let x = 0.5 * (a.x + b.x);
            s.group = Some(if x < mid { "rear" } else { "front" }.into());
        }
    }
    let actuated = scene.springs.iter().filter(|s| s.group.is_some()).count();
    let com = |x: &[Vec3]| x.iter().sum::<Vec3>() / x.len() as f64;
    let x0: Vec<Vec3> = scene.masses.iter().map(|m| m.x).collect();
    let start = com(&x0);
    let n = scene.masses.len();
    let (rec, end) = simulate(scene, EngineConfig::default(), &SimOptions::new(seconds).trace(0..n).every(1000))?;
    println!("{actuated} actuated springs, {hz} Hz");
    for (s, t) in rec.times.iter().enumerate() {
        let x: Vec<Vec3> = rec.positions.iter().map(|p| p[s]).collect();
        println!("  t={t:.2} s  com x {:+.5} m", com(&x).x - start.x);
    }
    println!("moved {:+.5} m in {seconds} s", com(&end.x).x - start.x);
    Ok(())
}
