//! A block slides across a frictional floor; its stopping distance is
//! compared with v0² / (2 μ g).
//!
//! `cargo run --release --example friction_slide -- [mu] [v0]`

use springsim::engine::{Engine, EngineConfig};
use springsim::lattice::voxel_block;
use springsim::model::{ContactPlane, Material, STANDARD_GRAVITY};
use springsim::Vec3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let mu: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.5);
    let v0: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.5);
    let mut scene = voxel_block(Vec3::zeros(), [2, 1, 2], 0.01, &Material::default());
    scene.planes.push(ContactPlane::floor(0.0, mu));
    scene.damping = 1e-4;
    let mut e = Engine::new(scene.clone(), EngineConfig::default())?;
    e.run_steps(2000)?;
    let mut state = e.state().clone();
    for v in &mut state.v {
        v.x += v0;
    }
    state.x_prev = None;
    e.set_state(state);
    let com = |e: &Engine| e.state().x.iter().map(|x| x.x).sum::<f64>() / e.state().x.len() as f64;
    let start = com(&e);
    let mut t = 0.0;
    loop {
        e.run_steps(100)?;
        t += 100.0 * scene.dt;
        let vx = e.state().v.iter().map(|v| v.x).sum::<f64>() / e.state().v.len() as f64;
        if vx.abs() < 1e-3 || t > 5.0 {
            break;
        }
    }
    let slid = com(&e) - start;
    let expected = v0 * v0 / (2.0 * mu * STANDARD_GRAVITY);
    println!("slid {slid:.4} m in {t:.2} s, Coulomb estimate {expected:.4} m");
    Ok(())
}
