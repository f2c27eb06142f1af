//! Euler, Verlet and RK4 on an undamped oscillator: error after one period
//! as dt halves, and the implied order of convergence.
//!
//! `cargo run --release --example integrators`

use springsim::engine::{Engine, EngineConfig, ExecMode, Integrator};
use springsim::model::{Mass, SceneBuilder, Spring};
use springsim::Vec3;

const K: f64 = 100.0;
const M: f64 = 1.0;
const A: f64 = 0.01;

fn error_after_one_period(integrator: Integrator, dt: f64) -> Result<f64, Box<dyn std::error::Error>> {
    let w = (K / M).sqrt();
    let period = 2.0 * std::f64::consts::PI / w;
    let steps = (period / dt).round() as u64;
    let mut b = SceneBuilder::new().gravity(Vec3::zeros()).dt(dt);
    b.add_mass(Mass::new(M, Vec3::zeros()).anchored());
    b.add_mass(Mass::new(M, Vec3::new(1.0 + A, 0.0, 0.0)));
    b.add_spring(Spring::new(0, 1, K, 1.0))?;
    let mut e = Engine::new(b.build(), EngineConfig::new(integrator, ExecMode::Serial))?;
    e.run_steps(steps)?;
    let exact = 1.0 + A * (w * steps as f64 * dt).cos();
    Ok((e.state().x[1].x - exact).abs())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dts = [2e-3, 1e-3, 5e-4, 2.5e-4];
    for integrator in Integrator::ALL {
        println!("{integrator}");
        let mut prev: Option<f64> = None;
        for dt in dts {
            let err = error_after_one_period(integrator, dt)?;
            match prev {
                Some(p) => println!("  dt {dt:.1e}: error {err:.3e}  ratio {:.2}", p / err),
                None => println!("  dt {dt:.1e}: error {err:.3e}"),
            }
            prev = Some(err);
        }
    }
    Ok(())
}
