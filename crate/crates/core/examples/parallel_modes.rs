//! Serial, parallel and deterministic-parallel stepping of the same block.
//!
//! `cargo run --release --example parallel_modes -- [threads] [steps]`

use std::time::Instant;

use springsim::bench::bench_block;
use springsim::engine::{Engine, EngineConfig, ExecMode, Integrator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let threads: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(4);
    let steps: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(500);
    let scene = bench_block(50_000);
    println!("{} masses, {} springs, {steps} steps", scene.masses.len(), scene.springs.len());
    let mut finals = Vec::new();
    for mode in [ExecMode::Serial, ExecMode::Parallel, ExecMode::ParallelDeterministic] {
        let mut e = Engine::new(scene.clone(), EngineConfig::new(Integrator::Verlet, mode).threads(threads))?;
        let start = Instant::now();
        e.run_steps(steps)?;
        println!("  {mode:>12} on {} thread(s): {:.3} s", e.threads(), start.elapsed().as_secs_f64());
        finals.push(e.state().x.clone());
    }
    let deviation = |a: &[springsim::Vec3], b: &[springsim::Vec3]| a.iter().zip(b).map(|(p, q)| (p - q).amax()).fold(0.0, f64::max);
    println!("parallel vs serial:     max |dx| = {:.3e} m", deviation(&finals[0], &finals[1]));
    println!("parallel-det vs serial: bitwise equal = {}", finals[0] == finals[2]);
    Ok(())
}
