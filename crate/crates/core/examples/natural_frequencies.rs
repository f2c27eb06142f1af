//! Lowest natural frequencies of a scene from the stiffness/mass eigenproblem,
//! checked against the FFT of a free vibration.
//!
//! `cargo run --release --example natural_frequencies -- [scene.json]`

use springsim::analysis::{assemble_modal_system, fft_dominant_frequency, natural_frequencies, BeamExperiment};
use springsim::engine::{simulate, EngineConfig, SimOptions};
use springsim::io::load_scene;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let exp = BeamExperiment::default().with_cells([10, 2, 2]);
    let (scene, probe) = match std::env::args().nth(1) {
        Some(path) => {
            let s = load_scene(path.as_ref())?;
            let last = s.masses.len() - 1;
            (s, last)
        }
        None => {
            let s = exp.scene()?;
            let tip = exp.tip_mass(&s);
            (s, tip)
        }
    };
    let x: Vec<_> = scene.masses.iter().map(|m| m.x).collect();
    let modal = assemble_modal_system(&scene, &x)?;
    let freqs = natural_frequencies(&modal, 4)?;
    for (i, f) in freqs.iter().enumerate() {
        println!("mode {}: {f:.3} Hz", i + 1);
    }

    let mut kicked = scene.clone();
    kicked.damping = 0.0;
    kicked.gravity = springsim::Vec3::zeros();
    kicked.masses[probe].v.y = 0.01;
    let (rec, _) = simulate(kicked, EngineConfig::default(), &SimOptions::new(2.0).trace([probe]))?;
    let y = rec.trace(probe).expect("traced").component(1);
    println!("FFT of mass {probe}: {:.3} Hz", fft_dominant_frequency(&y)?);
    Ok(())
}
