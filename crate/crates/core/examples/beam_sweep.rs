//! Cantilever frequency sweeps along length, height and width, normalized
//! against beam theory.
//!
//! ```text
//! cargo run --release --example beam_sweep -- [length|height|width] [trace seconds]
//! ```

use springsim::analysis::beam::{run_sweep, sweep_summary, SWEEP_FACTORS};
use springsim::analysis::{BeamExperiment, SweepAxis};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let axes: Vec<SweepAxis> = match args.next() {
        Some(a) => vec![a.parse()?],
        None => vec![SweepAxis::Length, SweepAxis::Height, SweepAxis::Width],
    };
    let trace: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1.0);
    let base = BeamExperiment { trace, ..BeamExperiment::default() };
    for axis in axes {
        let start = std::time::Instant::now();
        let rows = run_sweep(&base, axis, &SWEEP_FACTORS)?;
        print!("{}", sweep_summary(&rows));
        for r in &rows {
            println!("    {} voxels: {:.4} Hz (theory {:.4} Hz)", r.voxels, r.measured, r.predicted);
        }
        println!("  {:.1} s\n", start.elapsed().as_secs_f64());
    }
    Ok(())
}
