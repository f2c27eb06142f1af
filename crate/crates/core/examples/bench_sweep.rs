//! Throughput sweep over spring counts, thread counts and integrators.
//!
//! `cargo run --release --example bench_sweep -- [steps] [threads,...]`

use springsim::bench::{bench_csv, device_description, run_bench_sweep, MIN_BENCH_STEPS, SWEEP_SPRINGS};
use springsim::engine::Integrator;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let steps: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(MIN_BENCH_STEPS);
    let threads: Vec<usize> = match args.next() {
        Some(list) => list.split(',').map(str::parse).collect::<Result<_, _>>()?,
        None => vec![1, std::thread::available_parallelism().map_or(1, |n| n.get())],
    };
    println!("# {}", device_description());
    let reports = run_bench_sweep(&SWEEP_SPRINGS, &threads, &Integrator::ALL, steps)?;
    for r in &reports {
        eprintln!("{r}");
    }
    print!("{}", bench_csv(&reports));
    Ok(())
}
