//! Throughput benchmark on a solid cubic block of springs.

use std::fmt;
use std::time::Instant;

use serde::Serialize;

use crate::engine::{Engine, EngineConfig, EngineError, ExecMode, Integrator};
use crate::lattice::voxel_block;
use crate::model::{Material, Scene};
use crate::Vec3;

pub const MIN_BENCH_STEPS: u64 = 100;
pub const WARMUP_STEPS: u64 = 10;
/// Spring counts of the default size sweep.
pub const SWEEP_SPRINGS: [usize; 3] = [10_000, 100_000, 1_000_000];

/// Rough resident bytes per spring and per mass (scene, slab, state, scratch).
const BYTES_PER_SPRING: usize = 96;
const BYTES_PER_MASS: usize = 640;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("a benchmark needs at least {MIN_BENCH_STEPS} timed steps, got {0}")]
    TooFewSteps(u64),
    #[error("spring count must be positive")]
    NoSprings,
    #[error("out of memory allocating a {springs}-spring block (~{bytes} bytes)")]
    OutOfMemory { springs: usize, bytes: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub device: String,
    pub springs: usize,
    pub masses: usize,
    pub steps: u64,
    /// Wall time of the timed steps (s).
    pub wall: f64,
    /// springs × steps / wall (springs/s).
    pub throughput: f64,
    pub threads: usize,
    pub integrator: Integrator,
    pub mode: ExecMode,
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} springs, {} {} steps on {} thread(s): {:.3} s, {:.4e} springs/s",
            self.springs, self.steps, self.integrator, self.threads, self.wall, self.throughput
        )
    }
}

pub const BENCH_CSV_HEADER: &str = "device,springs,masses,steps,wall_s,throughput,threads,integrator,mode";

pub fn bench_csv(reports: &[BenchReport]) -> String {
    let mut out = format!("{BENCH_CSV_HEADER}\n");
    for r in reports {
        out.push_str(&format!(
            "\"{}\",{},{},{},{:.6e},{:.6e},{},{},{}\n",
            r.device.replace('"', "'"),
            r.springs,
            r.masses,
            r.steps,
            r.wall,
            r.throughput,
            r.threads,
            r.integrator,
            r.mode
        ));
    }
    out
}

/// Springs in a fully connected block of `n³` cells.
pub fn block_springs(n: usize) -> usize {
    let p = n + 1;
    3 * n * p * p + 6 * n * n * p + 4 * n * n * n
}

/// Cells per side whose block spring count is closest to `target`.
pub fn block_side(target: usize) -> usize {
    let mut n = 1;
    while block_springs(n + 1) <= target {
        n += 1;
    }
    if target.abs_diff(block_springs(n + 1)) < target.abs_diff(block_springs(n)) {
        n + 1
    } else {
        n
    }
}

/// Free-floating block of ≈ `springs` springs, 1 cm pitch, gravity off,
/// with a small deterministic shear so every spring carries load.
pub fn bench_block(springs: usize) -> Scene {
    let n = block_side(springs);
    let mut scene = voxel_block(Vec3::zeros(), [n, n, n], 0.01, &Material::default());
    scene.gravity = Vec3::zeros();
    for m in &mut scene.masses {
        m.x.x += 1e-4 * m.x.y;
    }
    scene
}

/// Host description: architecture, logical CPUs and the CPU model if known.
pub fn device_description() -> String {
    let cpus = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let model = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split(':').nth(1))
                .map(|m| m.trim().to_owned())
        })
        .unwrap_or_else(|| "unknown CPU".into());
    format!("{model} ({}, {cpus} logical CPUs)", std::env::consts::ARCH)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub springs: usize,
    pub steps: u64,
    pub threads: usize,
    pub integrator: Integrator,
    pub mode: ExecMode,
}

impl BenchConfig {
    pub fn new(springs: usize, steps: u64, threads: usize, integrator: Integrator) -> Self {
        Self {
            springs,
            steps,
            threads,
            integrator,
            mode: ExecMode::Parallel,
        }
    }
}

fn reserve_check(springs: usize) -> Result<(), BenchError> {
    let n = block_side(springs);
    let masses = (n + 1).pow(3);
    let bytes = block_springs(n)
        .saturating_mul(BYTES_PER_SPRING)
        .saturating_add(masses.saturating_mul(BYTES_PER_MASS));
    let mut probe: Vec<u8> = Vec::new();
    probe
        .try_reserve_exact(bytes)
        .map_err(|_| BenchError::OutOfMemory { springs, bytes })
}

/// Times `cfg.steps` steps after [`WARMUP_STEPS`] warm-up steps.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    if cfg.steps < MIN_BENCH_STEPS {
        return Err(BenchError::TooFewSteps(cfg.steps));
    }
    if cfg.springs == 0 {
        return Err(BenchError::NoSprings);
    }
    reserve_check(cfg.springs)?;
    run_bench_on(bench_block(cfg.springs), cfg)
}

/// Benchmarks an already-built scene (`cfg.springs` is ignored).
pub fn run_bench_on(scene: Scene, cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    if cfg.steps < MIN_BENCH_STEPS {
        return Err(BenchError::TooFewSteps(cfg.steps));
    }
    let (springs, masses) = (scene.springs.len(), scene.masses.len());
    let mut engine = Engine::new(scene, EngineConfig::new(cfg.integrator, cfg.mode).threads(cfg.threads))?;
    engine.run_steps(WARMUP_STEPS)?;
    let start = Instant::now();
    engine.run_steps(cfg.steps)?;
    let wall = start.elapsed().as_secs_f64().max(1e-9);
    Ok(BenchReport {
        device: device_description(),
        springs,
        masses,
        steps: cfg.steps,
        wall,
        throughput: springs as f64 * cfg.steps as f64 / wall,
        threads: engine.threads(),
        integrator: cfg.integrator,
        mode: cfg.mode,
    })
}

/// One report per (spring count, thread count, integrator), in that nesting order.
pub fn run_bench_sweep(
    springs: &[usize],
    threads: &[usize],
    integrators: &[Integrator],
    steps: u64,
) -> Result<Vec<BenchReport>, BenchError> {
    let mut out = Vec::new();
    for &s in springs {
        for &t in threads {
            for &i in integrators {
                out.push(run_bench(&BenchConfig::new(s, steps, t, i))?);
            }
        }
    }
    Ok(out)
}
