//! The `springsim` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::beam::BeamExperiment;
use crate::analysis::freq::fft_dominant_frequency;
use crate::analysis::modal::{lowest_modes, EigenOptions};
use crate::analysis::{assemble_modal_system, SweepAxis};
use crate::bench::{bench_csv, run_bench, BenchConfig, BenchError, MIN_BENCH_STEPS};
use crate::engine::{simulate, EngineConfig, EngineError, ExecMode, Integrator, SimOptions};
use crate::io::{load_scene, save_scene, SceneError};
use crate::lattice::{build_lattice, LatticeError, LatticeSpec, MeshError, TriangleMesh};
use crate::model::{MassAssignment, Material, Scene};
use crate::steer::{ServeConfig, ServeError, Server};
use crate::validate::{beam_suite, energy_suite, natfreq_suite, EnergySuite, NatfreqSuite, SuiteError, SuiteReport};
use crate::Vec3;

pub const THREADS_ENV: &str = "SPRINGSIM_THREADS";

pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const VALIDATION: i32 = 2;
    pub const DIVERGENCE: i32 = 3;
    pub const IO: i32 = 4;
}

#[derive(Debug, Parser)]
#[command(name = "springsim", version, about = "Parallel mass-spring simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Build a lattice from a triangle mesh and write a scene document.
    Generate(GenerateArgs),
    /// Run a scene and write traced positions and energies as CSV.
    Simulate(SimulateArgs),
    /// Run a validation suite; exits 2 if any bound is missed.
    Validate(ValidateArgs),
    /// Natural frequencies of a scene linearized about its initial positions.
    Natfreq(NatfreqArgs),
    /// Measure throughput (springs × steps / s) on a cubic block.
    Bench(BenchArgs),
    /// Serve a running simulation for live steering.
    Serve(ServeArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MeshMode {
    Voxel,
    Random,
}

#[derive(Debug, Args)]
pub struct EngineArgs {
    #[arg(long, default_value = "verlet")]
    pub integrator: Integrator,
    #[arg(long = "exec", default_value = "parallel")]
    pub exec: ExecMode,
    /// Worker threads (default: all logical CPUs).
    #[arg(long, env = THREADS_ENV)]
    pub threads: Option<usize>,
}

impl EngineArgs {
    fn config(&self) -> EngineConfig {
        let c = EngineConfig::new(self.integrator, self.exec);
        match self.threads {
            Some(n) => c.threads(n),
            None => c,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Triangle mesh (`v`/`f` text format).
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long, value_enum, default_value = "voxel")]
    pub mode: MeshMode,
    /// Voxel pitch (m), voxel mode.
    #[arg(long, allow_negative_numbers = true)]
    pub dim: Option<f64>,
    /// Minimum spacing (m), random mode.
    #[arg(long, allow_negative_numbers = true)]
    pub cutoff: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Spring connection radius (m), random mode; default 1.75 × cutoff.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Stop random placement at this many masses.
    #[arg(long)]
    pub count: Option<usize>,
    /// Stiffness (N/m) at the reference length.
    #[arg(long, default_value_t = 10_000.0)]
    pub k0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub l_ref: f64,
    /// Mass per node (kg).
    #[arg(long, default_value_t = 0.1)]
    pub mass: f64,
    /// Anchor every mass whose y is below this value.
    #[arg(long, allow_negative_numbers = true)]
    pub anchor_below: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scene: PathBuf,
    /// Simulated seconds.
    #[arg(long, default_value_t = 1.0)]
    pub duration: f64,
    /// Override the scene's time step.
    #[arg(long)]
    pub dt: Option<f64>,
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Comma-separated mass ids to trace.
    #[arg(long, value_delimiter = ',')]
    pub trace: Vec<usize>,
    /// Record every N steps.
    #[arg(long, default_value_t = 1)]
    pub every: u64,
    /// CSV destination (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Beam,
    Energy,
    Natfreq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Vary {
    Length,
    Height,
    Width,
    All,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    /// Beam sweep axis.
    #[arg(long, value_enum, default_value = "all")]
    pub vary: Vary,
    /// Free-vibration trace length (s) for beam runs.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Undamped steps after release (energy suite).
    #[arg(long, default_value_t = 100_000)]
    pub steps: u64,
    #[arg(long)]
    pub dt: Option<f64>,
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Directory for report tables.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NatfreqArgs {
    #[arg(long)]
    pub scene: PathBuf,
    /// Number of modes.
    #[arg(long, default_value_t = 3)]
    pub count: usize,
    /// Also simulate and report the dominant frequency of this mass.
    #[arg(long)]
    pub trace: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub duration: f64,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Approximate spring counts (comma-separated).
    #[arg(long, value_delimiter = ',', default_value = "100000")]
    pub springs: Vec<usize>,
    #[arg(long, default_value_t = MIN_BENCH_STEPS)]
    pub steps: u64,
    /// Thread counts (comma-separated).
    #[arg(long, value_delimiter = ',', env = THREADS_ENV)]
    pub threads: Vec<usize>,
    /// Integrators (comma-separated).
    #[arg(long, value_delimiter = ',', default_value = "verlet")]
    pub integrator: Vec<Integrator>,
    #[arg(long = "exec", default_value = "parallel")]
    pub exec: ExecMode,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long, default_value_t = 7878)]
    pub port: u16,
    /// Snapshots per second.
    #[arg(long, default_value_t = 30.0)]
    pub rate: f64,
    /// Send every Nth mass.
    #[arg(long, default_value_t = 1)]
    pub decimate: usize,
    /// Fixed steps between snapshots (reproducible pacing).
    #[arg(long)]
    pub steps_per_snapshot: Option<u64>,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Divergence(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Validation(_) => exit::VALIDATION,
            CliError::Divergence(_) => exit::DIVERGENCE,
            CliError::Io(_) => exit::IO,
        }
    }
}

impl From<SceneError> for CliError {
    fn from(e: SceneError) -> Self {
        match e {
            SceneError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Divergence { .. } => CliError::Divergence(e.to_string()),
            EngineError::InvalidScene(_) | EngineError::InvalidCommand(_) => CliError::Validation(e.to_string()),
            EngineError::SlotOverflow(_) | EngineError::ThreadPool(_) => CliError::Usage(e.to_string()),
        }
    }
}

impl From<SuiteError> for CliError {
    fn from(e: SuiteError) -> Self {
        if e.is_divergence() {
            CliError::Divergence(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(io_err(path))
}

fn out_err(e: std::io::Error) -> CliError {
    CliError::Io(format!("output: {e}"))
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => exit::OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// Entry point for the binary.
pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

pub fn execute(cmd: Cmd, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Cmd::Generate(a) => generate(&a, out),
        Cmd::Simulate(a) => simulate_cmd(&a, out),
        Cmd::Validate(a) => validate(&a, out, err),
        Cmd::Natfreq(a) => natfreq(&a, out),
        Cmd::Bench(a) => bench(&a, out),
        Cmd::Serve(a) => serve(&a, err),
    }
}

/// `"<n> masses, <m> springs, spring length <min>..<max> m"`.
pub fn lattice_summary(scene: &Scene) -> String {
    let (lo, hi) = scene
        .springs
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), s| (lo.min(s.l0), hi.max(s.l0)));
    let lo = if lo.is_finite() { lo } else { 0.0 };
    format!(
        "{} masses, {} springs, spring length {lo:.6e}..{hi:.6e} m",
        scene.masses.len(),
        scene.springs.len()
    )
}

fn generate(a: &GenerateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let spec = match a.mode {
        MeshMode::Voxel => {
            let dim = a.dim.ok_or_else(|| CliError::Usage("voxel mode needs --dim".into()))?;
            LatticeSpec::voxel(dim)
        }
        MeshMode::Random => {
            let cutoff = a.cutoff.ok_or_else(|| CliError::Usage("random mode needs --cutoff".into()))?;
            let mut spec = LatticeSpec::best_candidate(cutoff, a.seed);
            if let Some(r) = a.radius {
                spec = spec.with_connection_radius(r);
            }
            if let Some(n) = a.count {
                spec = spec.with_target_count(n);
            }
            spec
        }
    };
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if !(a.k0 > 0.0 && a.l_ref > 0.0 && a.mass > 0.0) {
        return Err(CliError::Usage("--k0, --l-ref and --mass must be > 0".into()));
    }
    let mesh = TriangleMesh::load_obj(&a.mesh).map_err(|e| match e {
        MeshError::Io(io) => CliError::Io(format!("{}: {io}", a.mesh.display())),
        other => CliError::Validation(format!("{}: {other}", a.mesh.display())),
    })?;
    let material = Material {
        name: "default".into(),
        mass: MassAssignment::PerNode(a.mass),
        k0: a.k0,
        l_ref: a.l_ref,
    };
    let mut scene = build_lattice(&mesh, &spec, &material).map_err(|e| match e {
        LatticeError::InvalidSpec(_) => CliError::Usage(e.to_string()),
        _ => CliError::Validation(e.to_string()),
    })?;
    if let Some(y) = a.anchor_below {
        scene.anchor_where(|m| m.x.y < y);
    }
    save_scene(&a.out, &scene)?;
    writeln!(out, "{}", lattice_summary(&scene)).map_err(out_err)
}

fn simulate_cmd(a: &SimulateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if !(a.duration >= 0.0 && a.duration.is_finite()) {
        return Err(CliError::Usage(format!("--duration must be ≥ 0, got {}", a.duration)));
    }
    let mut scene = load_scene(&a.scene)?;
    if let Some(dt) = a.dt {
        scene.dt = dt;
    }
    if let Some(&bad) = a.trace.iter().find(|&&id| id >= scene.masses.len()) {
        return Err(CliError::Usage(format!(
            "--trace {bad}: scene has {} masses",
            scene.masses.len()
        )));
    }
    let opts = SimOptions::new(a.duration).trace(a.trace.iter().copied()).every(a.every);
    let (record, _) = simulate(scene, a.engine.config(), &opts)?;
    match &a.out {
        Some(path) => {
            let file = fs::File::create(path).map_err(io_err(path))?;
            record.write_csv(std::io::BufWriter::new(file)).map_err(io_err(path))
        }
        None => record.write_csv(out).map_err(out_err),
    }
}

fn suite_axes(v: Vary) -> Vec<SweepAxis> {
    match v {
        Vary::Length => vec![SweepAxis::Length],
        Vary::Height => vec![SweepAxis::Height],
        Vary::Width => vec![SweepAxis::Width],
        Vary::All => vec![SweepAxis::Length, SweepAxis::Height, SweepAxis::Width],
    }
}

fn validate(a: &ValidateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let mut beam = BeamExperiment {
        engine: a.engine.config(),
        ..BeamExperiment::default()
    };
    if let Some(dt) = a.dt {
        beam.dt = dt;
    }
    let report: SuiteReport = match a.suite {
        Suite::Beam => {
            if let Some(d) = a.duration {
                beam.trace = d;
            }
            beam_suite(&beam, &suite_axes(a.vary))?
        }
        Suite::Energy => {
            let default = EnergySuite::default();
            let suite = EnergySuite {
                beam: BeamExperiment {
                    gravity: default.beam.gravity,
                    ..beam
                },
                steps: a.steps,
                ..default
            };
            energy_suite(&suite)?
        }
        Suite::Natfreq => {
            let default = NatfreqSuite::default();
            beam.trace = a.duration.unwrap_or(default.beam.trace);
            natfreq_suite(&NatfreqSuite { beam, ..default })?
        }
    };
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        for (name, contents) in &report.tables {
            write_file(&dir.join(name), contents)?;
        }
    }
    write!(out, "{}", report.summary).map_err(out_err)?;
    for c in &report.checks {
        writeln!(out, "{c}").map_err(out_err)?;
    }
    let failures: Vec<String> = report.failures().map(|c| c.to_string()).collect();
    if failures.is_empty() {
        Ok(())
    } else {
        for f in &failures {
            let _ = writeln!(err, "{f}");
        }
        Err(CliError::Validation(format!("{} check(s) out of bounds", failures.len())))
    }
}

fn natfreq(a: &NatfreqArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.count == 0 {
        return Err(CliError::Usage("--count must be ≥ 1".into()));
    }
    let scene = load_scene(&a.scene)?;
    let x: Vec<Vec3> = scene.masses.iter().map(|m| m.x).collect();
    let modal = assemble_modal_system(&scene, &x).map_err(|e| CliError::Validation(e.to_string()))?;
    let modes = lowest_modes(&modal, a.count.min(modal.dof_count()), &EigenOptions::default())
        .map_err(|e| CliError::Validation(e.to_string()))?;
    writeln!(out, "mode,frequency_hz,residual").map_err(out_err)?;
    for (k, m) in modes.iter().enumerate() {
        writeln!(out, "{},{:.10e},{:.3e}", k + 1, m.frequency, m.residual).map_err(out_err)?;
    }
    if let Some(id) = a.trace {
        if id >= scene.masses.len() {
            return Err(CliError::Usage(format!("--trace {id}: scene has {} masses", scene.masses.len())));
        }
        let (record, _) = simulate(scene, a.engine.config(), &SimOptions::new(a.duration).trace([id]))?;
        let trace = record
            .trace(id)
            .ok_or_else(|| CliError::Usage("--duration too short to trace".into()))?;
        // Measure along the axis with the largest excursion.
        let axis = (0..3)
            .max_by(|&p, &q| {
                let span = |c: usize| {
                    let v = trace.component(c);
                    let (lo, hi) = v.values().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &y| (l.min(y), h.max(y)));
                    hi - lo
                };
                span(p).total_cmp(&span(q))
            })
            .unwrap_or(1);
        let f = fft_dominant_frequency(&trace.component(axis)).map_err(|e| CliError::Validation(e.to_string()))?;
        writeln!(out, "measured,{f:.10e},mass {id} axis {}", ["x", "y", "z"][axis]).map_err(out_err)?;
    }
    Ok(())
}

fn bench(a: &BenchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.steps < MIN_BENCH_STEPS {
        return Err(CliError::Usage(BenchError::TooFewSteps(a.steps).to_string()));
    }
    let default_threads = [std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)];
    let threads: &[usize] = if a.threads.is_empty() { &default_threads } else { &a.threads };
    let mut reports = Vec::new();
    for &springs in &a.springs {
        for &t in threads {
            for &integrator in &a.integrator {
                let cfg = BenchConfig {
                    mode: a.exec,
                    ..BenchConfig::new(springs, a.steps, t, integrator)
                };
                let r = run_bench(&cfg).map_err(|e| match e {
                    BenchError::TooFewSteps(_) | BenchError::NoSprings => CliError::Usage(e.to_string()),
                    BenchError::OutOfMemory { .. } => CliError::Io(e.to_string()),
                    BenchError::Engine(e) => e.into(),
                })?;
                writeln!(out, "{r}").map_err(out_err)?;
                reports.push(r);
            }
        }
    }
    if let Some(path) = &a.out {
        write_file(path, &bench_csv(&reports))?;
    }
    Ok(())
}

fn serve(a: &ServeArgs, err: &mut dyn Write) -> Result<(), CliError> {
    let scene = load_scene(&a.scene)?;
    let engine = crate::engine::Engine::new(scene, a.engine.config())?;
    let cfg = ServeConfig {
        port: a.port,
        rate: a.rate,
        decimate: a.decimate,
        steps_per_snapshot: a.steps_per_snapshot,
        ..ServeConfig::default()
    };
    let server = Server::start(engine, cfg).map_err(|e| match e {
        ServeError::Bind { .. } | ServeError::Io(_) => CliError::Io(e.to_string()),
        ServeError::InvalidConfig(_) => CliError::Usage(e.to_string()),
        ServeError::Engine(e) => e.into(),
    })?;
    let _ = writeln!(err, "listening on {}", server.local_addr());
    server.join();
    Ok(())
}
