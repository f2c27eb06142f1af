//! Time stepping: force evaluation, the three explicit integrators, anchors,
//! contact planes, damping, and the two-phase slot-reservation parallel
//! schedule with a serial reference mode.
//!
//! Every step evaluates forces in two phases. Phase 1 visits springs: in
//! serial mode they are accumulated into a per-mass buffer in spring order;
//! in the parallel modes each spring task computes its force once and
//! appends `+F`/`-F` into reserved slots of its two endpoints ([`ForceSlab`]).
//! Phase 2 visits masses: each sums its slots, adds gravity, external and
//! contact forces, integrates, and resets its counter.

mod command;
mod force;
mod sim;
mod slab;

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use command::Command;
pub use force::{apply_contact_plane, spring_force, total_force, try_spring_force, DEGENERATE_LENGTH};
pub use sim::{run_recorded, simulate, steps_for, SimOptions, SimRecord};
pub use slab::{ForceSlab, SlotOverflow, CONSTRAINT_SLOTS};

use crate::model::{validate_scene, Scene, Violation};
use crate::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Euler,
    Verlet,
    Rk4,
}

impl Integrator {
    pub const ALL: [Integrator; 3] = [Integrator::Euler, Integrator::Verlet, Integrator::Rk4];

    pub fn name(self) -> &'static str {
        match self {
            Integrator::Euler => "euler",
            Integrator::Verlet => "verlet",
            Integrator::Rk4 => "rk4",
        }
    }
}

impl fmt::Display for Integrator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Integrator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "euler" => Ok(Integrator::Euler),
            "verlet" => Ok(Integrator::Verlet),
            "rk4" => Ok(Integrator::Rk4),
            other => Err(format!("unknown integrator {other:?}; expected one of {{euler, verlet, rk4}}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExecMode {
    /// Single-threaded reference: springs accumulated in id order.
    Serial,
    /// Slot reservation, slots summed in arrival order.
    Parallel,
    /// Slot reservation, slots summed in spring-id order; bitwise equal to serial.
    #[serde(rename = "parallel-det")]
    ParallelDeterministic,
}

impl ExecMode {
    pub fn name(self) -> &'static str {
        match self {
            ExecMode::Serial => "serial",
            ExecMode::Parallel => "parallel",
            ExecMode::ParallelDeterministic => "parallel-det",
        }
    }
}

impl fmt::Display for ExecMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExecMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "serial" => Ok(ExecMode::Serial),
            "parallel" => Ok(ExecMode::Parallel),
            "parallel-det" | "parallel-deterministic" => Ok(ExecMode::ParallelDeterministic),
            other => Err(format!("unknown execution mode {other:?}; expected one of {{serial, parallel, parallel-det}}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EngineConfig {
    pub integrator: Integrator,
    pub mode: ExecMode,
    /// Worker threads for the parallel modes; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            integrator: Integrator::Verlet,
            mode: ExecMode::Parallel,
            threads: None,
        }
    }
}

impl EngineConfig {
    pub fn new(integrator: Integrator, mode: ExecMode) -> Self {
        Self {
            integrator,
            mode,
            threads: None,
        }
    }

    pub fn threads(mut self, n: usize) -> Self {
        self.threads = Some(n);
        self
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EngineError {
    #[error("invalid scene: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidScene(Vec<Violation>),
    #[error("simulation diverged at step {step}: mass {mass} has a non-finite position or velocity")]
    Divergence { step: u64, mass: usize },
    #[error(transparent)]
    SlotOverflow(#[from] SlotOverflow),
    #[error("invalid command: {0}")]
    InvalidCommand(String),
    #[error("failed to build thread pool: {0}")]
    ThreadPool(String),
}

/// Dynamic state of a running simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct EngineState {
    pub x: Vec<Vec3>,
    pub v: Vec<Vec3>,
    /// Previous positions, present only while Verlet is running past its first step.
    pub x_prev: Option<Vec<Vec3>>,
    pub t: f64,
    pub n: u64,
}

impl EngineState {
    pub fn from_scene(scene: &Scene) -> Self {
        Self {
            x: scene.masses.iter().map(|m| m.x).collect(),
            v: scene.masses.iter().map(|m| m.v).collect(),
            x_prev: None,
            t: 0.0,
            n: 0,
        }
    }
}

#[derive(Debug, Default)]
struct Scratch {
    x: Vec<Vec3>,
    v: Vec<Vec3>,
    acc_x: Vec<Vec3>,
    acc_v: Vec<Vec3>,
    prev: Vec<Vec3>,
}

impl Scratch {
    fn sized(n: usize) -> Self {
        Self {
            x: vec![Vec3::zeros(); n],
            v: vec![Vec3::zeros(); n],
            acc_x: vec![Vec3::zeros(); n],
            acc_v: vec![Vec3::zeros(); n],
            prev: vec![Vec3::zeros(); n],
        }
    }
}

/// Read-only force context shared by the phases of one evaluation.
struct Ctx<'a> {
    scene: &'a Scene,
    groups: &'a [Option<usize>],
    slab: &'a ForceSlab,
    mode: ExecMode,
    pool: Option<&'a rayon::ThreadPool>,
    degenerate: &'a AtomicU64,
}

/// Per-mass spring sums produced by phase 1.
enum Sums<'a> {
    Serial(&'a [Vec3]),
    Slab(&'a ForceSlab, bool),
}

impl Sums<'_> {
    #[inline]
    fn take(&self, i: usize) -> Vec3 {
        match self {
            Sums::Serial(acc) => acc[i],
            Sums::Slab(slab, det) => slab.drain_sum(i, *det),
        }
    }
}

const PAR_MIN_LEN: usize = 256;

impl Ctx<'_> {
    fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        match self.pool {
            Some(p) if self.mode != ExecMode::Serial => p.install(f),
            _ => f(),
        }
    }

    /// Minimum chunk length; serial mode never splits.
    fn min_len(&self) -> usize {
        if self.mode == ExecMode::Serial {
            usize::MAX
        } else {
            PAR_MIN_LEN
        }
    }

    fn rest_scales(&self, t: f64) -> Vec<f64> {
        self.scene.actuation.iter().map(|g| g.scale(t)).collect()
    }

    /// Phase 1.
    fn spring_pass<'s>(&'s self, x: &[Vec3], t: f64, acc: &'s mut [Vec3]) -> Result<Sums<'s>, EngineError> {
        let scales = self.rest_scales(t);
        let springs = &self.scene.springs;
        let groups = self.groups;
        let rest = |s: usize| match groups[s] {
            Some(g) => springs[s].l0 * scales[g],
            None => springs[s].l0,
        };
        match self.mode {
            ExecMode::Serial => {
                acc.fill(Vec3::zeros());
                for (s, spring) in springs.iter().enumerate() {
                    let f = match try_spring_force(&x[spring.i], &x[spring.j], spring.k, rest(s)) {
                        Some(f) => f,
                        None => {
                            self.degenerate.fetch_add(1, Ordering::Relaxed);
                            Vec3::zeros()
                        }
                    };
                    acc[spring.i] += f;
                    acc[spring.j] += -f;
                }
                Ok(Sums::Serial(acc))
            }
            ExecMode::Parallel | ExecMode::ParallelDeterministic => {
                let overflow = AtomicUsize::new(usize::MAX);
                let slab = self.slab;
                self.install(|| {
                    springs.par_iter().with_min_len(PAR_MIN_LEN).enumerate().for_each(|(s, spring)| {
                        let f = match try_spring_force(&x[spring.i], &x[spring.j], spring.k, rest(s)) {
                            Some(f) => f,
                            None => {
                                self.degenerate.fetch_add(1, Ordering::Relaxed);
                                Vec3::zeros()
                            }
                        };
                        if slab.push(spring.i, s as u32, f).is_err() {
                            overflow.fetch_min(spring.i, Ordering::Relaxed);
                        }
                        if slab.push(spring.j, s as u32, -f).is_err() {
                            overflow.fetch_min(spring.j, Ordering::Relaxed);
                        }
                    })
                });
                let bad = overflow.load(Ordering::Relaxed);
                if bad != usize::MAX {
                    let capacity = slab.capacity(bad);
                    slab.reset();
                    return Err(SlotOverflow { mass: bad, capacity }.into());
                }
                Ok(Sums::Slab(slab, self.mode == ExecMode::ParallelDeterministic))
            }
        }
    }
}

/// Tracks the smallest mass index with a non-finite state.
struct DivergenceFlag(AtomicUsize);

impl DivergenceFlag {
    fn new() -> Self {
        Self(AtomicUsize::new(usize::MAX))
    }

    #[inline]
    fn check(&self, i: usize, x: &Vec3, v: &Vec3) {
        if !(x.iter().all(|c| c.is_finite()) && v.iter().all(|c| c.is_finite())) {
            self.0.fetch_min(i, Ordering::Relaxed);
        }
    }

    fn result(&self, step: u64) -> Result<(), EngineError> {
        match self.0.load(Ordering::Relaxed) {
            usize::MAX => Ok(()),
            mass => Err(EngineError::Divergence { step, mass }),
        }
    }
}

/// A mass-spring simulation in progress.
pub struct Engine {
    scene: Scene,
    initial_scene: Scene,
    state: EngineState,
    integrator: Integrator,
    mode: ExecMode,
    groups: Vec<Option<usize>>,
    slab: ForceSlab,
    slab_dirty: bool,
    acc: Vec<Vec3>,
    scratch: Scratch,
    pool: Option<Arc<rayon::ThreadPool>>,
    degenerate: AtomicU64,
    paused: AtomicBool,
}

impl fmt::Debug for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Engine")
            .field("masses", &self.scene.masses.len())
            .field("springs", &self.scene.springs.len())
            .field("integrator", &self.integrator)
            .field("mode", &self.mode)
            .field("t", &self.state.t)
            .field("n", &self.state.n)
            .finish()
    }
}

impl Engine {
    pub fn new(scene: Scene, config: EngineConfig) -> Result<Self, EngineError> {
        let violations = validate_scene(&scene);
        if !violations.is_empty() {
            return Err(EngineError::InvalidScene(violations));
        }
        let pool = match config.threads {
            Some(n) => Some(Arc::new(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n.max(1))
                    .build()
                    .map_err(|e| EngineError::ThreadPool(e.to_string()))?,
            )),
            None => None,
        };
        let n = scene.masses.len();
        Ok(Self {
            groups: scene.spring_groups(),
            slab: ForceSlab::for_scene(&scene),
            slab_dirty: false,
            acc: vec![Vec3::zeros(); n],
            scratch: Scratch::sized(n),
            state: EngineState::from_scene(&scene),
            initial_scene: scene.clone(),
            scene,
            integrator: config.integrator,
            mode: config.mode,
            pool,
            degenerate: AtomicU64::new(0),
            paused: AtomicBool::new(false),
        })
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn state(&self) -> &EngineState {
        &self.state
    }

    pub fn integrator(&self) -> Integrator {
        self.integrator
    }

    pub fn mode(&self) -> ExecMode {
        self.mode
    }

    pub fn threads(&self) -> usize {
        match (&self.pool, self.mode) {
            (_, ExecMode::Serial) => 1,
            (Some(p), _) => p.current_num_threads(),
            (None, _) => rayon::current_num_threads(),
        }
    }

    pub fn time(&self) -> f64 {
        self.state.t
    }

    pub fn steps(&self) -> u64 {
        self.state.n
    }

    /// Count of spring evaluations skipped because endpoints coincided.
    pub fn degenerate_springs(&self) -> u64 {
        self.degenerate.load(Ordering::Relaxed)
    }

    pub fn is_paused(&self) -> bool {
        self.paused.load(Ordering::Relaxed)
    }

    /// Replaces the dynamic state, e.g. to restart from a saved configuration.
    pub fn set_state(&mut self, state: EngineState) {
        assert_eq!(state.x.len(), self.scene.masses.len());
        self.state = state;
    }

    pub fn set_mode(&mut self, mode: ExecMode) {
        self.mode = mode;
    }

    pub fn set_integrator(&mut self, integrator: Integrator) {
        if integrator != self.integrator {
            self.integrator = integrator;
            self.state.x_prev = None;
        }
    }

    pub fn set_damping(&mut self, c: f64) -> Result<(), EngineError> {
        if !(0.0..1.0).contains(&c) {
            return Err(EngineError::InvalidCommand(format!("damping must satisfy 0 <= c < 1, got {c}")));
        }
        self.scene.damping = c;
        Ok(())
    }

    /// Mutable access to per-mass external force.
    pub fn set_external_force(&mut self, mass: usize, f: Vec3) {
        self.scene.masses[mass].f_ext = f;
    }

    pub fn apply(&mut self, cmd: Command) -> Result<(), EngineError> {
        match cmd {
            Command::Pause => self.paused.store(true, Ordering::Relaxed),
            Command::Resume => self.paused.store(false, Ordering::Relaxed),
            Command::Reset => {
                self.scene = self.initial_scene.clone();
                self.state = EngineState::from_scene(&self.scene);
                self.slab.reset();
            }
            Command::SetDamping { value } => self.set_damping(value)?,
            Command::ApplyForce { masses, force } => {
                if let Some(&bad) = masses.iter().find(|&&m| m >= self.scene.masses.len()) {
                    return Err(EngineError::InvalidCommand(format!("mass {bad} does not exist")));
                }
                if !force.iter().all(|c| c.is_finite()) {
                    return Err(EngineError::InvalidCommand("force must be finite".into()));
                }
                for m in masses {
                    self.scene.masses[m].f_ext += force;
                }
            }
            Command::ClearForces => {
                for m in &mut self.scene.masses {
                    m.f_ext = Vec3::zeros();
                }
            }
            Command::SetActuation {
                group,
                amplitude,
                frequency,
            } => {
                if !(amplitude.abs() < 1.0) || !frequency.is_finite() {
                    return Err(EngineError::InvalidCommand(
                        "actuation needs |amplitude| < 1 and finite frequency".into(),
                    ));
                }
                let g = self
                    .scene
                    .actuation
                    .iter_mut()
                    .find(|g| g.label == group)
                    .ok_or_else(|| EngineError::InvalidCommand(format!("unknown actuation group {group:?}")))?;
                g.amplitude = amplitude;
                g.frequency = frequency;
            }
            Command::SetIntegrator { name } => self.set_integrator(name),
        }
        Ok(())
    }

    fn ctx(&self) -> Ctx<'_> {
        Ctx {
            scene: &self.scene,
            groups: &self.groups,
            slab: &self.slab,
            mode: self.mode,
            pool: self.pool.as_deref(),
            degenerate: &self.degenerate,
        }
    }

    /// Runs only the parallel spring phase on the current state and leaves the
    /// slab filled for inspection. The next step clears it.
    pub fn scatter_spring_forces(&mut self) -> Result<&ForceSlab, EngineError> {
        if self.slab_dirty {
            self.slab.reset();
        }
        let mode = if self.mode == ExecMode::Serial {
            ExecMode::Parallel
        } else {
            self.mode
        };
        let ctx = Ctx { mode, ..self.ctx() };
        let mut acc = Vec::new();
        ctx.spring_pass(&self.state.x, self.state.t, &mut acc)?;
        self.slab_dirty = true;
        Ok(&self.slab)
    }

    /// Total force on every mass at the current state, via the configured mode.
    pub fn forces(&mut self) -> Result<Vec<Vec3>, EngineError> {
        self.clean_slab();
        let ctx = Ctx {
            scene: &self.scene,
            groups: &self.groups,
            slab: &self.slab,
            mode: self.mode,
            pool: self.pool.as_deref(),
            degenerate: &self.degenerate,
        };
        let sums = ctx.spring_pass(&self.state.x, self.state.t, &mut self.acc)?;
        let (x, v) = (&self.state.x, &self.state.v);
        Ok((0..x.len())
            .map(|i| sums.take(i) + force::body_force(ctx.scene, i, &x[i], &v[i]))
            .collect())
    }

    fn clean_slab(&mut self) {
        if self.slab_dirty {
            self.slab.reset();
            self.slab_dirty = false;
        }
    }

    /// Advances one time step with the configured integrator.
    pub fn step(&mut self) -> Result<(), EngineError> {
        self.clean_slab();
        match self.integrator {
            Integrator::Euler => self.step_euler(),
            Integrator::Verlet => self.step_verlet(),
            Integrator::Rk4 => self.step_rk4(),
        }
    }

    pub fn run_steps(&mut self, steps: u64) -> Result<(), EngineError> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }

    fn finish_step(&mut self) {
        self.state.n += 1;
        self.state.t = self.state.n as f64 * self.scene.dt;
    }

    /// Forward Euler: `x += dt v`, `v += dt f / m`, then damping.
    pub fn step_euler(&mut self) -> Result<(), EngineError> {
        let Self {
            scene,
            groups,
            slab,
            acc,
            scratch,
            state,
            pool,
            degenerate,
            mode,
            ..
        } = self;
        let ctx = Ctx {
            scene,
            groups,
            slab,
            mode: *mode,
            pool: pool.as_deref(),
            degenerate,
        };
        let dt = scene.dt;
        let keep = 1.0 - scene.damping;
        let sums = ctx.spring_pass(&state.x, state.t, acc)?;
        let flag = DivergenceFlag::new();
        let (x0, v0) = (&state.x, &state.v);
        ctx.install(|| {
            (&mut scratch.x[..], &mut scratch.v[..])
                .into_par_iter()
                .with_min_len(ctx.min_len())
                .enumerate()
                .for_each(|(i, (xn, vn))| {
                    let m = &scene.masses[i];
                    let (x, v) = (x0[i], v0[i]);
                    let f = sums.take(i) + force::body_force(scene, i, &x, &v);
                    if m.fixed {
                        *xn = x;
                        *vn = v;
                    } else {
                        *xn = x + v * dt;
                        *vn = (v + f * (dt / m.m)) * keep;
                    }
                    flag.check(i, xn, vn);
                })
        });
        flag.result(state.n + 1)?;
        std::mem::swap(&mut state.x, &mut scratch.x);
        std::mem::swap(&mut state.v, &mut scratch.v);
        self.finish_step();
        Ok(())
    }

    /// Position Verlet. The first step uses the Taylor start
    /// `x1 = x0 + dt v0 + dt²/(2m) f`; later steps `x' = 2x - x_prev + dt²/m f`.
    /// Reported velocity is the central difference `(x' - x_prev) / 2dt`.
    pub fn step_verlet(&mut self) -> Result<(), EngineError> {
        let Self {
            scene,
            groups,
            slab,
            acc,
            scratch,
            state,
            pool,
            degenerate,
            mode,
            ..
        } = self;
        let ctx = Ctx {
            scene,
            groups,
            slab,
            mode: *mode,
            pool: pool.as_deref(),
            degenerate,
        };
        let dt = scene.dt;
        let damping = scene.damping;
        let keep = 1.0 - damping;
        let sums = ctx.spring_pass(&state.x, state.t, acc)?;
        let flag = DivergenceFlag::new();
        let prev_in = state.x_prev.take();
        let mut prev_out = std::mem::take(&mut scratch.prev);
        let (x0, v0) = (&state.x, &state.v);
        let prev_ref = prev_in.as_deref();
        ctx.install(|| {
            (&mut scratch.x[..], &mut scratch.v[..], &mut prev_out[..])
                .into_par_iter()
                .with_min_len(ctx.min_len())
                .enumerate()
                .for_each(|(i, (xn, vn, pn))| {
                    let m = &scene.masses[i];
                    let (x, v) = (x0[i], v0[i]);
                    let f = sums.take(i) + force::body_force(scene, i, &x, &v);
                    if m.fixed {
                        *xn = x;
                        *vn = v;
                        *pn = x;
                    } else {
                        match prev_ref {
                            None => {
                                *xn = x + v * dt + f * (dt * dt / (2.0 * m.m));
                                *vn = (v + f * (dt / m.m)) * keep;
                            }
                            Some(prev) => {
                                *xn = x * 2.0 - prev[i] + f * (dt * dt / m.m);
                                *vn = (*xn - prev[i]) / (2.0 * dt);
                            }
                        }
                        *pn = if damping == 0.0 { x } else { *xn - (*xn - x) * keep };
                    }
                    flag.check(i, xn, vn);
                })
        });
        if let Err(e) = flag.result(state.n + 1) {
            state.x_prev = prev_in;
            scratch.prev = prev_out;
            return Err(e);
        }
        std::mem::swap(&mut state.x, &mut scratch.x);
        std::mem::swap(&mut state.v, &mut scratch.v);
        state.x_prev = Some(prev_out);
        scratch.prev = prev_in.unwrap_or_else(|| vec![Vec3::zeros(); state.x.len()]);
        self.finish_step();
        Ok(())
    }

    /// Classical fourth-order Runge–Kutta on the (x, v) system.
    pub fn step_rk4(&mut self) -> Result<(), EngineError> {
        let Self {
            scene,
            groups,
            slab,
            acc,
            scratch,
            state,
            pool,
            degenerate,
            mode,
            ..
        } = self;
        let ctx = Ctx {
            scene,
            groups,
            slab,
            mode: *mode,
            pool: pool.as_deref(),
            degenerate,
        };
        let dt = scene.dt;
        let keep = 1.0 - scene.damping;
        let t = state.t;
        let (x0, v0) = (&state.x, &state.v);
        let Scratch {
            x: sx,
            v: sv,
            acc_x,
            acc_v,
            ..
        } = scratch;
        acc_x.resize(x0.len(), Vec3::zeros());
        acc_v.resize(x0.len(), Vec3::zeros());

        // Stage 1 at (x0, v0).
        {
            let sums = ctx.spring_pass(x0, t, acc)?;
            ctx.install(|| {
                (&mut sx[..], &mut sv[..], &mut acc_x[..], &mut acc_v[..])
                    .into_par_iter()
                    .with_min_len(ctx.min_len())
                    .enumerate()
                    .for_each(|(i, (xs, vs, ax, av))| {
                        let m = &scene.masses[i];
                        let (x, v) = (x0[i], v0[i]);
                        let f = sums.take(i) + force::body_force(scene, i, &x, &v);
                        if m.fixed {
                            *xs = x;
                            *vs = v;
                            *ax = Vec3::zeros();
                            *av = Vec3::zeros();
                        } else {
                            let a = f / m.m;
                            *ax = v;
                            *av = a;
                            *xs = x + v * (0.5 * dt);
                            *vs = v + a * (0.5 * dt);
                        }
                    })
            });
        }
        // Stages 2 and 3 at the midpoint; stage 4 at the end.
        for (stage_t, next_h, weight) in [(t + 0.5 * dt, 0.5 * dt, 2.0), (t + 0.5 * dt, dt, 2.0)] {
            let sums = ctx.spring_pass(sx, stage_t, acc)?;
            ctx.install(|| {
                (&mut sx[..], &mut sv[..], &mut acc_x[..], &mut acc_v[..])
                    .into_par_iter()
                    .with_min_len(ctx.min_len())
                    .enumerate()
                    .for_each(|(i, (xs, vs, ax, av))| {
                        let m = &scene.masses[i];
                        let f = sums.take(i) + force::body_force(scene, i, xs, vs);
                        if !m.fixed {
                            let a = f / m.m;
                            *ax += *vs * weight;
                            *av += a * weight;
                            *xs = x0[i] + *vs * next_h;
                            *vs = v0[i] + a * next_h;
                        }
                    })
            });
        }
        let flag = DivergenceFlag::new();
        {
            let sums = ctx.spring_pass(sx, t + dt, acc)?;
            ctx.install(|| {
                (&mut sx[..], &mut sv[..], &acc_x[..], &acc_v[..])
                    .into_par_iter()
                    .with_min_len(ctx.min_len())
                    .enumerate()
                    .for_each(|(i, (xs, vs, ax, av))| {
                        let m = &scene.masses[i];
                        let f = sums.take(i) + force::body_force(scene, i, xs, vs);
                        if m.fixed {
                            *xs = x0[i];
                            *vs = v0[i];
                        } else {
                            let a = f / m.m;
                            let new_x = x0[i] + (ax + *vs) * (dt / 6.0);
                            let new_v = (v0[i] + (av + a) * (dt / 6.0)) * keep;
                            *xs = new_x;
                            *vs = new_v;
                        }
                        flag.check(i, xs, vs);
                    })
            });
        }
        flag.result(state.n + 1)?;
        std::mem::swap(&mut state.x, sx);
        std::mem::swap(&mut state.v, sv);
        self.finish_step();
        Ok(())
    }
}
