//! Cantilever beam: Euler–Bernoulli reference frequency and the simulated
//! load-relax-release experiment.

use std::f64::consts::PI;
use std::fmt;

use super::freq::{zero_cross_frequency, zero_cross_frequency_interpolated};
use super::modal::{assemble_modal_system, static_solve, ModalError};
use super::{fft_dominant_frequency, TraceSeries};
use crate::engine::{run_recorded, Command, Engine, EngineConfig, EngineError, SimOptions, SimRecord};
use crate::lattice::voxel_block;
use crate::model::{Material, Scene, DEFAULT_DAMPING, DEFAULT_DT, STANDARD_GRAVITY};
use crate::Vec3;

/// (1.875…)², first cantilever bending mode.
pub const FIRST_MODE_CONSTANT: f64 = 1.875_104_068_711_961 * 1.875_104_068_711_961;

/// Exponents of L, H, W in the beam frequency law `f ∝ H / L²`.
pub const SCALING_EXPONENTS: [f64; 3] = [-2.0, 1.0, 0.0];

#[derive(Clone, Debug, PartialEq)]
pub struct BeamSpec {
    pub length: f64,
    pub height: f64,
    pub width: f64,
    /// Young's modulus (Pa).
    pub modulus: f64,
    /// kg/m³
    pub density: f64,
    pub mode_constant: f64,
    /// Lattice pitch (m).
    pub resolution: f64,
}

impl BeamSpec {
    /// Continuum equivalent of a voxel beam with `cells` = (L, H, W) in voxels.
    /// The modulus is the uniaxial-strain estimate `Σ k l² c⁴ / dim³` over one
    /// cell's springs; density is node mass per cell volume.
    pub fn from_voxels(cells: [usize; 3], dim: f64, material: &Material) -> Self {
        let k_edge = material.stiffness_for_length(dim);
        let face = material.stiffness_for_length(dim * 2f64.sqrt()) * 2.0 * dim * dim * 0.25;
        let long = material.stiffness_for_length(dim * 3f64.sqrt()) * 3.0 * dim * dim / 9.0;
        let modulus = (k_edge * dim * dim + 4.0 * face + 4.0 * long) / dim.powi(3);
        let density = material.node_mass(1, dim.powi(3)) / dim.powi(3);
        Self {
            length: cells[0] as f64 * dim,
            height: cells[1] as f64 * dim,
            width: cells[2] as f64 * dim,
            modulus,
            density,
            mode_constant: FIRST_MODE_CONSTANT,
            resolution: dim,
        }
    }

    pub fn second_moment(&self) -> f64 {
        self.height.powi(3) * self.width / 12.0
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn is_valid(&self) -> bool {
        [self.length, self.height, self.width, self.modulus, self.density]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0)
    }
}

/// `K/(2π) · sqrt(E I g / (ρ A L⁴))`, with the gravitational factor inside the root.
pub fn euler_bernoulli_frequency(beam: &BeamSpec) -> f64 {
    beam.mode_constant / (2.0 * PI)
        * (beam.modulus * beam.second_moment() * STANDARD_GRAVITY / (beam.density * beam.area() * beam.length.powi(4)))
            .sqrt()
}

/// `f(beam) / f(reference)` under the beam law.
pub fn predicted_ratio(reference: &BeamSpec, beam: &BeamSpec) -> f64 {
    euler_bernoulli_frequency(beam) / euler_bernoulli_frequency(reference)
}

#[derive(Debug, thiserror::Error)]
pub enum BeamError {
    #[error("invalid beam: {0}")]
    InvalidSpec(String),
    #[error("simulation diverged during {phase} at step {step}; try a smaller time step")]
    Diverged { phase: &'static str, step: u64 },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Modal(#[from] ModalError),
    #[error("tip trace shows no oscillation")]
    NoOscillation,
}

/// The five-step cantilever procedure: tip load, light damping, relaxation,
/// release of load and damping, tip trace and zero-cross count.
///
/// Nodes sit at voxel centres across the section, so a beam of `H × W`
/// voxels has `H × W` node columns; along the length an extra anchored node
/// layer forms the wall, leaving `L` free layers.
#[derive(Clone, Debug, PartialEq)]
pub struct BeamExperiment {
    /// Voxels along length (x), height (y), width (z).
    pub cells: [usize; 3],
    pub dim: f64,
    pub material: Material,
    pub gravity: Vec3,
    pub dt: f64,
    /// Static tip deflection produced by the load (m).
    pub tip_deflection: f64,
    pub relax_damping: f64,
    /// Seconds of damped relaxation under load.
    pub relax: f64,
    /// Seconds of free vibration traced after release.
    pub trace: f64,
    /// Record every this many steps.
    pub sample_every: u64,
    pub engine: EngineConfig,
}

impl Default for BeamExperiment {
    fn default() -> Self {
        Self {
            cells: [20, 4, 4],
            dim: 0.01,
            material: Material::default(),
            gravity: Vec3::zeros(),
            dt: DEFAULT_DT,
            tip_deflection: 2e-4,
            relax_damping: DEFAULT_DAMPING,
            relax: 0.5,
            trace: 1.0,
            sample_every: 1,
            engine: EngineConfig::default(),
        }
    }
}

impl BeamExperiment {
    pub fn with_cells(mut self, cells: [usize; 3]) -> Self {
        self.cells = cells;
        self
    }

    pub fn spec(&self) -> BeamSpec {
        BeamSpec::from_voxels(self.cells, self.dim, &self.material)
    }

    fn validate(&self) -> Result<(), BeamError> {
        if self.cells.iter().any(|&c| c == 0) {
            return Err(BeamError::InvalidSpec(format!("every beam dimension needs ≥ 1 voxel, got {:?}", self.cells)));
        }
        if !(self.dim > 0.0 && self.dt > 0.0 && self.relax >= 0.0 && self.trace > 0.0) {
            return Err(BeamError::InvalidSpec("dim, dt and trace must be positive".into()));
        }
        Ok(())
    }

    /// Lattice with the wall layer anchored (no load applied).
    pub fn scene(&self) -> Result<Scene, BeamError> {
        self.validate()?;
        let [l, h, w] = self.cells;
        let mut scene = voxel_block(Vec3::zeros(), [l, h - 1, w - 1], self.dim, &self.material);
        scene.anchor_where(|m| m.x.x < 0.5 * self.dim);
        scene.gravity = self.gravity;
        scene.dt = self.dt;
        Ok(scene)
    }

    /// Masses of the free-end layer.
    pub fn tip_layer(&self, scene: &Scene) -> Vec<usize> {
        let end = self.cells[0] as f64 * self.dim;
        (0..scene.masses.len())
            .filter(|&i| (scene.masses[i].x.x - end).abs() < 0.5 * self.dim)
            .collect()
    }

    /// Tip mass nearest the centre of the free-end section.
    pub fn tip_mass(&self, scene: &Scene) -> usize {
        let c = Vec3::new(
            self.cells[0] as f64 * self.dim,
            (self.cells[1] - 1) as f64 * self.dim * 0.5,
            (self.cells[2] - 1) as f64 * self.dim * 0.5,
        );
        self.tip_layer(scene)
            .into_iter()
            .min_by(|&a, &b| {
                (scene.masses[a].x - c)
                    .norm()
                    .total_cmp(&(scene.masses[b].x - c).norm())
                    .then(a.cmp(&b))
            })
            .expect("tip layer is never empty")
    }

    /// Per-mass tip force (−y) producing `tip_deflection` at the tip mass,
    /// from a static solve of the linearized stiffness.
    pub fn tip_force(&self, scene: &Scene) -> Result<f64, BeamError> {
        let x: Vec<Vec3> = scene.masses.iter().map(|m| m.x).collect();
        let modal = assemble_modal_system(scene, &x)?;
        let tip = self.tip_mass(scene);
        let layer = self.tip_layer(scene);
        let mut f = vec![0.0; modal.dof_count()];
        let mut tip_dof = None;
        for (d, &(mass, axis)) in modal.dofs.iter().enumerate() {
            if axis == 1 && layer.contains(&mass) {
                f[d] = -1.0;
            }
            if axis == 1 && mass == tip {
                tip_dof = Some(d);
            }
        }
        let u = static_solve(&modal, &f)?;
        let per_unit = -u[tip_dof.expect("tip mass is free")];
        Ok(self.tip_deflection / per_unit)
    }
}

/// Everything recorded by one beam run.
#[derive(Clone, Debug)]
pub struct BeamRun {
    pub tip: usize,
    /// Per-mass tip load (N, along −y).
    pub load: f64,
    /// Tip y after relaxation, at release.
    pub released_y: f64,
    /// Mean tip y over the free-vibration trace; the zero-cross reference.
    pub reference: f64,
    pub relax: SimRecord,
    pub free: SimRecord,
    /// Tip y during free vibration.
    pub tip_trace: TraceSeries<f64>,
    /// Interpolated zero-cross frequency (Hz).
    pub frequency: f64,
    /// Plain zero-cross count frequency (Hz).
    pub counted_frequency: f64,
}

impl BeamRun {
    pub fn fft_frequency(&self) -> Option<f64> {
        fft_dominant_frequency(&self.tip_trace).ok()
    }
}

fn phase_error(e: EngineError, phase: &'static str) -> BeamError {
    match e {
        EngineError::Divergence { step, .. } => BeamError::Diverged { phase, step },
        other => BeamError::Engine(other),
    }
}

pub fn run_beam_experiment(exp: &BeamExperiment) -> Result<BeamRun, BeamError> {
    let mut scene = exp.scene()?;
    let load = exp.tip_force(&scene)?;
    let tip = exp.tip_mass(&scene);
    for i in exp.tip_layer(&scene) {
        scene.masses[i].f_ext = Vec3::new(0.0, -load, 0.0);
    }
    scene.damping = exp.relax_damping;
    let mut engine = Engine::new(scene, exp.engine.clone())?;

    let every = exp.sample_every.max(1);
    let relax = run_recorded(&mut engine, &SimOptions::new(exp.relax).trace([tip]).every(every), None)
        .map_err(|e| phase_error(e, "relaxation"))?;
    engine.apply(Command::ClearForces)?;
    engine.apply(Command::SetDamping { value: 0.0 })?;
    let released_y = engine.state().x[tip].y;

    let t0 = engine.time();
    let free = run_recorded(&mut engine, &SimOptions::new(exp.trace).trace([tip]).every(every), None)
        .map_err(|e| phase_error(e, "free vibration"))?;
    let tip_trace = free.trace(tip).ok_or(BeamError::NoOscillation)?.component(1);
    let tip_trace = TraceSeries::new(tip_trace.times().iter().map(|t| t - t0).collect(), tip_trace.values().to_vec())
        .map_err(|_| BeamError::NoOscillation)?;
    let reference = tip_trace.mean();
    let frequency = zero_cross_frequency_interpolated(&tip_trace, reference);
    if frequency == 0.0 {
        return Err(BeamError::NoOscillation);
    }
    Ok(BeamRun {
        tip,
        load,
        released_y,
        reference,
        counted_frequency: zero_cross_frequency(&tip_trace, reference),
        relax,
        free,
        tip_trace,
        frequency,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    Length,
    Height,
    Width,
}

impl SweepAxis {
    pub fn index(self) -> usize {
        match self {
            SweepAxis::Length => 0,
            SweepAxis::Height => 1,
            SweepAxis::Width => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Length => "length",
            SweepAxis::Height => "height",
            SweepAxis::Width => "width",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "length" | "l" => Ok(SweepAxis::Length),
            "height" | "h" => Ok(SweepAxis::Height),
            "width" | "w" => Ok(SweepAxis::Width),
            other => Err(format!("unknown sweep axis {other:?}; expected length, height or width")),
        }
    }
}

/// Default sweep factors.
pub const SWEEP_FACTORS: [f64; 4] = [1.0, 1.25, 1.5, 2.0];

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub axis: SweepAxis,
    /// Voxel count along the swept axis.
    pub voxels: usize,
    /// Swept dimension (m).
    pub value: f64,
    pub predicted: f64,
    pub measured: f64,
    pub predicted_norm: f64,
    pub measured_norm: f64,
}

impl SweepRow {
    /// `|measured_norm − predicted_norm| / predicted_norm`.
    pub fn rel_error(&self) -> f64 {
        (self.measured_norm - self.predicted_norm).abs() / self.predicted_norm
    }

    /// Deviation of the normalized measurement from a constant (width axis).
    pub fn deviation_from_constant(&self) -> f64 {
        (self.measured_norm - 1.0).abs()
    }
}

/// Runs the experiment at `base.cells` scaled by each factor along `axis`
/// (rounded to whole voxels) and normalizes against the first entry.
pub fn run_sweep(base: &BeamExperiment, axis: SweepAxis, factors: &[f64]) -> Result<Vec<SweepRow>, BeamError> {
    let a = axis.index();
    let mut rows: Vec<SweepRow> = Vec::with_capacity(factors.len());
    let mut reference: Option<(BeamSpec, f64)> = None;
    for &factor in factors {
        let mut cells = base.cells;
        cells[a] = ((base.cells[a] as f64 * factor).round() as usize).max(1);
        let exp = base.clone().with_cells(cells);
        let spec = exp.spec();
        let run = run_beam_experiment(&exp)?;
        let predicted = euler_bernoulli_frequency(&spec);
        let (ref_spec, ref_measured) = reference.get_or_insert_with(|| (spec.clone(), run.frequency)).clone();
        rows.push(SweepRow {
            axis,
            voxels: cells[a],
            value: [spec.length, spec.height, spec.width][a],
            predicted,
            measured: run.frequency,
            predicted_norm: predicted_ratio(&ref_spec, &spec),
            measured_norm: run.frequency / ref_measured,
        });
    }
    Ok(rows)
}

pub const SWEEP_CSV_HEADER: &str = "axis,voxels,value_m,predicted_hz,measured_hz,predicted_norm,measured_norm,rel_error";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_CSV_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.6e},{:.10e},{:.10e},{:.10e},{:.10e},{:.6e}\n",
            r.axis,
            r.voxels,
            r.value,
            r.predicted,
            r.measured,
            r.predicted_norm,
            r.measured_norm,
            r.rel_error()
        ));
    }
    out
}

/// Plain-text table of normalized frequencies.
pub fn sweep_summary(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    if let Some(first) = rows.first() {
        out.push_str(&format!("{} sweep (normalized to {} voxels)\n", first.axis, first.voxels));
    }
    out.push_str("  voxels  predicted  measured   error\n");
    for r in rows {
        out.push_str(&format!(
            "  {:>6}  {:>9.4}  {:>8.4}  {:>5.2}%\n",
            r.voxels,
            r.predicted_norm,
            r.measured_norm,
            100.0 * r.rel_error()
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(l: f64, h: f64, w: f64) -> BeamSpec {
        BeamSpec {
            length: l,
            height: h,
            width: w,
            modulus: 1e7,
            density: 1000.0,
            mode_constant: FIRST_MODE_CONSTANT,
            resolution: 0.01,
        }
    }

    #[test]
    fn formula_by_hand() {
        let b = spec(1.0, 0.1, 0.1);
        let i = 0.1f64.powi(4) / 12.0;
        let expect = FIRST_MODE_CONSTANT / (2.0 * PI) * (1e7 * i * 9.81 / (1000.0 * 0.01)).sqrt();
        assert!((euler_bernoulli_frequency(&b) - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn scaling_laws() {
        let base = spec(1.0, 0.1, 0.05);
        assert!((predicted_ratio(&base, &spec(2.0, 0.1, 0.05)) - 0.25).abs() < 1e-14);
        assert!((predicted_ratio(&base, &spec(1.0, 0.2, 0.05)) - 2.0).abs() < 1e-14);
        assert!((predicted_ratio(&base, &spec(1.0, 0.1, 0.1)) - 1.0).abs() < 1e-14);
        for (a, &p) in SCALING_EXPONENTS.iter().enumerate() {
            let mut s = base.clone();
            match a {
                0 => s.length *= 3.0,
                1 => s.height *= 3.0,
                _ => s.width *= 3.0,
            }
            assert!((predicted_ratio(&base, &s) - 3f64.powf(p)).abs() < 1e-12);
        }
    }

    #[test]
    fn experiment_geometry() {
        let exp = BeamExperiment::default().with_cells([5, 2, 3]);
        let scene = exp.scene().unwrap();
        assert_eq!(scene.masses.len(), 6 * 2 * 3);
        assert_eq!(scene.masses.iter().filter(|m| m.fixed).count(), 6);
        assert_eq!(exp.tip_layer(&scene).len(), 6);
        let tip = exp.tip_mass(&scene);
        assert!((scene.masses[tip].x - Vec3::new(0.05, 0.0, 0.01)).norm() < 1e-12);
    }

    #[test]
    fn tip_force_gives_requested_deflection() {
        let exp = BeamExperiment::default().with_cells([6, 2, 2]);
        let scene = exp.scene().unwrap();
        let f = exp.tip_force(&scene).unwrap();
        assert!(f > 0.0);
        let twice = BeamExperiment { tip_deflection: 4e-4, ..exp.clone() };
        assert!((twice.tip_force(&scene).unwrap() - 2.0 * f).abs() < 1e-9 * f);
    }

    #[test]
    fn short_beam_oscillates() {
        let exp = BeamExperiment {
            relax: 0.05,
            trace: 0.3,
            ..BeamExperiment::default().with_cells([6, 2, 2])
        };
        let run = run_beam_experiment(&exp).unwrap();
        assert!(run.frequency > 0.0);
        assert!(run.released_y < 0.0);
        let fft = run.fft_frequency().unwrap();
        assert!((fft - run.frequency).abs() < 1.0 / exp.trace, "{fft} vs {}", run.frequency);
    }

    #[test]
    fn zero_voxels_rejected() {
        let exp = BeamExperiment::default().with_cells([0, 2, 2]);
        assert!(matches!(exp.scene(), Err(BeamError::InvalidSpec(_))));
    }
}
