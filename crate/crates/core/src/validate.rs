//! Validation suites behind `springsim validate`: beam scaling sweeps,
//! energy conservation and natural-frequency agreement. Each suite returns
//! its report tables and the checks it evaluated.

use std::fmt;

use crate::analysis::beam::{sweep_csv, sweep_summary, SWEEP_FACTORS};
use crate::analysis::freq::fft_dominant_frequency;
use crate::analysis::modal::{lowest_modes, EigenOptions};
use crate::analysis::{
    assemble_modal_system, run_sweep, BeamError, BeamExperiment, Energies, FreqError, ModalError, SweepAxis,
    TraceSeries,
};
use crate::engine::{run_recorded, Command, Engine, EngineConfig, EngineError, ExecMode, Integrator, SimOptions};
use crate::model::{Mass, Scene, SceneBuilder, Spring, STANDARD_GRAVITY};
use crate::Vec3;

#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error(transparent)]
    Beam(#[from] BeamError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Modal(#[from] ModalError),
    #[error(transparent)]
    Freq(#[from] FreqError),
}

impl SuiteError {
    pub fn is_divergence(&self) -> bool {
        matches!(
            self,
            SuiteError::Engine(EngineError::Divergence { .. }) | SuiteError::Beam(BeamError::Diverged { .. })
        )
    }
}

/// One bounded quantity: passes iff `value <= bound`.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
        }
    }

    pub fn passed(&self) -> bool {
        self.value <= self.bound
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {:.4e} (bound {:.4e})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.bound
        )
    }
}

#[derive(Clone, Debug, Default)]
pub struct SuiteReport {
    /// `(file name, contents)` of each emitted table.
    pub tables: Vec<(String, String)>,
    pub checks: Vec<Check>,
    /// Human-readable summary.
    pub summary: String,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

/// Normalized-frequency tolerance per sweep axis.
pub fn sweep_tolerance(axis: SweepAxis) -> f64 {
    match axis {
        SweepAxis::Length | SweepAxis::Height => 0.10,
        SweepAxis::Width => 0.15,
    }
}

pub fn beam_suite(base: &BeamExperiment, axes: &[SweepAxis]) -> Result<SuiteReport, SuiteError> {
    let mut report = SuiteReport::default();
    for &axis in axes {
        let rows = run_sweep(base, axis, &SWEEP_FACTORS)?;
        for r in &rows {
            report.checks.push(Check::new(
                format!("{axis} {} voxels normalized error", r.voxels),
                r.rel_error(),
                sweep_tolerance(axis),
            ));
        }
        report.summary.push_str(&sweep_summary(&rows));
        report.tables.push((format!("beam_{axis}.csv"), sweep_csv(&rows)));
    }
    Ok(report)
}

/// Damped relaxation under load with gravity on, then undamped release.
#[derive(Clone, Debug)]
pub struct EnergySuite {
    pub beam: BeamExperiment,
    /// Undamped steps after release.
    pub steps: u64,
    pub sample_every: u64,
    pub drift_bound: f64,
}

impl Default for EnergySuite {
    fn default() -> Self {
        Self {
            beam: BeamExperiment {
                gravity: Vec3::new(0.0, -STANDARD_GRAVITY, 0.0),
                ..BeamExperiment::default()
            },
            steps: 100_000,
            sample_every: 50,
            drift_bound: 0.01,
        }
    }
}

/// Energies over the relaxation and free phases of [`EnergySuite`].
#[derive(Clone, Debug)]
pub struct EnergyRun {
    pub release_time: f64,
    pub relax: TraceSeries<Energies>,
    pub free: TraceSeries<Energies>,
    /// `max |E(t) − E(release)| / |E(release)|` over the free phase.
    pub drift: f64,
    /// Pearson correlation of KE and EPE + GPE over the free phase.
    pub ke_pe_correlation: f64,
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

pub fn run_energy(suite: &EnergySuite) -> Result<EnergyRun, SuiteError> {
    let exp = &suite.beam;
    let mut scene = exp.scene()?;
    let load = exp.tip_force(&scene)?;
    for i in exp.tip_layer(&scene) {
        scene.masses[i].f_ext = Vec3::new(0.0, -load, 0.0);
    }
    scene.damping = exp.relax_damping;
    let dt = scene.dt;
    let mut engine = Engine::new(scene, exp.engine.clone())?;
    let every = suite.sample_every.max(1);
    let relax = run_recorded(&mut engine, &SimOptions::new(exp.relax).every(every), None)?;
    engine.apply(Command::ClearForces)?;
    engine.apply(Command::SetDamping { value: 0.0 })?;
    let release_time = engine.time();
    let free = run_recorded(&mut engine, &SimOptions::new(suite.steps as f64 * dt).every(every), None)?;

    let relax = relax.energy_trace().ok_or(FreqError::TooFewSamples(relax.len()))?;
    let free = free.energy_trace().ok_or(FreqError::TooFewSamples(free.len()))?;
    let e0 = free.values()[0].total;
    let drift = free
        .values()
        .iter()
        .map(|e| (e.total - e0).abs())
        .fold(0.0, f64::max)
        / e0.abs();
    let ke: Vec<f64> = free.values().iter().map(|e| e.ke).collect();
    let pe: Vec<f64> = free.values().iter().map(|e| e.epe + e.gpe).collect();
    Ok(EnergyRun {
        release_time,
        relax,
        free,
        drift,
        ke_pe_correlation: pearson(&ke, &pe),
    })
}

pub const ENERGY_CSV_HEADER: &str = "t,epe,gpe,ke,total";

pub fn energy_csv(run: &EnergyRun) -> String {
    let mut out = format!("{ENERGY_CSV_HEADER}\n");
    let free = run.free.times().iter().zip(run.free.values()).skip(1);
    for (t, e) in run.relax.times().iter().zip(run.relax.values()).chain(free) {
        out.push_str(&format!("{t:.6e},{:.10e},{:.10e},{:.10e},{:.10e}\n", e.epe, e.gpe, e.ke, e.total));
    }
    out
}

pub fn energy_suite(suite: &EnergySuite) -> Result<SuiteReport, SuiteError> {
    let run = run_energy(suite)?;
    let checks = vec![
        Check::new(format!("total energy drift over {} steps", suite.steps), run.drift, suite.drift_bound),
        // Antiphase: correlation must be negative.
        Check::new("KE vs EPE+GPE correlation", run.ke_pe_correlation, 0.0),
    ];
    let summary = format!(
        "released at t = {:.3} s; drift {:.3e}; corr(KE, EPE+GPE) = {:.4}\n",
        run.release_time, run.drift, run.ke_pe_correlation
    );
    Ok(SuiteReport {
        tables: vec![("energy.csv".into(), energy_csv(&run))],
        checks,
        summary,
    })
}

/// One mass tied to anchors on all three axes by springs of stiffness `k`;
/// every direction oscillates at `sqrt(k/m) / 2π`.
pub fn triaxial_oscillator(k: f64, m: f64, l0: f64) -> Scene {
    let mut b = SceneBuilder::new().gravity(Vec3::zeros()).damping(0.0);
    let centre = b.add_mass(Mass::new(m, Vec3::zeros()));
    for axis in 0..3 {
        for side in [-1.0, 1.0] {
            let mut p = Vec3::zeros();
            p[axis] = side * l0;
            let anchor = b.add_mass(Mass::new(m, p).anchored());
            // k/2 per side: the opposing pair stiffens the axis to k.
            b.add_spring(Spring::new(centre, anchor, 0.5 * k, l0)).expect("distinct anchors");
        }
    }
    b.build()
}

/// Predicted-vs-measured frequency of one structure.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyComparison {
    pub case: String,
    pub predicted: f64,
    pub measured: f64,
    pub analytic: Option<f64>,
}

impl FrequencyComparison {
    pub fn rel_error(&self) -> f64 {
        (self.measured - self.predicted).abs() / self.predicted
    }
}

#[derive(Clone, Debug)]
pub struct NatfreqSuite {
    pub oscillator_k: f64,
    pub oscillator_m: f64,
    /// Initial displacement of the oscillator (m).
    pub amplitude: f64,
    pub oscillator_trace: f64,
    pub beam: BeamExperiment,
    pub tolerance: f64,
    pub analytic_tolerance: f64,
}

impl Default for NatfreqSuite {
    fn default() -> Self {
        Self {
            oscillator_k: 10_000.0,
            oscillator_m: 0.1,
            amplitude: 1e-4,
            oscillator_trace: 1.0,
            beam: BeamExperiment {
                trace: 3.0,
                ..BeamExperiment::default()
            },
            tolerance: 0.02,
            analytic_tolerance: 0.005,
        }
    }
}

/// Lowest predicted frequency of `scene` linearized about its initial positions.
pub fn predicted_frequency(scene: &Scene) -> Result<f64, SuiteError> {
    let x: Vec<Vec3> = scene.masses.iter().map(|m| m.x).collect();
    let modal = assemble_modal_system(scene, &x)?;
    let modes = lowest_modes(&modal, 1, &EigenOptions::default())?;
    Ok(modes[0].frequency)
}

pub fn oscillator_comparison(suite: &NatfreqSuite) -> Result<FrequencyComparison, SuiteError> {
    let mut scene = triaxial_oscillator(suite.oscillator_k, suite.oscillator_m, 0.1);
    let predicted = predicted_frequency(&scene)?;
    scene.masses[0].x.y += suite.amplitude;
    let mut engine = Engine::new(scene, EngineConfig::new(Integrator::Verlet, ExecMode::Serial))?;
    let rec = run_recorded(&mut engine, &SimOptions::new(suite.oscillator_trace).trace([0]), None)?;
    let trace = rec.trace(0).ok_or(FreqError::TooFewSamples(rec.len()))?.component(1);
    Ok(FrequencyComparison {
        case: "oscillator".into(),
        predicted,
        measured: fft_dominant_frequency(&trace)?,
        analytic: Some((suite.oscillator_k / suite.oscillator_m).sqrt() / (2.0 * std::f64::consts::PI)),
    })
}

pub fn beam_comparison(suite: &NatfreqSuite) -> Result<FrequencyComparison, SuiteError> {
    let scene = suite.beam.scene()?;
    let predicted = predicted_frequency(&scene)?;
    let run = crate::analysis::run_beam_experiment(&suite.beam)?;
    let [l, h, w] = suite.beam.cells;
    Ok(FrequencyComparison {
        case: format!("beam {l}x{h}x{w}"),
        predicted,
        measured: fft_dominant_frequency(&run.tip_trace)?,
        analytic: None,
    })
}

pub const NATFREQ_CSV_HEADER: &str = "case,predicted_hz,measured_hz,analytic_hz,rel_error";

pub fn natfreq_csv(rows: &[FrequencyComparison]) -> String {
    let mut out = format!("{NATFREQ_CSV_HEADER}\n");
    for r in rows {
        let analytic = r.analytic.map(|a| format!("{a:.10e}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{:.10e},{:.10e},{},{:.6e}\n",
            r.case,
            r.predicted,
            r.measured,
            analytic,
            r.rel_error()
        ));
    }
    out
}

pub fn natfreq_suite(suite: &NatfreqSuite) -> Result<SuiteReport, SuiteError> {
    let rows = vec![oscillator_comparison(suite)?, beam_comparison(suite)?];
    let mut checks = Vec::new();
    let mut summary = String::from("  case            predicted   measured   error\n");
    for r in &rows {
        checks.push(Check::new(format!("{} predicted vs measured", r.case), r.rel_error(), suite.tolerance));
        if let Some(a) = r.analytic {
            checks.push(Check::new(
                format!("{} predicted vs analytic", r.case),
                (r.predicted - a).abs() / a,
                suite.analytic_tolerance,
            ));
            checks.push(Check::new(
                format!("{} measured vs analytic", r.case),
                (r.measured - a).abs() / a,
                suite.analytic_tolerance,
            ));
        }
        summary.push_str(&format!(
            "  {:<14}  {:>9.4}  {:>9.4}  {:>5.2}%\n",
            r.case,
            r.predicted,
            r.measured,
            100.0 * r.rel_error()
        ));
    }
    Ok(SuiteReport {
        tables: vec![("natfreq.csv".into(), natfreq_csv(&rows))],
        checks,
        summary,
    })
}
