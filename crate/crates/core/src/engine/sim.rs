use std::io::{self, Write};

use crossbeam_channel::{Receiver, RecvError, TryRecvError};

use super::{Command, Engine, EngineConfig, EngineError, EngineState};
use crate::analysis::{EnergyMeter, Energies, TraceSeries};
use crate::model::Scene;
use crate::Vec3;

#[derive(Clone, Debug, PartialEq)]
pub struct SimOptions {
    /// Simulated seconds.
    pub duration: f64,
    /// Mass ids whose positions are recorded.
    pub traces: Vec<usize>,
    /// Record every this many steps (step 0 is always recorded).
    pub sample_every: u64,
}

impl SimOptions {
    pub fn new(duration: f64) -> Self {
        Self {
            duration,
            traces: Vec::new(),
            sample_every: 1,
        }
    }

    pub fn trace(mut self, ids: impl IntoIterator<Item = usize>) -> Self {
        self.traces.extend(ids);
        self
    }

    pub fn every(mut self, steps: u64) -> Self {
        self.sample_every = steps.max(1);
        self
    }
}

/// Number of steps covering `duration`, i.e. ⌈duration/dt⌉ with round-off slack.
pub fn steps_for(duration: f64, dt: f64) -> u64 {
    if duration <= 0.0 {
        return 0;
    }
    let r = duration / dt;
    if (r - r.round()).abs() < 1e-9 * r.max(1.0) {
        r.round() as u64
    } else {
        r.ceil() as u64
    }
}

/// Samples recorded by [`simulate`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimRecord {
    pub times: Vec<f64>,
    pub traced: Vec<usize>,
    /// `positions[k][s]` is the position of `traced[k]` at sample `s`.
    pub positions: Vec<Vec<Vec3>>,
    pub energies: Vec<Energies>,
}

impl SimRecord {
    fn new(traced: Vec<usize>) -> Self {
        Self {
            positions: vec![Vec::new(); traced.len()],
            traced,
            ..Default::default()
        }
    }

    fn push(&mut self, engine: &Engine, meter: &EnergyMeter) {
        let st = engine.state();
        self.times.push(st.t);
        for (k, &id) in self.traced.iter().enumerate() {
            self.positions[k].push(st.x[id]);
        }
        self.energies.push(meter.measure(engine.scene(), &st.x, &st.v, st.t));
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Position trace of mass `id`, if it was recorded and has ≥ 2 samples.
    pub fn trace(&self, id: usize) -> Option<TraceSeries<Vec3>> {
        let k = self.traced.iter().position(|&t| t == id)?;
        TraceSeries::new(self.times.clone(), self.positions[k].clone()).ok()
    }

    pub fn energy_trace(&self) -> Option<TraceSeries<Energies>> {
        TraceSeries::new(self.times.clone(), self.energies.clone()).ok()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut header = String::from("t");
        for id in &self.traced {
            header.push_str(&format!(",{id}.x,{id}.y,{id}.z"));
        }
        header.push_str(",epe,gpe,ke,total");
        writeln!(w, "{header}")?;
        for s in 0..self.times.len() {
            let mut row = format!("{:.16e}", self.times[s]);
            for k in 0..self.traced.len() {
                let p = self.positions[k][s];
                row.push_str(&format!(",{:.16e},{:.16e},{:.16e}", p.x, p.y, p.z));
            }
            let e = &self.energies[s];
            row.push_str(&format!(",{:.16e},{:.16e},{:.16e},{:.16e}", e.epe, e.gpe, e.ke, e.total));
            writeln!(w, "{row}")?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = Vec::new();
        self.write_csv(&mut out).expect("writing to memory");
        String::from_utf8(out).expect("csv is ascii")
    }
}

/// Applies queued commands. While paused, blocks until resumed or the
/// sender hangs up.
fn drain(engine: &mut Engine, commands: &Receiver<Command>) -> Result<(), EngineError> {
    loop {
        match commands.try_recv() {
            Ok(cmd) => {
                engine.apply(cmd)?;
                continue;
            }
            Err(TryRecvError::Empty) => {}
            Err(TryRecvError::Disconnected) => return engine.apply(Command::Resume),
        }
        if !engine.is_paused() {
            return Ok(());
        }
        match commands.recv() {
            Ok(cmd) => engine.apply(cmd)?,
            Err(RecvError) => return engine.apply(Command::Resume),
        }
    }
}

/// Runs `engine` for `opts.duration` simulated seconds, recording traced
/// positions and energies. Commands from `commands` are applied between steps.
pub fn run_recorded(
    engine: &mut Engine,
    opts: &SimOptions,
    commands: Option<&Receiver<Command>>,
) -> Result<SimRecord, EngineError> {
    if let Some(&bad) = opts.traces.iter().find(|&&id| id >= engine.scene().masses.len()) {
        return Err(EngineError::InvalidCommand(format!("traced mass {bad} does not exist")));
    }
    let meter = EnergyMeter::new(engine.scene());
    let every = opts.sample_every.max(1);
    let steps = steps_for(opts.duration, engine.scene().dt);
    let mut record = SimRecord::new(opts.traces.clone());
    record.push(engine, &meter);
    for k in 1..=steps {
        if let Some(rx) = commands {
            drain(engine, rx)?;
        }
        engine.step()?;
        if k % every == 0 {
            record.push(engine, &meter);
        }
    }
    Ok(record)
}

/// Builds an engine for `scene`, runs it for `opts.duration` and returns the
/// record together with the final state.
pub fn simulate(scene: Scene, config: EngineConfig, opts: &SimOptions) -> Result<(SimRecord, EngineState), EngineError> {
    let mut engine = Engine::new(scene, config)?;
    let record = run_recorded(&mut engine, opts, None)?;
    Ok((record, engine.state().clone()))
}
