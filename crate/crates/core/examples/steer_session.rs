//! Starts the steering server in-process and drives it as a TCP client:
//! watch snapshots, pull the tip down, pause, fetch full state.
//!
//! `cargo run --release --example steer_session`
//!
//! For an external viewer use `springsim serve --scene scene.json --port 7878`.

use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;

use springsim::analysis::BeamExperiment;
use springsim::engine::{Command, Engine, EngineConfig};
use springsim::steer::{decode, encode, Message, ServeConfig, Server, PROTOCOL_VERSION};
use springsim::Vec3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let exp = BeamExperiment::default().with_cells([10, 2, 2]);
    let scene = exp.scene()?;
    let tip = exp.tip_layer(&scene);
    let engine = Engine::new(scene, EngineConfig::default())?;
    let server = Server::start(engine, ServeConfig { port: 0, rate: 20.0, decimate: 8, ..ServeConfig::default() })?;
    println!("serving on {}", server.local_addr());

    let mut stream = TcpStream::connect(server.local_addr())?;
    let mut lines = BufReader::new(stream.try_clone()?).lines();
    let mut next = move || -> Result<Message, Box<dyn std::error::Error>> {
        Ok(decode(&lines.next().ok_or("server closed")??)?)
    };
    let mut send = |m: &Message| stream.write_all(encode(m).as_bytes());

    println!("server says {:?}", next()?);
    send(&Message::Hello { version: PROTOCOL_VERSION })?;
    send(&Message::Command {
        command: Command::ApplyForce { masses: tip, force: Vec3::new(0.0, -5.0, 0.0) },
    })?;
    let mut shown = 0;
    while shown < 10 {
        if let Message::Snapshot(s) = next()? {
            let low = s.positions.iter().map(|p| p.x.y).fold(f64::INFINITY, f64::min);
            println!("t={:.3} s  step {}  lowest y {low:+.5} m  KE {:.3e} J  {:.2e} springs/s", s.t, s.n, s.energies.ke, s.throughput);
            shown += 1;
        }
    }
    send(&Message::Command { command: Command::Pause })?;
    send(&Message::FullStateRequest)?;
    loop {
        if let Message::FullState(f) = next()? {
            println!("paused={} at t={:.3} s with {} masses", f.paused, f.t, f.x.len());
            break;
        }
    }
    let engine = server.shutdown();
    println!("engine stopped after {} steps", engine.steps());
    Ok(())
}
