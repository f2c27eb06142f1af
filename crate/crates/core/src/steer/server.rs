use std::io::{BufRead, BufReader, Write};
use std::net::{IpAddr, Ipv4Addr, SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use crossbeam_channel::{bounded, unbounded, Receiver, RecvTimeoutError, Sender, TrySendError};

use super::protocol::{check_version, decode, encode, FullState, MassPosition, Message, Snapshot};
use crate::analysis::EnergyMeter;
use crate::engine::{Command, Engine, EngineConfig, EngineError};
use crate::model::Scene;

/// Per-client outbound queue depth; snapshots beyond it are dropped for that client.
const CLIENT_QUEUE: usize = 1024;
const ACCEPT_POLL: Duration = Duration::from_millis(5);

#[derive(Clone, Debug, PartialEq)]
pub struct ServeConfig {
    pub host: IpAddr,
    /// 0 picks a free port.
    pub port: u16,
    /// Snapshots per second of wall time.
    pub rate: f64,
    /// Every `decimate`-th mass by id is included in snapshots.
    pub decimate: usize,
    /// If set, exactly this many steps separate consecutive snapshots while
    /// running (the stepper idles until the next snapshot is due). Otherwise
    /// the engine steps freely between snapshots.
    pub steps_per_snapshot: Option<u64>,
}

impl Default for ServeConfig {
    fn default() -> Self {
        Self {
            host: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: 7878,
            rate: 30.0,
            decimate: 1,
            steps_per_snapshot: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid server configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

type Line = Arc<str>;

enum Inbound {
    Join { id: u64, tx: Sender<Line> },
    Leave { id: u64 },
    Command { id: u64, command: Command },
    FullState { id: u64 },
}

/// A running steering server: one simulation thread, one acceptor and a
/// reader/writer thread pair per client.
pub struct Server {
    addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    sim: JoinHandle<Engine>,
    acceptor: JoinHandle<()>,
}

impl Server {
    pub fn start(engine: Engine, cfg: ServeConfig) -> Result<Self, ServeError> {
        if !(cfg.rate > 0.0 && cfg.rate.is_finite()) {
            return Err(ServeError::InvalidConfig(format!("rate must be > 0 Hz, got {}", cfg.rate)));
        }
        if cfg.decimate == 0 {
            return Err(ServeError::InvalidConfig("decimation must be ≥ 1".into()));
        }
        if cfg.steps_per_snapshot == Some(0) {
            return Err(ServeError::InvalidConfig("steps per snapshot must be ≥ 1".into()));
        }
        let requested = SocketAddr::new(cfg.host, cfg.port);
        let listener = TcpListener::bind(requested).map_err(|source| ServeError::Bind {
            addr: requested,
            source,
        })?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let shutdown = Arc::new(AtomicBool::new(false));
        let (in_tx, in_rx) = unbounded();

        let sim = {
            let shutdown = shutdown.clone();
            thread::Builder::new()
                .name("steer-sim".into())
                .spawn(move || run_simulation(engine, &cfg, &in_rx, &shutdown))?
        };
        let acceptor = {
            let shutdown = shutdown.clone();
            thread::Builder::new()
                .name("steer-accept".into())
                .spawn(move || accept_loop(listener, in_tx, &shutdown))?
        };
        Ok(Self {
            addr,
            shutdown,
            sim,
            acceptor,
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops every thread and returns the engine in its final state.
    pub fn shutdown(self) -> Engine {
        self.shutdown.store(true, Ordering::SeqCst);
        self.join()
    }

    /// Blocks until the server stops (it only stops via [`Server::shutdown`]
    /// from another handle, so in practice until the process is interrupted).
    pub fn join(self) -> Engine {
        let _ = self.acceptor.join();
        self.sim.join().expect("simulation thread panicked")
    }
}

/// Serves `scene` until the process is interrupted.
pub fn serve(scene: Scene, engine: EngineConfig, cfg: ServeConfig) -> Result<(), ServeError> {
    let server = Server::start(Engine::new(scene, engine)?, cfg)?;
    eprintln!("listening on {}", server.local_addr());
    server.join();
    Ok(())
}

struct Client {
    id: u64,
    tx: Sender<Line>,
}

fn line(msg: &Message) -> Line {
    Arc::from(encode(msg))
}

fn send_to(clients: &[Client], id: u64, msg: &Message) {
    if let Some(c) = clients.iter().find(|c| c.id == id) {
        let _ = c.tx.try_send(line(msg));
    }
}

fn snapshot(engine: &Engine, meter: &EnergyMeter, decimate: usize, throughput: f64) -> Snapshot {
    let s = engine.state();
    Snapshot {
        t: s.t,
        n: s.n,
        positions: (0..s.x.len())
            .step_by(decimate)
            .map(|id| MassPosition { id, x: s.x[id] })
            .collect(),
        energies: meter.measure(engine.scene(), &s.x, &s.v, s.t),
        throughput,
    }
}

fn handle(engine: &mut Engine, clients: &mut Vec<Client>, msg: Inbound) {
    match msg {
        Inbound::Join { id, tx } => clients.push(Client { id, tx }),
        Inbound::Leave { id } => clients.retain(|c| c.id != id),
        Inbound::Command { id, command } => {
            if let Err(e) = engine.apply(command) {
                send_to(clients, id, &Message::Error { text: e.to_string() });
            }
        }
        Inbound::FullState { id } => {
            let s = engine.state();
            let msg = Message::FullState(FullState {
                t: s.t,
                n: s.n,
                x: s.x.clone(),
                v: s.v.clone(),
                paused: engine.is_paused(),
            });
            send_to(clients, id, &msg);
        }
    }
}

fn run_simulation(mut engine: Engine, cfg: &ServeConfig, inbound: &Receiver<Inbound>, shutdown: &AtomicBool) -> Engine {
    let meter = EnergyMeter::new(engine.scene());
    let springs = engine.scene().springs.len() as f64;
    let interval = Duration::from_secs_f64(1.0 / cfg.rate);
    let mut clients: Vec<Client> = Vec::new();
    let mut next = Instant::now() + interval;
    let mut last = (Instant::now(), engine.steps());
    let mut since = 0u64;
    while !shutdown.load(Ordering::SeqCst) {
        while let Ok(msg) = inbound.try_recv() {
            handle(&mut engine, &mut clients, msg);
        }
        let now = Instant::now();
        let due = now >= next;
        let quota_met = match cfg.steps_per_snapshot {
            Some(k) => since >= k,
            None => due,
        };
        if engine.is_paused() || quota_met {
            if !due {
                match inbound.recv_timeout(next - now) {
                    Ok(msg) => handle(&mut engine, &mut clients, msg),
                    Err(RecvTimeoutError::Timeout) => {}
                    // Acceptor gone: only shutdown remains.
                    Err(RecvTimeoutError::Disconnected) => thread::sleep(next - now),
                }
                continue;
            }
            let elapsed = now.duration_since(last.0).as_secs_f64().max(1e-9);
            let throughput = springs * (engine.steps() - last.1) as f64 / elapsed;
            let msg = line(&Message::Snapshot(snapshot(&engine, &meter, cfg.decimate, throughput)));
            clients.retain(|c| !matches!(c.tx.try_send(msg.clone()), Err(TrySendError::Disconnected(_))));
            last = (now, engine.steps());
            since = 0;
            next += interval;
            if next < now {
                next = now + interval;
            }
            continue;
        }
        match engine.step() {
            Ok(()) => since += 1,
            Err(e) => {
                let _ = engine.apply(Command::Pause);
                let msg = line(&Message::Error { text: e.to_string() });
                for c in &clients {
                    let _ = c.tx.try_send(msg.clone());
                }
            }
        }
    }
    engine
}

fn accept_loop(listener: TcpListener, inbound: Sender<Inbound>, shutdown: &AtomicBool) {
    let mut streams: Vec<TcpStream> = Vec::new();
    let mut handles: Vec<JoinHandle<()>> = Vec::new();
    let mut next_id = 0u64;
    while !shutdown.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, _)) => {
                let id = next_id;
                next_id += 1;
                if let Ok(h) = spawn_client(id, stream, &inbound, &mut streams) {
                    handles.extend(h);
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => thread::sleep(ACCEPT_POLL),
            Err(_) => thread::sleep(ACCEPT_POLL),
        }
    }
    for s in &streams {
        let _ = s.shutdown(std::net::Shutdown::Both);
    }
    for h in handles {
        let _ = h.join();
    }
}

fn spawn_client(
    id: u64,
    stream: TcpStream,
    inbound: &Sender<Inbound>,
    streams: &mut Vec<TcpStream>,
) -> std::io::Result<[JoinHandle<()>; 2]> {
    stream.set_nonblocking(false)?;
    stream.set_nodelay(true)?;
    let read_half = stream.try_clone()?;
    streams.push(stream.try_clone()?);
    let (tx, rx) = bounded::<Line>(CLIENT_QUEUE);
    let writer = thread::Builder::new()
        .name(format!("steer-write-{id}"))
        .spawn(move || write_loop(stream, rx))?;
    let inbound = inbound.clone();
    let reader = thread::Builder::new()
        .name(format!("steer-read-{id}"))
        .spawn(move || read_loop(id, read_half, tx, inbound))?;
    Ok([writer, reader])
}

fn write_loop(mut stream: TcpStream, rx: Receiver<Line>) {
    for msg in rx {
        if stream.write_all(msg.as_bytes()).is_err() {
            break;
        }
    }
    let _ = stream.flush();
    let _ = stream.shutdown(std::net::Shutdown::Both);
}

fn error_line(text: impl Into<String>) -> Line {
    line(&Message::Error { text: text.into() })
}

fn read_loop(id: u64, stream: TcpStream, tx: Sender<Line>, inbound: Sender<Inbound>) {
    let _ = tx.send(line(&Message::Hello {
        version: super::protocol::PROTOCOL_VERSION,
    }));
    let mut lines = BufReader::new(stream).lines();
    let greeting = match lines.next() {
        Some(Ok(l)) => decode(&l),
        _ => return,
    };
    match greeting {
        Ok(Message::Hello { version }) => {
            if let Err(e) = check_version(version) {
                let _ = tx.send(error_line(e.to_string()));
                return;
            }
        }
        Ok(_) => {
            let _ = tx.send(error_line("expected a hello message first"));
            return;
        }
        Err(e) => {
            let _ = tx.send(error_line(e.to_string()));
            return;
        }
    }
    if inbound.send(Inbound::Join { id, tx: tx.clone() }).is_err() {
        return;
    }
    for l in lines {
        let Ok(l) = l else { break };
        if l.trim().is_empty() {
            continue;
        }
        let forwarded = match decode(&l) {
            Ok(Message::Command { command }) => inbound.send(Inbound::Command { id, command }),
            Ok(Message::FullStateRequest) => inbound.send(Inbound::FullState { id }),
            Ok(other) => {
                let kind = serde_json::to_value(&other)
                    .ok()
                    .and_then(|v| v.get("type").and_then(|t| t.as_str()).map(str::to_owned))
                    .unwrap_or_default();
                let _ = tx.try_send(error_line(format!("unexpected `{kind}` message from a client")));
                Ok(())
            }
            Err(e) => {
                let _ = tx.try_send(error_line(e.to_string()));
                Ok(())
            }
        };
        if forwarded.is_err() {
            break;
        }
    }
    let _ = inbound.send(Inbound::Leave { id });
}
