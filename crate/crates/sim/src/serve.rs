//! Live station service: the engine paced to the wall clock, streaming
//! telemetry to connected operator consoles over TCP.
//!
//! The engine loop is the only writer. Socket threads talk to it through a
//! single ordered queue; outbound messages go through one queue per session.
//! The oldest connected session holds command authority; the others only
//! watch.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, Sender, TryRecvError};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use agc_core::camera::PixelPoint;
use agc_core::engine::{Event, Simulation};
use agc_core::scenario::Scenario;
use agc_core::telemetry::TelemetryFrame;
use serde_json::Value;

use crate::protocol::{self, Inbound};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServeOptions {
    /// Stream every n-th frame.
    pub decimate: u64,
    /// Simulated seconds per wall-clock second; 0 runs as fast as possible.
    pub pace: f64,
    /// Stay idle until an operator sends `resume`.
    pub pause_on_start: bool,
}

impl Default for ServeOptions {
    fn default() -> Self {
        Self {
            decimate: 10,
            pace: 1.0,
            pause_on_start: false,
        }
    }
}

type Outbox = Sender<Arc<Vec<u8>>>;

enum Control {
    Connect { id: u64, outbox: Outbox },
    Disconnect { id: u64 },
    Command { id: u64, msg: Inbound },
    Malformed { id: u64, reason: String },
}

pub struct Server {
    listener: TcpListener,
    scenario: Scenario,
    opts: ServeOptions,
}

impl Server {
    pub fn bind(addr: &str, scenario: Scenario, opts: ServeOptions) -> anyhow::Result<Self> {
        scenario.validate()?;
        anyhow::ensure!(opts.decimate > 0, "decimate must be at least 1");
        anyhow::ensure!(opts.pace >= 0.0 && opts.pace.is_finite(), "pace must be non-negative");
        let listener = TcpListener::bind(addr).map_err(|e| anyhow::anyhow!("cannot bind {addr}: {e}"))?;
        Ok(Self { listener, scenario, opts })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Serves until `stop` is set; returns the telemetry recorded so far.
    pub fn run(self, stop: Arc<AtomicBool>) -> anyhow::Result<Vec<TelemetryFrame>> {
        let (ctl_tx, ctl_rx) = mpsc::channel();
        self.listener.set_nonblocking(true)?;
        let acceptor = {
            let stop = stop.clone();
            let listener = self.listener;
            thread::spawn(move || accept_loop(listener, ctl_tx, stop))
        };
        let mut engine = Engine::new(self.scenario, self.opts)?;
        let result = engine.run(ctl_rx, &stop);
        stop.store(true, Ordering::SeqCst);
        let _ = acceptor.join();
        result?;
        Ok(engine.sim.into_history())
    }
}

fn accept_loop(listener: TcpListener, ctl: Sender<Control>, stop: Arc<AtomicBool>) {
    let mut next_id = 0u64;
    while !stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, _)) => {
                next_id += 1;
                if spawn_session(next_id, stream, ctl.clone()).is_err() {
                    continue;
                }
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => thread::sleep(Duration::from_millis(5)),
            Err(_) => thread::sleep(Duration::from_millis(5)),
        }
    }
}

fn spawn_session(id: u64, stream: TcpStream, ctl: Sender<Control>) -> io::Result<()> {
    stream.set_nonblocking(false)?;
    stream.set_nodelay(true)?;
    let mut writer = stream.try_clone()?;
    let mut reader = stream;
    let (out_tx, out_rx): (Outbox, Receiver<Arc<Vec<u8>>>) = mpsc::channel();
    if ctl.send(Control::Connect { id, outbox: out_tx }).is_err() {
        return Ok(());
    }
    thread::spawn(move || {
        for bytes in out_rx {
            if writer.write_all(&bytes).and_then(|_| writer.flush()).is_err() {
                break;
            }
        }
        let _ = writer.shutdown(std::net::Shutdown::Both);
    });
    thread::spawn(move || {
        while let Ok(Some(body)) = protocol::read_message(&mut reader) {
            let msg = match protocol::parse_inbound(&body) {
                Ok(msg) => Control::Command { id, msg },
                Err(reason) => Control::Malformed { id, reason },
            };
            if ctl.send(msg).is_err() {
                return;
            }
        }
        let _ = ctl.send(Control::Disconnect { id });
    });
    Ok(())
}

struct Engine {
    sim: Simulation,
    opts: ServeOptions,
    paused: bool,
    sessions: BTreeMap<u64, Outbox>,
    anchor: (Instant, u64),
}

impl Engine {
    fn new(scenario: Scenario, opts: ServeOptions) -> anyhow::Result<Self> {
        Ok(Self {
            sim: Simulation::new(scenario)?,
            opts,
            paused: opts.pause_on_start,
            sessions: BTreeMap::new(),
            anchor: (Instant::now(), 0),
        })
    }

    fn authority(&self) -> Option<u64> {
        self.sessions.keys().next().copied()
    }

    fn reanchor(&mut self) {
        self.anchor = (Instant::now(), self.sim.clock().step_index);
    }

    fn send_to(&mut self, id: u64, msg: &Value) {
        let bytes = Arc::new(protocol::encode(msg));
        if let Some(tx) = self.sessions.get(&id) {
            if tx.send(bytes).is_err() {
                self.sessions.remove(&id);
            }
        }
    }

    fn broadcast(&mut self, msg: &Value) {
        if self.sessions.is_empty() {
            return;
        }
        let bytes = Arc::new(protocol::encode(msg));
        self.sessions.retain(|_, tx| tx.send(bytes.clone()).is_ok());
    }

    fn snapshot_for(&self, id: u64) -> Value {
        protocol::snapshot(
            self.sim.scenario(),
            self.sim.last_frame(),
            self.paused,
            self.authority() == Some(id),
            self.opts.decimate,
        )
    }

    fn send_snapshots(&mut self) {
        let ids: Vec<u64> = self.sessions.keys().copied().collect();
        for id in ids {
            let snap = self.snapshot_for(id);
            self.send_to(id, &snap);
        }
    }

    fn control(&mut self, c: Control) {
        match c {
            Control::Connect { id, outbox } => {
                self.sessions.insert(id, outbox);
                let snap = self.snapshot_for(id);
                self.send_to(id, &snap);
            }
            Control::Disconnect { id } => {
                let had = self.authority() == Some(id);
                self.sessions.remove(&id);
                if had {
                    if let Some(next) = self.authority() {
                        let snap = self.snapshot_for(next);
                        self.send_to(next, &snap);
                    }
                }
            }
            Control::Malformed { id, reason } => self.send_to(id, &protocol::error(reason)),
            Control::Command { id, msg } => {
                if self.authority() != Some(id) {
                    self.send_to(id, &protocol::error(format!("{} refused: another session holds command authority", msg.kind())));
                    return;
                }
                let kind = msg.kind();
                match msg {
                    Inbound::Click { x_px, y_px } => match self.sim.click(PixelPoint::new(x_px, y_px)) {
                        Ok(w) => {
                            self.send_to(id, &protocol::ack(Some(w.id), kind));
                            self.broadcast(&protocol::event(&Event::WaypointSet(w)));
                        }
                        Err(e) => self.send_to(id, &protocol::error(format!("click rejected: {e}"))),
                    },
                    Inbound::Pause => {
                        self.paused = true;
                        self.send_to(id, &protocol::ack(None, kind));
                    }
                    Inbound::Resume => {
                        self.paused = false;
                        self.reanchor();
                        self.send_to(id, &protocol::ack(None, kind));
                    }
                    Inbound::Reset => match self.sim.reset() {
                        Ok(()) => {
                            self.reanchor();
                            self.send_to(id, &protocol::ack(None, kind));
                            self.send_snapshots();
                        }
                        Err(e) => self.send_to(id, &protocol::error(format!("reset failed: {e}"))),
                    },
                    Inbound::SetParam { name, value } => match self.sim.set_param(&name, value) {
                        Ok(()) => self.send_to(id, &protocol::ack(None, kind)),
                        Err(e) => self.send_to(id, &protocol::error(format!("set_param {name}: {e}"))),
                    },
                }
            }
        }
    }

    fn step_once(&mut self) -> anyhow::Result<()> {
        let events = self.sim.step()?;
        for e in &events {
            self.broadcast(&protocol::event(e));
        }
        if self.sim.clock().step_index.is_multiple_of(self.opts.decimate) {
            if let Some(f) = self.sim.last_frame() {
                let msg = protocol::frame(f);
                self.broadcast(&msg);
            }
        }
        Ok(())
    }

    fn run(&mut self, ctl: Receiver<Control>, stop: &AtomicBool) -> anyhow::Result<()> {
        const MAX_BURST: u64 = 2000;
        self.reanchor();
        while !stop.load(Ordering::SeqCst) {
            loop {
                match ctl.try_recv() {
                    Ok(c) => self.control(c),
                    Err(TryRecvError::Empty) => break,
                    Err(TryRecvError::Disconnected) => return Ok(()),
                }
            }
            let mut stepped = 0;
            if !self.paused && !self.sim.is_finished() {
                let target = if self.opts.pace == 0.0 {
                    self.sim.clock().step_index + MAX_BURST
                } else {
                    let sim_elapsed = self.anchor.0.elapsed().as_secs_f64() * self.opts.pace;
                    self.anchor.1 + (sim_elapsed / self.sim.clock().dt()) as u64
                };
                while self.sim.clock().step_index < target && stepped < MAX_BURST && !self.sim.is_finished() {
                    self.step_once()?;
                    stepped += 1;
                }
            }
            if stepped == 0 {
                thread::sleep(Duration::from_millis(1));
            }
        }
        Ok(())
    }
}
