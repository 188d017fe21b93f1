use std::io::Write;
use std::net::{SocketAddr, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use agc_core::scenario::Scenario;
use agc_core::telemetry::TelemetryFrame;
use agc_sim::protocol::{read_message, write_message};
use agc_sim::serve::{ServeOptions, Server};
use serde_json::{json, Value};

struct Running {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    handle: JoinHandle<anyhow::Result<Vec<TelemetryFrame>>>,
}

impl Running {
    fn finish(self) -> Vec<TelemetryFrame> {
        self.stop.store(true, Ordering::SeqCst);
        self.handle.join().unwrap().unwrap()
    }
}

fn start(opts: ServeOptions) -> Running {
    let s = Scenario {
        ugv_x: 0.0,
        ugv_y: 0.0,
        uav_x: 0.0,
        uav_y: 0.0,
        uav_z: 3.0,
        duration: 30.0,
        ..Scenario::default()
    };
    let server = Server::bind("127.0.0.1:0", s, opts).unwrap();
    let addr = server.local_addr().unwrap();
    let stop = Arc::new(AtomicBool::new(false));
    let handle = {
        let stop = stop.clone();
        thread::spawn(move || server.run(stop))
    };
    Running { addr, stop, handle }
}

struct Client {
    stream: TcpStream,
}

impl Client {
    fn connect(addr: SocketAddr) -> Self {
        let stream = TcpStream::connect(addr).unwrap();
        stream.set_read_timeout(Some(Duration::from_secs(10))).unwrap();
        Self { stream }
    }

    fn send(&mut self, v: Value) {
        write_message(&mut self.stream, &v).unwrap();
    }

    fn recv(&mut self) -> Value {
        let body = read_message(&mut self.stream).unwrap().expect("stream open");
        serde_json::from_slice(&body).unwrap()
    }

    /// Skips messages until one of the given type arrives.
    fn recv_type(&mut self, kind: &str) -> Value {
        let deadline = Instant::now() + Duration::from_secs(10);
        loop {
            assert!(Instant::now() < deadline, "no {kind} message");
            let v = self.recv();
            if v["type"] == kind {
                return v;
            }
        }
    }
}

fn opts(pause_on_start: bool) -> ServeOptions {
    ServeOptions {
        decimate: 20,
        pace: 10.0,
        pause_on_start,
    }
}

#[test]
fn session_flow() {
    let srv = start(opts(true));
    let mut a = Client::connect(srv.addr);
    let snap = a.recv();
    assert_eq!(snap["type"], "snapshot");
    assert_eq!(snap["paused"], true);
    assert_eq!(snap["authority"], true);
    assert_eq!(snap["image_width"], 640);

    a.send(json!({"type": "resume"}));
    let ack = a.recv_type("ack");
    assert_eq!(ack["of"], "resume");
    let f1 = a.recv_type("frame");
    let f2 = a.recv_type("frame");
    assert_eq!(f2["step"].as_u64().unwrap() - f1["step"].as_u64().unwrap(), 20);
    // the first frame reaches the station after the video latency
    while a.recv_type("frame")["z_est"].is_null() {}

    a.send(json!({"type": "click", "x_px": 200.0, "y_px": 0.0}));
    let ack = a.recv_type("ack");
    assert_eq!(ack["id"], 1);
    let ev = a.recv_type("event");
    assert_eq!(ev["event"], "waypoint_set");
    assert_eq!(ev["id"], 1);

    // malformed input gets an error and the stream carries on
    let garbage = b"{not json";
    a.stream.write_all(&(garbage.len() as u32).to_be_bytes()).unwrap();
    a.stream.write_all(garbage).unwrap();
    let err = a.recv_type("error");
    assert!(err["reason"].as_str().unwrap().contains("malformed"));
    a.send(json!({"type": "click", "x_px": 9999.0, "y_px": 0.0}));
    let err = a.recv_type("error");
    assert!(err["reason"].as_str().unwrap().contains("outside"));
    let f = a.recv_type("frame");
    assert_eq!(f["waypoint_id"], 1);

    // a second session watches but cannot command
    let mut b = Client::connect(srv.addr);
    let snap = b.recv();
    assert_eq!(snap["authority"], false);
    b.send(json!({"type": "pause"}));
    let err = b.recv_type("error");
    assert!(err["reason"].as_str().unwrap().contains("authority"));
    b.recv_type("frame");

    a.send(json!({"type": "set_param", "name": "K", "value": 0.2}));
    assert_eq!(a.recv_type("ack")["of"], "set_param");
    a.send(json!({"type": "set_param", "name": "K", "value": -1.0}));
    assert!(a.recv_type("error")["reason"].as_str().unwrap().contains("K"));

    // authority passes on when the holder leaves
    drop(a);
    let snap = b.recv_type("snapshot");
    assert_eq!(snap["authority"], true);
    b.send(json!({"type": "pause"}));
    assert_eq!(b.recv_type("ack")["of"], "pause");

    let h = srv.finish();
    assert!(!h.is_empty());
    assert!(h.iter().any(|f| f.waypoint_id == Some(1)));
    for (i, f) in h.iter().enumerate() {
        assert_eq!(f.step, i as u64 + 1);
    }
}

#[test]
fn pause_on_start_holds_the_engine() {
    let srv = start(opts(true));
    let mut a = Client::connect(srv.addr);
    a.recv_type("snapshot");
    thread::sleep(Duration::from_millis(300));
    a.send(json!({"type": "reset"}));
    assert_eq!(a.recv_type("ack")["of"], "reset");
    let snap = a.recv_type("snapshot");
    assert_eq!(snap["t"], 0.0);
    assert!(srv.finish().is_empty());
}

#[test]
fn reset_restarts_the_run() {
    let srv = start(opts(false));
    let mut a = Client::connect(srv.addr);
    a.recv_type("snapshot");
    a.recv_type("frame");
    a.send(json!({"type": "reset"}));
    a.recv_type("ack");
    let snap = a.recv_type("snapshot");
    assert!(snap["t"].as_f64().unwrap() < 0.5);
    srv.finish();
}

#[test]
fn bind_failure_is_reported() {
    let srv = start(opts(true));
    let taken = srv.addr.to_string();
    assert!(Server::bind(&taken, Scenario::default(), opts(true)).is_err());
    srv.finish();
}
