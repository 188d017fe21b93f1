//! Operator wire protocol.
//!
//! Every message is a 4-byte big-endian length followed by that many bytes
//! of UTF-8 JSON holding one flat object. The `type` key names the kind.
//!
//! Operator to station: `click {x_px, y_px}`, `pause`, `resume`, `reset`,
//! `set_param {name, value}`.
//!
//! Station to operator: `snapshot` (scenario constants plus the latest
//! frame), `frame` (telemetry columns), `event` (`event` is one of
//! `waypoint_set`, `waypoint_reached`, `frame_exit`, `stale_pose`), `ack {id}`
//! and `error {reason}`.

use std::io::{self, Read, Write};

use agc_core::engine::Event;
use agc_core::scenario::Scenario;
use agc_core::telemetry::TelemetryFrame;
use serde::Deserialize;
use serde_json::{json, Map, Value};

/// Largest accepted message body.
pub const MAX_MESSAGE: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Inbound {
    Click { x_px: f64, y_px: f64 },
    Pause,
    Resume,
    Reset,
    SetParam { name: String, value: f64 },
}

impl Inbound {
    pub fn kind(&self) -> &'static str {
        match self {
            Inbound::Click { .. } => "click",
            Inbound::Pause => "pause",
            Inbound::Resume => "resume",
            Inbound::Reset => "reset",
            Inbound::SetParam { .. } => "set_param",
        }
    }
}

/// Decodes one message body; the error text is meant for an `error` reply.
pub fn parse_inbound(body: &[u8]) -> Result<Inbound, String> {
    let text = std::str::from_utf8(body).map_err(|_| "message is not valid UTF-8".to_string())?;
    let value: Value = serde_json::from_str(text).map_err(|e| format!("malformed JSON: {e}"))?;
    let obj = value.as_object().ok_or("message must be a JSON object")?;
    if obj.values().any(|v| v.is_object() || v.is_array()) {
        return Err("message must be a flat object".into());
    }
    serde_json::from_value(value).map_err(|e| format!("bad message: {e}"))
}

pub fn write_message<W: Write>(w: &mut W, msg: &Value) -> io::Result<()> {
    let body = serde_json::to_vec(msg)?;
    w.write_all(&encode_len(body.len())?)?;
    w.write_all(&body)?;
    w.flush()
}

/// Length-prefixed bytes of a message, ready to write.
pub fn encode(msg: &Value) -> Vec<u8> {
    let body = serde_json::to_vec(msg).expect("json values always serialize");
    let mut out = Vec::with_capacity(body.len() + 4);
    out.extend_from_slice(&(body.len() as u32).to_be_bytes());
    out.extend_from_slice(&body);
    out
}

fn encode_len(n: usize) -> io::Result<[u8; 4]> {
    if n > MAX_MESSAGE {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "message too large"));
    }
    Ok((n as u32).to_be_bytes())
}

/// Reads one message body. `None` on a clean end of stream.
pub fn read_message<R: Read>(r: &mut R) -> io::Result<Option<Vec<u8>>> {
    let mut len = [0u8; 4];
    match r.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e),
    }
    let n = u32::from_be_bytes(len) as usize;
    if n > MAX_MESSAGE {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("message of {n} bytes exceeds limit")));
    }
    let mut body = vec![0u8; n];
    r.read_exact(&mut body)?;
    Ok(Some(body))
}

fn num(v: f64) -> Value {
    json!(v)
}

fn opt(v: Option<f64>) -> Value {
    v.map_or(Value::Null, num)
}

fn frame_fields(f: &TelemetryFrame, m: &mut Map<String, Value>) {
    let fields: [(&str, Value); 44] = [
        ("t", num(f.t)),
        ("step", json!(f.step)),
        ("ugv_x", num(f.ugv_x)),
        ("ugv_y", num(f.ugv_y)),
        ("ugv_heading", num(f.ugv_heading)),
        ("ugv_u", num(f.ugv_u)),
        ("ugv_r", num(f.ugv_r)),
        ("uav_x", num(f.uav_x)),
        ("uav_y", num(f.uav_y)),
        ("uav_z", num(f.uav_z)),
        ("uav_vx", num(f.uav_vx)),
        ("uav_vy", num(f.uav_vy)),
        ("uav_vz", num(f.uav_vz)),
        ("uav_roll", num(f.uav_roll)),
        ("uav_pitch", num(f.uav_pitch)),
        ("uav_yaw", num(f.uav_yaw)),
        ("uav_thrust", num(f.uav_thrust)),
        ("roll_d", num(f.roll_d)),
        ("pitch_d", num(f.pitch_d)),
        ("rc_x_px", opt(f.rc_x_px)),
        ("rc_y_px", opt(f.rc_y_px)),
        ("rh_x_px", opt(f.rh_x_px)),
        ("rh_y_px", opt(f.rh_y_px)),
        ("obs_valid", json!(f.obs_valid)),
        ("in_frame", json!(f.in_frame)),
        ("z_est", opt(f.z_est)),
        ("d_raw", opt(f.d_raw)),
        ("alpha_raw", opt(f.alpha_raw)),
        ("d_smooth", opt(f.d_smooth)),
        ("alpha_smooth", opt(f.alpha_smooth)),
        ("d_true", opt(f.d_true)),
        ("alpha_true", opt(f.alpha_true)),
        ("head_dist", opt(f.head_dist)),
        ("e_x_px", opt(f.e_x_px)),
        ("e_y_px", opt(f.e_y_px)),
        ("e_x", num(f.e_x)),
        ("e_y", num(f.e_y)),
        ("servo_stale", json!(f.servo_stale)),
        ("waypoint_id", json!(f.waypoint_id)),
        ("waypoint_x", opt(f.waypoint_x)),
        ("waypoint_y", opt(f.waypoint_y)),
        ("cmd_sent", json!(f.cmd_sent)),
        ("cmd_d", opt(f.cmd_d)),
        ("cmd_alpha", opt(f.cmd_alpha)),
    ];
    for (k, v) in fields {
        m.insert(k.to_string(), v);
    }
}

fn typed(kind: &str) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("type".into(), json!(kind));
    m
}

pub fn frame(f: &TelemetryFrame) -> Value {
    let mut m = typed("frame");
    frame_fields(f, &mut m);
    Value::Object(m)
}

/// Scenario constants the console needs to draw, plus the latest frame.
pub fn snapshot(s: &Scenario, latest: Option<&TelemetryFrame>, paused: bool, authority: bool, decimate: u64) -> Value {
    let mut m = typed("snapshot");
    if let Some(f) = latest {
        frame_fields(f, &mut m);
    }
    let cam = &s.camera;
    let consts = [
        ("paused", json!(paused)),
        ("authority", json!(authority)),
        ("decimate", json!(decimate)),
        ("duration", num(s.duration)),
        ("dt", num(s.dt)),
        ("seed", json!(s.seed)),
        ("image_width", json!(cam.width_px)),
        ("image_height", json!(cam.height_px)),
        ("gain_x", num(cam.gain_x())),
        ("gain_y", num(cam.gain_y())),
        ("X0", num(cam.principal_x)),
        ("Y0", num(cam.principal_y)),
        ("rate_hz", num(s.video_rate_hz)),
        ("L", num(s.ugv.marker_gap)),
        ("K", num(s.ugv.gain)),
        ("K1", num(s.uav.k1)),
        ("K2", num(s.uav.k2)),
        ("z_d", num(s.uav.z_d)),
        ("arrival_epsilon", num(s.arrival_epsilon)),
    ];
    for (k, v) in consts {
        m.insert(k.to_string(), v);
    }
    if latest.is_none() {
        m.insert("t".into(), num(0.0));
    }
    Value::Object(m)
}

/// Engine events as `event` messages. Rejected clicks become `error`s.
pub fn event(e: &Event) -> Value {
    match e {
        Event::WaypointSet(w) => json!({
            "type": "event",
            "event": "waypoint_set",
            "id": w.id,
            "t": w.t_set,
            "x_px": w.pixel.x,
            "y_px": w.pixel.y,
            "ground_x": w.ground.x,
            "ground_y": w.ground.y,
            "world_x": w.world.x,
            "world_y": w.world.y,
        }),
        Event::WaypointReached { id, t } => json!({"type": "event", "event": "waypoint_reached", "id": id, "t": t}),
        Event::FrameExit { t } => json!({"type": "event", "event": "frame_exit", "t": t}),
        Event::StalePose { t } => json!({"type": "event", "event": "stale_pose", "t": t}),
        Event::ClickRejected { t, pixel, error } => json!({
            "type": "error",
            "reason": format!("click at ({}, {}) rejected at t={t}: {error}", pixel.x, pixel.y),
        }),
    }
}

pub fn ack(id: Option<u64>, of: &str) -> Value {
    json!({"type": "ack", "id": id, "of": of})
}

pub fn error(reason: impl Into<String>) -> Value {
    json!({"type": "error", "reason": reason.into()})
}
