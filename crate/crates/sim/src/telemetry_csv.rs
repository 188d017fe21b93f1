//! Telemetry as CSV: one row per step, fixed header, `.` decimal point.
//!
//! Numbers use Rust's shortest round-trip formatting, so reading a file back
//! reproduces every value bit for bit. Absent values are empty cells; flags
//! are `0`/`1`.
//!
//! | column | unit | meaning |
//! |---|---|---|
//! | t | s | simulated time at the end of the step |
//! | step | | step count |
//! | ugv_x, ugv_y | m | robot axle center, world frame |
//! | ugv_heading | rad | robot heading |
//! | ugv_u, ugv_r | m/s, rad/s | robot velocities |
//! | uav_x, uav_y, uav_z | m | UAV position |
//! | uav_vx, uav_vy, uav_vz | m/s | UAV velocity |
//! | uav_roll, uav_pitch, uav_yaw | rad | UAV attitude |
//! | uav_thrust | N | total thrust |
//! | roll_d, pitch_d | rad | attitude setpoints from the servo |
//! | rc_x_px, rc_y_px, rh_x_px, rh_y_px | px | latest rendered markers (red axle, blue head) |
//! | obs_valid, in_frame | flag | latest frame usable / both markers in the image |
//! | z_est | m | altitude used by the station |
//! | d_raw, alpha_raw | m, rad | per-frame distance and steering angle |
//! | d_smooth, alpha_smooth | m, rad | smoothed values sent to the robot |
//! | d_true, alpha_true | m, rad | ground-truth distance and steering angle |
//! | head_dist | m | ground-truth head-to-waypoint distance |
//! | e_x_px, e_y_px | px | smoothed red-marker offset from the image center |
//! | e_x, e_y | m | ground-truth robot offset from the UAV |
//! | servo_stale | flag | servo running without fresh measurements |
//! | waypoint_id | | active waypoint |
//! | waypoint_x, waypoint_y | m | active waypoint, world frame |
//! | cmd_sent | flag | a command left the station this step |
//! | cmd_d, cmd_alpha | m, rad | that command |

use std::io::{Read, Write};

use agc_core::telemetry::TelemetryFrame;

pub const HEADER: [&str; 44] = [
    "t",
    "step",
    "ugv_x",
    "ugv_y",
    "ugv_heading",
    "ugv_u",
    "ugv_r",
    "uav_x",
    "uav_y",
    "uav_z",
    "uav_vx",
    "uav_vy",
    "uav_vz",
    "uav_roll",
    "uav_pitch",
    "uav_yaw",
    "uav_thrust",
    "roll_d",
    "pitch_d",
    "rc_x_px",
    "rc_y_px",
    "rh_x_px",
    "rh_y_px",
    "obs_valid",
    "in_frame",
    "z_est",
    "d_raw",
    "alpha_raw",
    "d_smooth",
    "alpha_smooth",
    "d_true",
    "alpha_true",
    "head_dist",
    "e_x_px",
    "e_y_px",
    "e_x",
    "e_y",
    "servo_stale",
    "waypoint_id",
    "waypoint_x",
    "waypoint_y",
    "cmd_sent",
    "cmd_d",
    "cmd_alpha",
];

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("row {row}: bad value {value:?} in column `{column}`")]
    Value {
        row: usize,
        column: &'static str,
        value: String,
    },
    #[error("unexpected header; expected the telemetry columns")]
    Header,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

/// Cells of one frame, in [`HEADER`] order.
pub fn row(f: &TelemetryFrame) -> Vec<String> {
    vec![
        f.t.to_string(),
        f.step.to_string(),
        f.ugv_x.to_string(),
        f.ugv_y.to_string(),
        f.ugv_heading.to_string(),
        f.ugv_u.to_string(),
        f.ugv_r.to_string(),
        f.uav_x.to_string(),
        f.uav_y.to_string(),
        f.uav_z.to_string(),
        f.uav_vx.to_string(),
        f.uav_vy.to_string(),
        f.uav_vz.to_string(),
        f.uav_roll.to_string(),
        f.uav_pitch.to_string(),
        f.uav_yaw.to_string(),
        f.uav_thrust.to_string(),
        f.roll_d.to_string(),
        f.pitch_d.to_string(),
        opt(f.rc_x_px),
        opt(f.rc_y_px),
        opt(f.rh_x_px),
        opt(f.rh_y_px),
        flag(f.obs_valid),
        flag(f.in_frame),
        opt(f.z_est),
        opt(f.d_raw),
        opt(f.alpha_raw),
        opt(f.d_smooth),
        opt(f.alpha_smooth),
        opt(f.d_true),
        opt(f.alpha_true),
        opt(f.head_dist),
        opt(f.e_x_px),
        opt(f.e_y_px),
        f.e_x.to_string(),
        f.e_y.to_string(),
        flag(f.servo_stale),
        f.waypoint_id.map(|v| v.to_string()).unwrap_or_default(),
        opt(f.waypoint_x),
        opt(f.waypoint_y),
        flag(f.cmd_sent),
        opt(f.cmd_d),
        opt(f.cmd_alpha),
    ]
}

/// Streams frames as CSV.
pub struct TelemetryWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> TelemetryWriter<W> {
    pub fn new(w: W) -> Result<Self, CsvError> {
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        inner.write_record(HEADER)?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, f: &TelemetryFrame) -> Result<(), CsvError> {
        self.inner.write_record(row(f))?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), CsvError> {
        self.inner.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> Result<W, CsvError> {
        self.inner.into_inner().map_err(|e| CsvError::Io(e.into_error()))
    }
}

pub fn write_all<W: Write>(w: W, frames: &[TelemetryFrame]) -> Result<W, CsvError> {
    let mut tw = TelemetryWriter::new(w)?;
    for f in frames {
        tw.write(f)?;
    }
    tw.into_inner()
}

pub fn to_string(frames: &[TelemetryFrame]) -> String {
    let bytes = write_all(Vec::new(), frames).expect("writing to memory cannot fail");
    String::from_utf8(bytes).expect("csv output is ASCII")
}

struct Cells<'a> {
    rec: &'a csv::StringRecord,
    row: usize,
    i: usize,
}

impl<'a> Cells<'a> {
    fn raw(&mut self) -> (&'static str, &'a str) {
        let col = HEADER[self.i];
        let v = self.rec.get(self.i).unwrap_or("");
        self.i += 1;
        (col, v)
    }

    fn err(&self, column: &'static str, value: &str) -> CsvError {
        CsvError::Value {
            row: self.row,
            column,
            value: value.to_string(),
        }
    }

    fn f(&mut self) -> Result<f64, CsvError> {
        let (c, v) = self.raw();
        v.parse().map_err(|_| self.err(c, v))
    }

    fn u(&mut self) -> Result<u64, CsvError> {
        let (c, v) = self.raw();
        v.parse().map_err(|_| self.err(c, v))
    }

    fn of(&mut self) -> Result<Option<f64>, CsvError> {
        let (c, v) = self.raw();
        if v.is_empty() {
            return Ok(None);
        }
        v.parse().map(Some).map_err(|_| self.err(c, v))
    }

    fn ou(&mut self) -> Result<Option<u64>, CsvError> {
        let (c, v) = self.raw();
        if v.is_empty() {
            return Ok(None);
        }
        v.parse().map(Some).map_err(|_| self.err(c, v))
    }

    fn b(&mut self) -> Result<bool, CsvError> {
        let (c, v) = self.raw();
        match v {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(self.err(c, v)),
        }
    }
}

/// Reads frames written by [`TelemetryWriter`].
pub fn read_all<R: Read>(r: R) -> Result<Vec<TelemetryFrame>, CsvError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    if rdr.headers()?.iter().ne(HEADER) {
        return Err(CsvError::Header);
    }
    let mut out = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let mut c = Cells { rec: &rec, row: n + 1, i: 0 };
        out.push(TelemetryFrame {
            t: c.f()?,
            step: c.u()?,
            ugv_x: c.f()?,
            ugv_y: c.f()?,
            ugv_heading: c.f()?,
            ugv_u: c.f()?,
            ugv_r: c.f()?,
            uav_x: c.f()?,
            uav_y: c.f()?,
            uav_z: c.f()?,
            uav_vx: c.f()?,
            uav_vy: c.f()?,
            uav_vz: c.f()?,
            uav_roll: c.f()?,
            uav_pitch: c.f()?,
            uav_yaw: c.f()?,
            uav_thrust: c.f()?,
            roll_d: c.f()?,
            pitch_d: c.f()?,
            rc_x_px: c.of()?,
            rc_y_px: c.of()?,
            rh_x_px: c.of()?,
            rh_y_px: c.of()?,
            obs_valid: c.b()?,
            in_frame: c.b()?,
            z_est: c.of()?,
            d_raw: c.of()?,
            alpha_raw: c.of()?,
            d_smooth: c.of()?,
            alpha_smooth: c.of()?,
            d_true: c.of()?,
            alpha_true: c.of()?,
            head_dist: c.of()?,
            e_x_px: c.of()?,
            e_y_px: c.of()?,
            e_x: c.f()?,
            e_y: c.f()?,
            servo_stale: c.b()?,
            waypoint_id: c.ou()?,
            waypoint_x: c.of()?,
            waypoint_y: c.of()?,
            cmd_sent: c.b()?,
            cmd_d: c.of()?,
            cmd_alpha: c.of()?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TelemetryFrame {
        TelemetryFrame {
            t: 0.001,
            step: 1,
            ugv_x: -8.0,
            uav_z: 0.1 + 0.2,
            rc_x_px: Some(-1.0 / 3.0),
            obs_valid: true,
            waypoint_id: Some(4),
            cmd_alpha: Some(-0.0),
            ..TelemetryFrame::default()
        }
    }

    #[test]
    fn header_is_fixed() {
        let s = to_string(&[]);
        assert!(s.starts_with("t,step,ugv_x,ugv_y,ugv_heading,"));
        assert!(s.trim_end().ends_with("cmd_sent,cmd_d,cmd_alpha"));
        assert_eq!(s.lines().count(), 1);
    }

    #[test]
    fn row_matches_header_width() {
        assert_eq!(row(&sample()).len(), HEADER.len());
    }

    #[test]
    fn round_trip_is_exact() {
        let frames = vec![sample(), TelemetryFrame { step: 2, t: 0.002, ..sample() }];
        let text = to_string(&frames);
        let back = read_all(text.as_bytes()).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in frames.iter().zip(&back) {
            assert_eq!(row(a), row(b));
        }
        assert_eq!(back[0].uav_z.to_bits(), (0.1f64 + 0.2).to_bits());
        assert!(text.contains(",,"));
    }

    #[test]
    fn bad_cell_names_the_column() {
        let mut text = to_string(&[sample()]);
        text = text.replacen("-8,", "minus eight,", 1);
        let e = read_all(text.as_bytes()).unwrap_err();
        assert!(e.to_string().contains("ugv_x"), "{e}");
    }
}
