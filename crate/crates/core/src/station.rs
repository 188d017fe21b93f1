//! Ground station: turns video measurements into smoothed pose estimates,
//! keeps the operator's active waypoint, and emits commands on the 50 Hz
//! tick.
//!
//! A click is backprojected once, at click time, and frozen in world
//! coordinates. Every later frame re-projects that point through the current
//! camera position, and the distance/steering angle are computed from pixels
//! as usual.

use alloc::vec::Vec;

use crate::camera::{CameraModel, GroundPoint, PixelPoint};
use crate::netlink::{CommandMsg, MeasurementMsg};
use crate::perception::{estimate_pose, CameraPose, PoseEstimate};
use crate::smoothing::{ChannelKind, DesFactors, DesFilter};
use crate::{angle, Error, Result};

/// Period of the command link, seconds.
pub const COMMAND_PERIOD: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AltitudeSource {
    /// Altitude reported with each frame.
    #[default]
    Reported,
    /// Smoothed estimate from the marker pair.
    Markers,
}

/// When the smoothing channels absorb a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SmoothingRate {
    /// On every received frame.
    #[default]
    Camera,
    /// On every command tick, using the latest frame.
    Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChannelFactors {
    pub d: DesFactors,
    pub alpha: DesFactors,
    pub x_rc: DesFactors,
    pub y_rc: DesFactors,
    pub altitude: DesFactors,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationConfig {
    pub camera: CameraModel,
    /// Axle-to-head marker distance `L`.
    pub marker_gap: f64,
    pub arrival_epsilon: f64,
    pub stale_timeout: f64,
    pub factors: ChannelFactors,
    pub altitude_source: AltitudeSource,
    pub smoothing_rate: SmoothingRate,
}

impl Default for StationConfig {
    fn default() -> Self {
        Self {
            camera: CameraModel::default(),
            marker_gap: 0.15,
            arrival_epsilon: 0.05,
            stale_timeout: 0.5,
            factors: ChannelFactors::default(),
            altitude_source: AltitudeSource::Reported,
            smoothing_rate: SmoothingRate::Camera,
        }
    }
}

/// An operator-selected target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaypointMsg {
    pub id: u64,
    /// Pixel as clicked.
    pub pixel: PixelPoint,
    /// Backprojection of the click in the camera frame at click time.
    pub ground: GroundPoint,
    /// The same point in world coordinates, frozen for the waypoint's life.
    pub world: GroundPoint,
    pub t_set: f64,
}

/// Builds a waypoint from a click seen by a camera at `pose`, using altitude `z`.
pub fn waypoint_from_click(
    id: u64,
    pixel: PixelPoint,
    pose: &CameraPose,
    z: f64,
    cam: &CameraModel,
    t: f64,
) -> Result<WaypointMsg> {
    if !cam.in_frame(&pixel) {
        return Err(Error::OutOfFrame { x: pixel.x, y: pixel.y });
    }
    let ground = cam.backproject(&pixel, z)?;
    Ok(WaypointMsg {
        id,
        pixel,
        ground,
        world: GroundPoint::new(pose.x + ground.x, pose.y + ground.y),
        t_set: t,
    })
}

/// Arrival test: the head marker is within `epsilon` of the goal.
pub fn waypoint_reached(d: f64, marker_gap: f64, epsilon: f64) -> bool {
    d <= marker_gap + epsilon
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StationEvent {
    WaypointSet(WaypointMsg),
    WaypointReached { id: u64, t: f64 },
    /// A marker left the image; commands stop until it returns.
    FrameExit { t: f64 },
    /// No usable frame for longer than the stale timeout.
    StalePose { t: f64 },
}

/// Smoothed red-marker track for the visual servo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServoSample {
    pub rc: PixelPoint,
    /// Pixels per sample.
    pub trend: PixelPoint,
    pub sample_period: f64,
    pub z: f64,
    pub t: f64,
}

#[derive(Debug, Clone)]
pub struct MissionState {
    config: StationConfig,
    frame_period: f64,
    active: Option<WaypointMsg>,
    next_id: u64,
    raw_pose: Option<PoseEstimate>,
    pose: Option<PoseEstimate>,
    pose_time: Option<f64>,
    d: DesFilter,
    alpha: DesFilter,
    x_rc: DesFilter,
    y_rc: DesFilter,
    altitude: DesFilter,
    rc_time: Option<f64>,
    last_frame: Option<MeasurementMsg>,
    /// Latest good frame, for command-rate smoothing.
    pending: Option<MeasurementMsg>,
    frozen: bool,
    reached_notified: bool,
    stale_notified: bool,
}

impl MissionState {
    /// `frame_period` is the nominal video period, used to turn smoothed
    /// trends into rates.
    pub fn new(config: StationConfig, frame_period: f64) -> Self {
        let f = config.factors;
        Self {
            config,
            frame_period,
            active: None,
            next_id: 1,
            raw_pose: None,
            pose: None,
            pose_time: None,
            d: DesFilter::new(f.d, ChannelKind::Linear),
            alpha: DesFilter::new(f.alpha, ChannelKind::Angular),
            x_rc: DesFilter::new(f.x_rc, ChannelKind::Linear),
            y_rc: DesFilter::new(f.y_rc, ChannelKind::Linear),
            altitude: DesFilter::new(f.altitude, ChannelKind::Linear),
            rc_time: None,
            last_frame: None,
            pending: None,
            frozen: false,
            reached_notified: false,
            stale_notified: false,
        }
    }

    pub fn config(&self) -> &StationConfig {
        &self.config
    }

    pub fn set_arrival_epsilon(&mut self, eps: f64) {
        self.config.arrival_epsilon = eps;
    }

    pub fn active_waypoint(&self) -> Option<&WaypointMsg> {
        self.active.as_ref()
    }

    /// Smoothed pose, if any frame has produced one for the active waypoint.
    pub fn pose(&self) -> Option<&PoseEstimate> {
        self.pose.as_ref()
    }

    pub fn raw_pose(&self) -> Option<&PoseEstimate> {
        self.raw_pose.as_ref()
    }

    pub fn last_frame(&self) -> Option<&MeasurementMsg> {
        self.last_frame.as_ref()
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    /// Altitude used for backprojection.
    pub fn altitude(&self) -> Option<f64> {
        let reported = self.last_frame.map(|m| m.camera.z);
        match self.config.altitude_source {
            AltitudeSource::Reported => reported,
            AltitudeSource::Markers => self.altitude.value().filter(|z| *z > 0.0).or(reported),
        }
    }

    /// Replaces the active waypoint with the clicked pixel.
    pub fn handle_click(&mut self, pixel: PixelPoint, t: f64) -> Result<WaypointMsg> {
        let frame = self.last_frame.ok_or(Error::NoCameraFrame)?;
        let z = self.altitude().ok_or(Error::NoCameraFrame)?;
        let wp = waypoint_from_click(self.next_id, pixel, &frame.camera, z, &self.config.camera, t)?;
        self.next_id += 1;
        self.active = Some(wp);
        self.d.reset();
        self.alpha.reset();
        self.pose = None;
        self.raw_pose = None;
        self.pose_time = None;
        self.reached_notified = false;
        self.stale_notified = false;
        Ok(wp)
    }

    pub fn clear_waypoint(&mut self) {
        self.active = None;
        self.pose = None;
        self.raw_pose = None;
        self.pose_time = None;
    }

    /// Absorbs one received frame.
    pub fn on_measurement(&mut self, msg: MeasurementMsg, events: &mut Vec<StationEvent>) {
        self.last_frame = Some(msg);
        if !msg.obs.valid {
            return;
        }
        if !msg.obs.in_frame {
            if !self.frozen {
                self.frozen = true;
                events.push(StationEvent::FrameExit { t: msg.t_sent });
            }
            return;
        }
        self.frozen = false;
        match self.config.smoothing_rate {
            SmoothingRate::Camera => self.absorb(msg, events),
            SmoothingRate::Command => self.pending = Some(msg),
        }
    }

    fn absorb(&mut self, msg: MeasurementMsg, events: &mut Vec<StationEvent>) {
        let cam = self.config.camera;
        let obs = msg.obs;
        self.x_rc.push(obs.rc.x);
        self.y_rc.push(obs.rc.y);
        self.rc_time = Some(msg.t_sent);
        if let Ok(z) = cam.estimate_altitude(&obs.rc, &obs.rh, self.config.marker_gap) {
            self.altitude.push(z);
        }
        let Some(wp) = self.active else {
            return;
        };
        let Some(z) = self.altitude() else {
            return;
        };
        let nadir = CameraPose { roll: 0.0, pitch: 0.0, ..msg.camera };
        let Ok(w_px) = nadir.pixel_of(wp.world.x, wp.world.y, &cam, false) else {
            return;
        };
        let Ok(raw) = estimate_pose(&obs, &w_px, z, &cam) else {
            return;
        };
        let d = self.d.push(raw.d).max(0.0);
        let alpha = angle::wrap(self.alpha.push(raw.alpha));
        self.raw_pose = Some(raw);
        self.pose = Some(PoseEstimate { d, alpha, ..raw });
        self.pose_time = Some(msg.t_sent);
        self.stale_notified = false;
        if !self.reached_notified && waypoint_reached(d, self.config.marker_gap, self.config.arrival_epsilon) {
            self.reached_notified = true;
            events.push(StationEvent::WaypointReached { id: wp.id, t: msg.t_sent });
        }
    }

    /// Runs on every 20 ms tick; returns the command to send, if any.
    pub fn command_tick(&mut self, now: f64, events: &mut Vec<StationEvent>) -> Option<CommandMsg> {
        if self.config.smoothing_rate == SmoothingRate::Command && !self.frozen {
            // the latest good frame, repeated when no new one arrived
            if let Some(msg) = self.pending {
                self.absorb(msg, events);
            }
        }
        let wp = self.active?;
        if self.frozen {
            return None;
        }
        let fresh = self.pose_time.is_some_and(|t| now - t <= self.config.stale_timeout);
        if !fresh {
            if !self.stale_notified {
                self.stale_notified = true;
                events.push(StationEvent::StalePose { t: now });
            }
            return None;
        }
        let pose = self.pose?;
        Some(CommandMsg {
            t_sent: now,
            d: pose.d,
            alpha: pose.alpha,
            waypoint_id: wp.id,
        })
    }

    /// Latest smoothed red-marker track and how it should be differentiated.
    pub fn servo_sample(&self) -> Option<ServoSample> {
        let t = self.rc_time?;
        let period = match self.config.smoothing_rate {
            SmoothingRate::Camera => self.frame_period,
            SmoothingRate::Command => COMMAND_PERIOD,
        };
        Some(ServoSample {
            rc: PixelPoint::new(self.x_rc.value()?, self.y_rc.value()?),
            trend: PixelPoint::new(self.x_rc.trend(), self.y_rc.trend()),
            sample_period: period,
            z: self.altitude()?,
            t,
        })
    }

    /// Time of the last frame that moved the red-marker track.
    pub fn rc_time(&self) -> Option<f64> {
        self.rc_time
    }
}
