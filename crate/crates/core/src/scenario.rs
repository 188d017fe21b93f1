//! Scenario description and its validation.

use alloc::vec::Vec;

use crate::camera::{CameraModel, PixelPoint};
use crate::netlink::ChannelParams;
use crate::perception::NoiseModel;
use crate::station::{AltitudeSource, ChannelFactors, SmoothingRate, StationConfig, COMMAND_PERIOD};
use crate::uav::UavParams;
use crate::ugv::UgvControlParams;
use crate::{Error, Result};

/// Command period in microseconds.
pub const COMMAND_PERIOD_US: u64 = 20_000;

/// A click injected at a fixed simulated time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScriptedClick {
    pub t: f64,
    pub pixel: PixelPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub duration: f64,
    pub dt: f64,
    pub seed: u64,

    pub camera: CameraModel,
    /// Render observations through the tilted airframe instead of a nadir view.
    pub tilt_projection: bool,

    pub ugv_x: f64,
    pub ugv_y: f64,
    pub ugv_heading: f64,
    pub ugv: UgvControlParams,
    /// The robot stops if no command arrives for this long.
    pub command_timeout: f64,

    pub uav_x: f64,
    pub uav_y: f64,
    pub uav_z: f64,
    pub uav: UavParams,

    pub noise: NoiseModel,

    pub video_link: ChannelParams,
    /// Camera frame rate, which is also the video link send rate.
    pub video_rate_hz: f64,
    pub command_link: ChannelParams,
    /// Hand messages straight to the receiver instead of through the links.
    pub bypass_links: bool,

    pub arrival_epsilon: f64,
    pub stale_timeout: f64,
    pub smoothing: ChannelFactors,
    pub smoothing_rate: SmoothingRate,
    pub altitude_source: AltitudeSource,

    pub clicks: Vec<ScriptedClick>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            duration: 60.0,
            dt: 0.001,
            seed: 0,
            camera: CameraModel::default(),
            tilt_projection: false,
            ugv_x: -8.0,
            ugv_y: -8.0,
            ugv_heading: 0.0,
            ugv: UgvControlParams::default(),
            command_timeout: 0.1,
            uav_x: -6.0,
            uav_y: -9.0,
            uav_z: 5.0,
            uav: UavParams::default(),
            noise: NoiseModel::default(),
            video_link: ChannelParams {
                latency_mean: 0.08,
                latency_jitter: 0.0,
                loss_prob: 0.0,
            },
            video_rate_hz: 25.0,
            command_link: ChannelParams {
                latency_mean: 0.005,
                latency_jitter: 0.0,
                loss_prob: 0.0,
            },
            bypass_links: false,
            arrival_epsilon: 0.05,
            stale_timeout: 0.5,
            smoothing: ChannelFactors::default(),
            smoothing_rate: SmoothingRate::Camera,
            altitude_source: AltitudeSource::Reported,
            clicks: Vec::new(),
        }
    }
}

fn micros(seconds: f64) -> Option<u64> {
    if !(seconds >= 0.0 && seconds.is_finite()) {
        return None;
    }
    let us = libm::round(seconds * 1e6);
    if (seconds * 1e6 - us).abs() > 1e-6 {
        return None;
    }
    Some(us as u64)
}

impl Scenario {
    /// Checks every parameter and the timing grid.
    pub fn validate(&self) -> Result<()> {
        let dt = self.dt_us()?;
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(Error::param("duration", "must be non-negative"));
        }
        let frame = self.frame_period_us()?;
        if frame % dt != 0 {
            return Err(Error::param("rate_hz", "frame period must be a multiple of dt"));
        }
        self.camera.validate()?;
        self.ugv.validate()?;
        self.uav.validate()?;
        self.noise.validate()?;
        self.video_link.validate()?;
        self.command_link.validate()?;
        for f in [
            self.smoothing.d,
            self.smoothing.alpha,
            self.smoothing.x_rc,
            self.smoothing.y_rc,
            self.smoothing.altitude,
        ] {
            f.validate()?;
        }
        if ![self.ugv_x, self.ugv_y, self.ugv_heading, self.uav_x, self.uav_y].iter().all(|v| v.is_finite()) {
            return Err(Error::param("initial pose", "must be finite"));
        }
        if !(self.uav_z > 0.0 && self.uav_z.is_finite()) {
            return Err(Error::param("uav.z", "must be positive"));
        }
        if !(self.command_timeout > 0.0) {
            return Err(Error::param("command_timeout", "must be positive"));
        }
        if !(self.arrival_epsilon >= 0.0) {
            return Err(Error::param("arrival_epsilon", "must be non-negative"));
        }
        if !(self.stale_timeout > 0.0) {
            return Err(Error::param("stale_timeout", "must be positive"));
        }
        for c in &self.clicks {
            if !(c.t >= 0.0 && c.t.is_finite() && c.pixel.x.is_finite() && c.pixel.y.is_finite()) {
                return Err(Error::param("click", "time and pixel must be finite, time non-negative"));
            }
        }
        Ok(())
    }

    /// Step in microseconds; must divide the 20 ms command period.
    pub fn dt_us(&self) -> Result<u64> {
        match micros(self.dt) {
            Some(us) if us > 0 && COMMAND_PERIOD_US.is_multiple_of(us) => Ok(us),
            _ => Err(Error::param("dt", "must be a whole number of microseconds dividing 0.02 s")),
        }
    }

    pub fn frame_period_us(&self) -> Result<u64> {
        if !(self.video_rate_hz > 0.0) {
            return Err(Error::param("rate_hz", "must be positive"));
        }
        match micros(1.0 / self.video_rate_hz) {
            Some(us) if us > 0 => Ok(us),
            _ => Err(Error::param("rate_hz", "period must be a whole number of microseconds")),
        }
    }

    /// Number of steps the run takes.
    pub fn steps(&self) -> Result<u64> {
        let dt = self.dt_us()?;
        let total = micros(self.duration).ok_or(Error::param("duration", "must be non-negative"))?;
        Ok(total / dt)
    }

    pub fn station_config(&self) -> StationConfig {
        StationConfig {
            camera: self.camera,
            marker_gap: self.ugv.marker_gap,
            arrival_epsilon: self.arrival_epsilon,
            stale_timeout: self.stale_timeout,
            factors: self.smoothing,
            altitude_source: self.altitude_source,
            smoothing_rate: self.smoothing_rate,
        }
    }

    pub fn command_period(&self) -> f64 {
        COMMAND_PERIOD
    }
}
