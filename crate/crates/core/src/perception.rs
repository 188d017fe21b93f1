//! Synthetic marker observations and the pose estimate derived from them.
//!
//! The robot carries a red marker `Rc` on the wheel axle and a blue marker
//! `Rh` on its head, `L` meters ahead. Seen from above, the heading is the
//! direction `Rc → Rh`, the bearing to the waypoint is `Rc → w`, and the
//! steering angle is their difference. The metric distance comes from
//! backprojecting `Rc` and `w` at the current altitude.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::camera::{CameraModel, GroundPoint, PixelPoint};
use crate::uav::UavState;
use crate::ugv::UgvState;
use crate::{angle, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MarkerObservation {
    pub t: f64,
    /// Red marker, wheel-axle center.
    pub rc: PixelPoint,
    /// Blue marker, head.
    pub rh: PixelPoint,
    /// Both markers fall on the sensor.
    pub in_frame: bool,
    /// False when the frame was dropped.
    pub valid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Standard deviation of the per-axis pixel noise.
    pub pixel_stddev: f64,
    pub dropout_prob: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            pixel_stddev: 0.0,
            dropout_prob: 0.0,
        }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.pixel_stddev >= 0.0 && self.pixel_stddev.is_finite()) {
            return Err(Error::param("pixel_stddev", "must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.dropout_prob) {
            return Err(Error::param("dropout_prob", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Distance and steering angle toward the waypoint.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PoseEstimate {
    pub d: f64,
    /// `wrap(theta - beta)`.
    pub alpha: f64,
    /// Bearing of the waypoint from `Rc` in the image.
    pub theta: f64,
    /// Heading `Rc → Rh` in the image.
    pub beta: f64,
}

/// Where the camera sits when the frame is taken.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CameraPose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub roll: f64,
    pub pitch: f64,
}

impl From<&UavState> for CameraPose {
    fn from(s: &UavState) -> Self {
        Self {
            x: s.x,
            y: s.y,
            z: s.z,
            roll: s.roll,
            pitch: s.pitch,
        }
    }
}

impl CameraPose {
    /// Pixel of a world ground point.
    ///
    /// Nadir model: the offset from the camera is projected at altitude `z`.
    /// With `tilt` the offset is first rotated into the tilted body frame and
    /// projected at its depth along the optical axis.
    pub fn pixel_of(&self, wx: f64, wy: f64, cam: &CameraModel, tilt: bool) -> Result<PixelPoint> {
        let dx = wx - self.x;
        let dy = wy - self.y;
        if !tilt {
            return cam.project(&GroundPoint::new(dx, dy), self.z);
        }
        // world → body is Rx(roll)ᵀ·Ry(pitch)ᵀ with yaw held at zero; the
        // camera looks along −z_body
        let (sr, cr) = (libm::sin(self.roll), libm::cos(self.roll));
        let (sp, cp) = (libm::sin(self.pitch), libm::cos(self.pitch));
        let (vx, vy, vz) = (dx, dy, -self.z);
        let bx = cp * vx - sp * vz;
        let pz = sp * vx + cp * vz;
        let by = cr * vy + sr * pz;
        let bz = -sr * vy + cr * pz;
        let depth = -bz;
        cam.project(&GroundPoint::new(bx, by), depth)
    }
}

/// Renders the two markers into a noisy observation.
///
/// The generator is always advanced by one uniform and four normal draws so
/// the stream stays aligned whatever the noise settings.
pub fn observe<R: Rng + ?Sized>(
    ugv: &UgvState,
    marker_gap: f64,
    pose: &CameraPose,
    cam: &CameraModel,
    noise: &NoiseModel,
    rng: &mut R,
    t: f64,
    tilt: bool,
) -> Result<MarkerObservation> {
    let (hx, hy) = ugv.head(marker_gap);
    let rc = pose.pixel_of(ugv.x, ugv.y, cam, tilt)?;
    let rh = pose.pixel_of(hx, hy, cam, tilt)?;

    let drop: f64 = rng.random();
    let mut n = [0.0f64; 4];
    for v in &mut n {
        *v = StandardNormal.sample(rng);
    }
    let s = noise.pixel_stddev;
    let rc = PixelPoint::new(rc.x + s * n[0], rc.y + s * n[1]);
    let rh = PixelPoint::new(rh.x + s * n[2], rh.y + s * n[3]);
    Ok(MarkerObservation {
        t,
        rc,
        rh,
        in_frame: cam.in_frame(&rc) && cam.in_frame(&rh),
        valid: drop >= noise.dropout_prob,
    })
}

/// Distance and steering angle from one observation.
pub fn estimate_pose(obs: &MarkerObservation, waypoint: &PixelPoint, z: f64, cam: &CameraModel) -> Result<PoseEstimate> {
    if !obs.valid {
        return Err(Error::InvalidObservation);
    }
    if obs.rc == obs.rh {
        return Err(Error::CoincidentMarkers);
    }
    let theta = libm::atan2(waypoint.y - obs.rc.y, waypoint.x - obs.rc.x);
    let beta = libm::atan2(obs.rh.y - obs.rc.y, obs.rh.x - obs.rc.x);
    let rc = cam.backproject(&obs.rc, z)?;
    let w = cam.backproject(waypoint, z)?;
    Ok(PoseEstimate {
        d: rc.distance(&w),
        alpha: angle::wrap(theta - beta),
        theta,
        beta,
    })
}
