//! Ground robot: unicycle kinematics and the nonlinear waypoint controller.
//!
//! The controller regulates the head marker (a distance `L` ahead of the
//! wheel axle) onto the waypoint. Writing the error in the robot frame as
//! `e_X = d·cos α − L`, `e_Y = d·sin α`, the commands
//!
//! ```text
//! u = K·(d·cos α − L)
//! r = K·d·sin α / L
//! ```
//!
//! give `ė + K·e = 0` on both axes while unsaturated. For `d·cos α < L` the
//! law commands reverse motion; that is kept as is.

use crate::{angle, Error, Result};

/// Ground-truth state of the ground robot.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UgvState {
    /// Wheel-axle center, world frame, meters.
    pub x: f64,
    pub y: f64,
    /// Heading, radians in `(-π, π]`.
    pub heading: f64,
    /// Longitudinal velocity actually applied, m/s.
    pub u: f64,
    /// Angular velocity actually applied, rad/s.
    pub r: f64,
}

impl UgvState {
    pub fn at(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: angle::wrap(heading),
            u: 0.0,
            r: 0.0,
        }
    }

    /// World position of the head marker.
    pub fn head(&self, marker_gap: f64) -> (f64, f64) {
        (
            self.x + marker_gap * libm::cos(self.heading),
            self.y + marker_gap * libm::sin(self.heading),
        )
    }

    /// Distance and steering angle from the axle to a world point.
    pub fn range_bearing_to(&self, wx: f64, wy: f64) -> (f64, f64) {
        let dx = wx - self.x;
        let dy = wy - self.y;
        let d = libm::hypot(dx, dy);
        let alpha = angle::wrap(libm::atan2(dy, dx) - self.heading);
        (d, alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UgvControlParams {
    /// Proportional gain `K`, 1/s.
    pub gain: f64,
    /// Axle-to-head marker distance `L`, meters.
    pub marker_gap: f64,
    pub u_max: f64,
    pub r_max: f64,
    /// First-order actuator lag; zero means ideal actuators.
    pub actuator_tau: f64,
}

impl Default for UgvControlParams {
    fn default() -> Self {
        Self {
            gain: 0.1,
            marker_gap: 0.15,
            u_max: 0.5,
            r_max: 1.0,
            actuator_tau: 0.0,
        }
    }
}

impl UgvControlParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gain > 0.0 && self.gain.is_finite()) {
            return Err(Error::param("K", "must be positive"));
        }
        if !(self.marker_gap > 0.0 && self.marker_gap.is_finite()) {
            return Err(Error::param("L", "must be positive"));
        }
        if !(self.u_max > 0.0) {
            return Err(Error::param("u_max", "must be positive"));
        }
        if !(self.r_max > 0.0) {
            return Err(Error::param("r_max", "must be positive"));
        }
        if !(self.actuator_tau >= 0.0 && self.actuator_tau.is_finite()) {
            return Err(Error::param("tau_act", "must be non-negative"));
        }
        Ok(())
    }
}

/// Saturated `(u, r)` for a distance `d` and steering angle `alpha`.
pub fn control(d: f64, alpha: f64, p: &UgvControlParams) -> (f64, f64) {
    let u = p.gain * (d * libm::cos(alpha) - p.marker_gap);
    let r = p.gain * (d * libm::sin(alpha)) / p.marker_gap;
    (u.clamp(-p.u_max, p.u_max), r.clamp(-p.r_max, p.r_max))
}

/// Advances the unicycle by `dt` under commanded velocities.
///
/// Applied velocities relax toward the commands with time constant
/// `actuator_tau` (exact discretization), then position integrates with the
/// heading at the start of the step.
pub fn step(s: &UgvState, u_cmd: f64, r_cmd: f64, actuator_tau: f64, dt: f64) -> Result<UgvState> {
    if !(dt > 0.0) {
        return Err(Error::NonPositiveStep(dt));
    }
    let (u, r) = if actuator_tau > 0.0 {
        let k = 1.0 - libm::exp(-dt / actuator_tau);
        (s.u + (u_cmd - s.u) * k, s.r + (r_cmd - s.r) * k)
    } else {
        (u_cmd, r_cmd)
    };
    Ok(UgvState {
        x: s.x + u * libm::cos(s.heading) * dt,
        y: s.y + u * libm::sin(s.heading) * dt,
        heading: angle::wrap(s.heading + r * dt),
        u,
        r,
    })
}
