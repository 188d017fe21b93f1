//! Quadrotor: translational dynamics under thrust orientation, the PD
//! visual-servo law, desired-angle extraction and a first-order stand-in for
//! the onboard attitude/altitude autopilot.
//!
//! The servo error is the red marker's offset from the image center. With
//! the robot still, the error obeys `ë + K2·ė + K1·e = 0`; for the default
//! gains the roots are real (≈ −0.634 and −2.366) so it decays without
//! overshoot.

use crate::camera::{CameraModel, PixelPoint};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UavState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    /// Total thrust `U1`, Newtons.
    pub thrust: f64,
}

impl UavState {
    /// Level hover at the given position.
    pub fn hovering(x: f64, y: f64, z: f64, p: &UavParams) -> Self {
        Self {
            x,
            y,
            z,
            thrust: p.mass * p.gravity,
            ..Self::default()
        }
    }
}

/// Which units the PD gains act on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ServoUnits {
    /// Pixel error backprojected to meters at the current altitude.
    #[default]
    Metric,
    /// Raw pixel error.
    Pixel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavParams {
    /// Mass `m`, kg.
    pub mass: f64,
    /// Proportional gain `K1`.
    pub k1: f64,
    /// Derivative gain `K2`.
    pub k2: f64,
    /// Attitude time constant of the autopilot, s.
    pub tau_att: f64,
    /// Altitude setpoint `z_d`, m.
    pub z_d: f64,
    pub z_min: f64,
    pub z_max: f64,
    /// Roll/pitch limit, rad.
    pub angle_max: f64,
    pub gravity: f64,
    /// Altitude-hold PD gains (critically damped by default).
    pub alt_kp: f64,
    pub alt_kd: f64,
    pub servo_units: ServoUnits,
    /// Rigid-body parameters carried for reference; the simplified inner loop
    /// does not use them.
    pub airframe: Airframe,
}

/// Rotor and inertia parameters of the reference airframe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Airframe {
    pub thrust_coeff: f64,
    pub drag_coeff: f64,
    pub rotor_inertia: f64,
    pub arm_length: f64,
    pub inertia_x: f64,
    pub inertia_y: f64,
    pub inertia_z: f64,
}

impl Default for Airframe {
    fn default() -> Self {
        Self {
            thrust_coeff: 1.3e-5,
            drag_coeff: 1e-9,
            rotor_inertia: 6e-7,
            arm_length: 1.0,
            inertia_x: 0.02582,
            inertia_y: 0.02616,
            inertia_z: 0.04543,
        }
    }
}

impl Default for UavParams {
    fn default() -> Self {
        Self {
            mass: 1.4,
            k1: 1.5,
            k2: 3.0,
            tau_att: 0.15,
            z_d: 3.0,
            z_min: 1.5,
            z_max: 6.0,
            angle_max: 20f64.to_radians(),
            gravity: 9.81,
            alt_kp: 4.0,
            alt_kd: 4.0,
            servo_units: ServoUnits::Metric,
            airframe: Airframe::default(),
        }
    }
}

impl UavParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::param("m", "must be positive"));
        }
        if !(self.k1 > 0.0) {
            return Err(Error::param("K1", "must be positive"));
        }
        if !(self.k2 > 0.0) {
            return Err(Error::param("K2", "must be positive"));
        }
        if !(self.tau_att >= 0.0 && self.tau_att.is_finite()) {
            return Err(Error::param("tau_att", "must be non-negative"));
        }
        if !(self.z_min > 0.0) {
            return Err(Error::param("z_min", "must be positive"));
        }
        if !(self.z_min < self.z_d && self.z_d < self.z_max) {
            return Err(Error::param("z_d", "must satisfy z_min < z_d < z_max"));
        }
        if !(self.angle_max > 0.0 && self.angle_max < core::f64::consts::FRAC_PI_2) {
            return Err(Error::param("angle_max", "must be in (0, pi/2)"));
        }
        if !(self.gravity > 0.0) {
            return Err(Error::param("g", "must be positive"));
        }
        if !(self.alt_kp > 0.0) {
            return Err(Error::param("alt_kp", "must be positive"));
        }
        if !(self.alt_kd >= 0.0) {
            return Err(Error::param("alt_kd", "must be non-negative"));
        }
        Ok(())
    }
}

/// Error fed to the PD law.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ServoError {
    pub e_x: f64,
    pub e_y: f64,
    pub de_x: f64,
    pub de_y: f64,
}

/// Servo error from the smoothed red-marker pixel and its smoothed trend.
///
/// `trend` is in pixels per sample; dividing by `sample_period` gives the
/// rate. With [`ServoUnits::Metric`] both are backprojected to meters at `z`.
pub fn servo_error(
    rc: &PixelPoint,
    trend: &PixelPoint,
    sample_period: f64,
    z: f64,
    cam: &CameraModel,
    units: ServoUnits,
) -> Result<ServoError> {
    if !(sample_period > 0.0) {
        return Err(Error::NonPositiveStep(sample_period));
    }
    match units {
        ServoUnits::Metric => {
            let e = cam.backproject(rc, z)?;
            // the trend is a pixel difference, so the principal point cancels
            let de = cam.backproject(
                &PixelPoint::new(trend.x + cam.principal_x, trend.y + cam.principal_y),
                z,
            )?;
            Ok(ServoError {
                e_x: e.x,
                e_y: e.y,
                de_x: de.x / sample_period,
                de_y: de.y / sample_period,
            })
        }
        ServoUnits::Pixel => Ok(ServoError {
            e_x: rc.x - cam.principal_x,
            e_y: rc.y - cam.principal_y,
            de_x: trend.x / sample_period,
            de_y: trend.y / sample_period,
        }),
    }
}

/// Holds the last good servo error across dropped frames.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ServoTracker {
    error: ServoError,
    updated_at: Option<f64>,
}

impl ServoTracker {
    pub fn update(&mut self, e: ServoError, t: f64) {
        self.error = e;
        self.updated_at = Some(t);
    }

    /// Last error and whether it is older than `max_age`.
    pub fn current(&self, now: f64, max_age: f64) -> (ServoError, bool) {
        let stale = match self.updated_at {
            Some(t) => now - t > max_age,
            None => true,
        };
        (self.error, stale)
    }

    pub fn has_sample(&self) -> bool {
        self.updated_at.is_some()
    }
}

/// PD law on the thrust orientation, clamped to the arcsine domain.
pub fn servo_control(e: &ServoError, p: &UavParams, thrust: f64) -> (f64, f64) {
    let scale = p.mass / thrust;
    let ux = scale * (p.k1 * e.e_x + p.k2 * e.de_x);
    let uy = scale * (p.k1 * e.e_y + p.k2 * e.de_y);
    (ux.clamp(-1.0, 1.0), uy.clamp(-1.0, 1.0))
}

/// Desired `(roll, pitch)` for a thrust orientation at zero yaw.
pub fn desired_angles(ux: f64, uy: f64, angle_max: f64) -> (f64, f64) {
    let roll = libm::asin((-uy).clamp(-1.0, 1.0)).clamp(-angle_max, angle_max);
    let c = libm::cos(roll);
    let pitch = if c > 0.0 {
        libm::asin((ux / c).clamp(-1.0, 1.0))
    } else {
        libm::asin(ux.signum())
    };
    (roll, pitch.clamp(-angle_max, angle_max))
}

/// Horizontal acceleration produced by thrust `U1` at the given attitude.
pub fn translational_accel(roll: f64, pitch: f64, yaw: f64, thrust: f64, mass: f64) -> (f64, f64) {
    let (sr, cr) = (libm::sin(roll), libm::cos(roll));
    let (sp, _) = (libm::sin(pitch), libm::cos(pitch));
    let (sy, cy) = (libm::sin(yaw), libm::cos(yaw));
    let a = thrust / mass;
    ((cr * sp * cy + sr * sy) * a, (cr * sp * sy - sr * cy) * a)
}

/// One autopilot + dynamics step.
///
/// Roll and pitch relax toward the setpoints with time constant `tau_att`
/// (exact discretization), yaw is held at zero, and the thrust is chosen so
/// the vertical axis follows a PD law toward `z_d`. Velocities update before
/// positions.
pub fn inner_loop_step(s: &UavState, roll_d: f64, pitch_d: f64, p: &UavParams, dt: f64) -> Result<UavState> {
    if !(dt > 0.0) {
        return Err(Error::NonPositiveStep(dt));
    }
    let k = if p.tau_att > 0.0 {
        1.0 - libm::exp(-dt / p.tau_att)
    } else {
        1.0
    };
    let roll = (s.roll + (roll_d - s.roll) * k).clamp(-p.angle_max, p.angle_max);
    let pitch = (s.pitch + (pitch_d - s.pitch) * k).clamp(-p.angle_max, p.angle_max);
    let yaw = 0.0;

    let tilt = libm::cos(roll) * libm::cos(pitch);
    let az_cmd = p.alt_kp * (p.z_d - s.z) - p.alt_kd * s.vz;
    let lift = p.gravity + az_cmd;
    let (thrust, az) = if lift > 0.0 {
        (p.mass * lift / tilt, az_cmd)
    } else {
        (0.0, -p.gravity)
    };

    let (ax, ay) = translational_accel(roll, pitch, yaw, thrust, p.mass);

    let vx = s.vx + ax * dt;
    let vy = s.vy + ay * dt;
    let mut vz = s.vz + az * dt;
    let mut z = s.z + vz * dt;
    if z < 0.0 {
        z = 0.0;
        vz = vz.max(0.0);
    }
    Ok(UavState {
        x: s.x + vx * dt,
        y: s.y + vy * dt,
        z,
        vx,
        vy,
        vz,
        roll,
        pitch,
        yaw,
        thrust,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn servo_error_examples() {
        let cam = CameraModel::with_gains(500.0, 500.0).unwrap();
        let e = servo_error(&PixelPoint::default(), &PixelPoint::default(), 0.04, 3.0, &cam, ServoUnits::Metric).unwrap();
        assert_eq!(e, ServoError::default());
        let e = servo_error(&PixelPoint::new(100.0, 0.0), &PixelPoint::default(), 0.04, 3.0, &cam, ServoUnits::Metric).unwrap();
        assert_abs_diff_eq!(e.e_x, 0.6, epsilon = 1e-12);
        let e = servo_error(&PixelPoint::new(0.0, 0.0), &PixelPoint::new(2.0, 0.0), 0.04, 3.0, &cam, ServoUnits::Metric).unwrap();
        assert_abs_diff_eq!(e.de_x, 0.012 / 0.04, epsilon = 1e-12);
        let e = servo_error(&PixelPoint::new(100.0, 0.0), &PixelPoint::new(2.0, 0.0), 0.04, 3.0, &cam, ServoUnits::Pixel).unwrap();
        assert_abs_diff_eq!(e.e_x, 100.0);
        assert_abs_diff_eq!(e.de_x, 50.0);
    }

    #[test]
    fn stale_tracker_holds_last_error() {
        let mut tr = ServoTracker::default();
        assert!(tr.current(0.0, 0.5).1);
        let e = ServoError { e_x: 0.3, ..ServoError::default() };
        tr.update(e, 1.0);
        assert_eq!(tr.current(1.2, 0.5), (e, false));
        assert_eq!(tr.current(2.0, 0.5), (e, true));
    }

    #[test]
    fn servo_control_examples() {
        let p = UavParams::default();
        let hover = p.mass * p.gravity;
        assert_eq!(servo_control(&ServoError::default(), &p, hover), (0.0, 0.0));
        let (ux, uy) = servo_control(&ServoError { e_x: 1.0, ..Default::default() }, &p, hover);
        assert_abs_diff_eq!(ux, 1.5 / 9.81, epsilon = 1e-12);
        assert_abs_diff_eq!(ux, 0.1529, epsilon = 1e-4);
        assert_eq!(uy, 0.0);
        let (ux, _) = servo_control(&ServoError { e_x: 1e6, ..Default::default() }, &p, hover);
        assert_eq!(ux, 1.0);
    }

    #[test]
    fn desired_angle_examples() {
        let big = 1.5;
        assert_eq!(desired_angles(0.0, 0.0, big), (0.0, 0.0));
        let (roll, pitch) = desired_angles(0.1529, 0.0, big);
        assert_eq!(roll, 0.0);
        assert_abs_diff_eq!(pitch, libm::asin(0.1529), epsilon = 1e-15);
        assert_abs_diff_eq!(pitch, 0.1535, epsilon = 1e-4);
        let (roll, _) = desired_angles(0.0, 0.5, big);
        assert_abs_diff_eq!(roll, -core::f64::consts::FRAC_PI_6, epsilon = 1e-12);
        let (roll, pitch) = desired_angles(0.9, -0.9, 20f64.to_radians());
        assert_abs_diff_eq!(roll, 20f64.to_radians());
        assert_abs_diff_eq!(pitch, 20f64.to_radians());
    }

    #[test]
    fn translational_accel_examples() {
        let m = 1.4;
        let g = 9.81;
        assert_eq!(translational_accel(0.0, 0.0, 0.0, 100.0, m), (0.0, 0.0));
        let (ax, ay) = translational_accel(0.0, 0.1, 0.0, m * g, m);
        assert_abs_diff_eq!(ax, g * libm::sin(0.1), epsilon = 1e-12);
        assert_abs_diff_eq!(ax, 0.979, epsilon = 1e-3);
        assert_abs_diff_eq!(ay, 0.0, epsilon = 1e-15);
        let (_, ay) = translational_accel(0.1, 0.0, 0.0, m * g, m);
        assert_abs_diff_eq!(ay, -g * libm::sin(0.1), epsilon = 1e-12);
    }

    #[test]
    fn hover_is_an_equilibrium() {
        let p = UavParams::default();
        let s0 = UavState::hovering(1.0, -2.0, p.z_d, &p);
        let mut s = s0;
        for _ in 0..1000 {
            s = inner_loop_step(&s, 0.0, 0.0, &p, 0.001).unwrap();
        }
        assert_eq!(s, s0);
        assert_abs_diff_eq!(s.thrust, p.mass * p.gravity, epsilon = 1e-6);
    }

    #[test]
    fn attitude_step_is_first_order() {
        let p = UavParams::default();
        let mut s = UavState::hovering(0.0, 0.0, p.z_d, &p);
        let roll_d = 0.1;
        let dt = 0.001;
        for i in 1..=600 {
            s = inner_loop_step(&s, roll_d, 0.0, &p, dt).unwrap();
            let t = i as f64 * dt;
            let expected = roll_d * (1.0 - libm::exp(-t / p.tau_att));
            assert!((s.roll - expected).abs() <= 0.02 * roll_d, "t={t}");
        }
    }

    #[test]
    fn altitude_step_settles_without_oscillation() {
        let p = UavParams::default();
        let mut s = UavState::hovering(0.0, 0.0, 2.0, &p);
        let dt = 0.001;
        let mut max_z = 0.0f64;
        let mut settle = None;
        for i in 1..=10_000 {
            s = inner_loop_step(&s, 0.0, 0.0, &p, dt).unwrap();
            max_z = max_z.max(s.z);
            if settle.is_none() && (s.z - 3.0).abs() <= 0.05 {
                settle = Some(i as f64 * dt);
            }
            if settle.is_some() {
                assert!((s.z - 3.0).abs() <= 0.05);
            }
        }
        assert!(settle.unwrap() < 3.0);
        assert!(max_z <= 3.0 + 1e-9, "overshoot {max_z}");
    }

    #[test]
    fn rejects_bad_params() {
        let p = UavParams { mass: -1.0, ..UavParams::default() };
        assert!(p.validate().is_err());
        let p = UavParams { z_d: 7.0, ..UavParams::default() };
        assert!(p.validate().is_err());
        let s = UavState::default();
        assert!(inner_loop_step(&s, 0.0, 0.0, &UavParams::default(), 0.0).is_err());
    }

    #[test]
    fn linearized_servo_loop_is_overdamped() {
        // Ideal attitude, robot still: e = -x_uav obeys ë + K2 ė + K1 e = 0.
        let p = UavParams { tau_att: 0.0, angle_max: 1.2, ..UavParams::default() };
        let mut s = UavState::hovering(-1.0, 0.0, p.z_d, &p);
        let dt = 0.001;
        for _ in 0..10_000 {
            let e = ServoError { e_x: -s.x, e_y: -s.y, de_x: -s.vx, de_y: -s.vy };
            let (ux, uy) = servo_control(&e, &p, s.thrust);
            let (roll_d, pitch_d) = desired_angles(ux, uy, p.angle_max);
            s = inner_loop_step(&s, roll_d, pitch_d, &p, dt).unwrap();
            assert!(s.x <= 1e-12, "sign change at x={}", s.x);
        }
        assert!(s.x.abs() < 0.01);
        // closed form with roots -0.634, -2.366 at t = 10 s
        let (r1, r2) = ((-3.0 + 3f64.sqrt()) / 2.0, (-3.0 - 3f64.sqrt()) / 2.0);
        let c1 = -r2 / (r1 - r2);
        let c2 = r1 / (r1 - r2);
        let e10 = c1 * (r1 * 10.0).exp() + c2 * (r2 * 10.0).exp();
        assert!((-s.x - e10).abs() < 1e-3, "{} vs {e10}", -s.x);
    }

    proptest! {
        #[test]
        fn servo_chain_is_odd(ex in -2.0f64..2.0, ey in -2.0f64..2.0, dx in -2.0f64..2.0, dy in -2.0f64..2.0) {
            let p = UavParams::default();
            let hover = p.mass * p.gravity;
            let e = ServoError { e_x: ex, e_y: ey, de_x: dx, de_y: dy };
            let n = ServoError { e_x: -ex, e_y: -ey, de_x: -dx, de_y: -dy };
            let (ux, uy) = servo_control(&e, &p, hover);
            let (nx, ny) = servo_control(&n, &p, hover);
            let (r, pt) = desired_angles(ux, uy, p.angle_max);
            let (nr, npt) = desired_angles(nx, ny, p.angle_max);
            prop_assert!((r + nr).abs() < 1e-12);
            prop_assert!((pt + npt).abs() < 1e-12);
        }
    }
}
