//! Per-step snapshot of everything observable in the loop.

/// One row of telemetry, recorded at the end of every engine step.
///
/// Optional fields are absent until the quantity exists (no frame yet, no
/// active waypoint, no command this step).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TelemetryFrame {
    pub t: f64,
    pub step: u64,

    pub ugv_x: f64,
    pub ugv_y: f64,
    pub ugv_heading: f64,
    pub ugv_u: f64,
    pub ugv_r: f64,

    pub uav_x: f64,
    pub uav_y: f64,
    pub uav_z: f64,
    pub uav_vx: f64,
    pub uav_vy: f64,
    pub uav_vz: f64,
    pub uav_roll: f64,
    pub uav_pitch: f64,
    pub uav_yaw: f64,
    pub uav_thrust: f64,
    pub roll_d: f64,
    pub pitch_d: f64,

    /// Latest rendered frame: red marker.
    pub rc_x_px: Option<f64>,
    pub rc_y_px: Option<f64>,
    /// Latest rendered frame: blue marker.
    pub rh_x_px: Option<f64>,
    pub rh_y_px: Option<f64>,
    pub obs_valid: bool,
    pub in_frame: bool,

    /// Altitude the station uses for backprojection.
    pub z_est: Option<f64>,
    pub d_raw: Option<f64>,
    pub alpha_raw: Option<f64>,
    pub d_smooth: Option<f64>,
    pub alpha_smooth: Option<f64>,
    /// Ground-truth axle-to-waypoint distance and steering angle.
    pub d_true: Option<f64>,
    pub alpha_true: Option<f64>,
    /// Ground-truth head-to-waypoint distance.
    pub head_dist: Option<f64>,

    /// Smoothed red-marker offset from the principal point, pixels.
    pub e_x_px: Option<f64>,
    pub e_y_px: Option<f64>,
    /// Ground-truth robot offset from the UAV on the ground plane, meters.
    pub e_x: f64,
    pub e_y: f64,
    pub servo_stale: bool,

    pub waypoint_id: Option<u64>,
    pub waypoint_x: Option<f64>,
    pub waypoint_y: Option<f64>,

    pub cmd_sent: bool,
    pub cmd_d: Option<f64>,
    pub cmd_alpha: Option<f64>,
}
