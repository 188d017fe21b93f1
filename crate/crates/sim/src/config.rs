//! Scenario files.
//!
//! A scenario is a TOML document with optional sections; every key is
//! optional and falls back to the default listed here. Unknown sections and
//! keys are rejected. All values are SI (meters, seconds, radians).
//!
//! ```toml
//! [run]
//! duration = 60.0        # s
//! dt = 0.001             # s, must divide 0.02
//! seed = 0
//! tilt_projection = false
//! bypass_links = false
//!
//! [camera]
//! f = 0.004              # m
//! delta_x = 8e-6         # m/pixel
//! delta_y = 8e-6
//! X0 = 0.0               # pixels
//! Y0 = 0.0
//! image_width = 640
//! image_height = 480
//! rate_hz = 25.0
//!
//! [ugv]
//! x = -8.0
//! y = -8.0
//! heading = 0.0
//! K = 0.1                # 1/s
//! L = 0.15               # m
//! u_max = 0.5            # m/s
//! r_max = 1.0            # rad/s
//! tau_act = 0.0          # s, 0 = ideal actuators
//! command_timeout = 0.1  # s without commands before the robot stops
//!
//! [uav]
//! x = -6.0
//! y = -9.0
//! z = 5.0
//! m = 1.4
//! K1 = 1.5
//! K2 = 3.0
//! tau_att = 0.15
//! z_d = 3.0
//! z_min = 1.5
//! z_max = 6.0
//! angle_max = 0.3490658503988659
//! g = 9.81
//! alt_kp = 4.0
//! alt_kd = 4.0
//! servo_units = "metric"  # or "pixel"
//! b = 1.3e-5              # airframe reference values, not used by the
//! d = 1e-9                # simplified inner loop
//! Jr = 6e-7
//! l = 1.0
//! Ix = 0.02582
//! Iy = 0.02616
//! Iz = 0.04543
//!
//! [noise]
//! pixel_stddev = 0.0
//! dropout_prob = 0.0
//!
//! [video_link]
//! latency_mean = 0.08
//! latency_jitter = 0.0
//! loss_prob = 0.0
//!
//! [command_link]
//! latency_mean = 0.005
//! latency_jitter = 0.0
//! loss_prob = 0.0
//!
//! [station]
//! arrival_epsilon = 0.05
//! stale_timeout = 0.5
//! smoothing_rate = "camera"      # or "command"
//! altitude_source = "reported"   # or "markers"
//!
//! [smoothing]
//! gamma_d = 0.6
//! lambda_d = 0.3
//! # likewise gamma_/lambda_ for alpha, x_rc, y_rc, z
//!
//! [[click]]
//! t = 5.0
//! x_px = 120.0
//! y_px = -40.0
//! ```

use std::path::{Path, PathBuf};

use agc_core::camera::PixelPoint;
use agc_core::scenario::{Scenario, ScriptedClick};
use agc_core::smoothing::DesFactors;
use agc_core::station::{AltitudeSource, SmoothingRate};
use agc_core::uav::ServoUnits;
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read scenario file {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Invalid(#[from] agc_core::Error),
}

impl ConfigError {
    pub fn is_missing_file(&self) -> bool {
        matches!(self, ConfigError::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound)
    }
}

macro_rules! set {
    ($target:expr, $src:expr) => {
        if let Some(v) = $src {
            $target = v;
        }
    };
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct File {
    #[serde(default)]
    run: Run,
    #[serde(default)]
    camera: Camera,
    #[serde(default)]
    ugv: Ugv,
    #[serde(default)]
    uav: Uav,
    #[serde(default)]
    noise: Noise,
    #[serde(default)]
    video_link: Link,
    #[serde(default)]
    command_link: Link,
    #[serde(default)]
    station: Station,
    #[serde(default)]
    smoothing: Smoothing,
    #[serde(default)]
    click: Vec<Click>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Run {
    duration: Option<f64>,
    dt: Option<f64>,
    seed: Option<u64>,
    tilt_projection: Option<bool>,
    bypass_links: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Camera {
    f: Option<f64>,
    delta_x: Option<f64>,
    delta_y: Option<f64>,
    #[serde(rename = "X0")]
    x0: Option<f64>,
    #[serde(rename = "Y0")]
    y0: Option<f64>,
    image_width: Option<u32>,
    image_height: Option<u32>,
    rate_hz: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Ugv {
    x: Option<f64>,
    y: Option<f64>,
    heading: Option<f64>,
    #[serde(rename = "K")]
    k: Option<f64>,
    #[serde(rename = "L")]
    l: Option<f64>,
    u_max: Option<f64>,
    r_max: Option<f64>,
    tau_act: Option<f64>,
    command_timeout: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Units {
    Metric,
    Pixel,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Uav {
    x: Option<f64>,
    y: Option<f64>,
    z: Option<f64>,
    m: Option<f64>,
    #[serde(rename = "K1")]
    k1: Option<f64>,
    #[serde(rename = "K2")]
    k2: Option<f64>,
    tau_att: Option<f64>,
    z_d: Option<f64>,
    z_min: Option<f64>,
    z_max: Option<f64>,
    angle_max: Option<f64>,
    g: Option<f64>,
    alt_kp: Option<f64>,
    alt_kd: Option<f64>,
    servo_units: Option<Units>,
    b: Option<f64>,
    d: Option<f64>,
    #[serde(rename = "Jr")]
    jr: Option<f64>,
    l: Option<f64>,
    #[serde(rename = "Ix")]
    ix: Option<f64>,
    #[serde(rename = "Iy")]
    iy: Option<f64>,
    #[serde(rename = "Iz")]
    iz: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Noise {
    pixel_stddev: Option<f64>,
    dropout_prob: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Link {
    latency_mean: Option<f64>,
    latency_jitter: Option<f64>,
    loss_prob: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Rate {
    Camera,
    Command,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Altitude {
    Reported,
    Markers,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Station {
    arrival_epsilon: Option<f64>,
    stale_timeout: Option<f64>,
    smoothing_rate: Option<Rate>,
    altitude_source: Option<Altitude>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Smoothing {
    gamma_d: Option<f64>,
    lambda_d: Option<f64>,
    gamma_alpha: Option<f64>,
    lambda_alpha: Option<f64>,
    gamma_x_rc: Option<f64>,
    lambda_x_rc: Option<f64>,
    gamma_y_rc: Option<f64>,
    lambda_y_rc: Option<f64>,
    gamma_z: Option<f64>,
    lambda_z: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Click {
    t: f64,
    x_px: f64,
    y_px: f64,
}

fn factors(base: &mut DesFactors, gamma: Option<f64>, lambda: Option<f64>) {
    set!(base.gamma, gamma);
    set!(base.lambda, lambda);
}

impl File {
    fn into_scenario(self) -> Scenario {
        let mut s = Scenario::default();
        let File {
            run,
            camera,
            ugv,
            uav,
            noise,
            video_link,
            command_link,
            station,
            smoothing,
            click,
        } = self;

        set!(s.duration, run.duration);
        set!(s.dt, run.dt);
        set!(s.seed, run.seed);
        set!(s.tilt_projection, run.tilt_projection);
        set!(s.bypass_links, run.bypass_links);

        let c = &mut s.camera;
        set!(c.focal_length, camera.f);
        set!(c.pixel_pitch_x, camera.delta_x);
        set!(c.pixel_pitch_y, camera.delta_y);
        set!(c.principal_x, camera.x0);
        set!(c.principal_y, camera.y0);
        set!(c.width_px, camera.image_width);
        set!(c.height_px, camera.image_height);
        set!(s.video_rate_hz, camera.rate_hz);

        set!(s.ugv_x, ugv.x);
        set!(s.ugv_y, ugv.y);
        set!(s.ugv_heading, ugv.heading);
        set!(s.ugv.gain, ugv.k);
        set!(s.ugv.marker_gap, ugv.l);
        set!(s.ugv.u_max, ugv.u_max);
        set!(s.ugv.r_max, ugv.r_max);
        set!(s.ugv.actuator_tau, ugv.tau_act);
        set!(s.command_timeout, ugv.command_timeout);

        set!(s.uav_x, uav.x);
        set!(s.uav_y, uav.y);
        set!(s.uav_z, uav.z);
        let p = &mut s.uav;
        set!(p.mass, uav.m);
        set!(p.k1, uav.k1);
        set!(p.k2, uav.k2);
        set!(p.tau_att, uav.tau_att);
        set!(p.z_d, uav.z_d);
        set!(p.z_min, uav.z_min);
        set!(p.z_max, uav.z_max);
        set!(p.angle_max, uav.angle_max);
        set!(p.gravity, uav.g);
        set!(p.alt_kp, uav.alt_kp);
        set!(p.alt_kd, uav.alt_kd);
        if let Some(u) = uav.servo_units {
            p.servo_units = match u {
                Units::Metric => ServoUnits::Metric,
                Units::Pixel => ServoUnits::Pixel,
            };
        }
        let a = &mut p.airframe;
        set!(a.thrust_coeff, uav.b);
        set!(a.drag_coeff, uav.d);
        set!(a.rotor_inertia, uav.jr);
        set!(a.arm_length, uav.l);
        set!(a.inertia_x, uav.ix);
        set!(a.inertia_y, uav.iy);
        set!(a.inertia_z, uav.iz);

        set!(s.noise.pixel_stddev, noise.pixel_stddev);
        set!(s.noise.dropout_prob, noise.dropout_prob);

        for (target, src) in [(&mut s.video_link, video_link), (&mut s.command_link, command_link)] {
            set!(target.latency_mean, src.latency_mean);
            set!(target.latency_jitter, src.latency_jitter);
            set!(target.loss_prob, src.loss_prob);
        }

        set!(s.arrival_epsilon, station.arrival_epsilon);
        set!(s.stale_timeout, station.stale_timeout);
        if let Some(r) = station.smoothing_rate {
            s.smoothing_rate = match r {
                Rate::Camera => SmoothingRate::Camera,
                Rate::Command => SmoothingRate::Command,
            };
        }
        if let Some(a) = station.altitude_source {
            s.altitude_source = match a {
                Altitude::Reported => AltitudeSource::Reported,
                Altitude::Markers => AltitudeSource::Markers,
            };
        }

        let f = &mut s.smoothing;
        factors(&mut f.d, smoothing.gamma_d, smoothing.lambda_d);
        factors(&mut f.alpha, smoothing.gamma_alpha, smoothing.lambda_alpha);
        factors(&mut f.x_rc, smoothing.gamma_x_rc, smoothing.lambda_x_rc);
        factors(&mut f.y_rc, smoothing.gamma_y_rc, smoothing.lambda_y_rc);
        factors(&mut f.altitude, smoothing.gamma_z, smoothing.lambda_z);

        s.clicks = click
            .into_iter()
            .map(|c| ScriptedClick {
                t: c.t,
                pixel: PixelPoint::new(c.x_px, c.y_px),
            })
            .collect();
        s
    }
}

/// Parses and validates scenario text.
pub fn load_scenario(text: &str) -> Result<Scenario, ConfigError> {
    let file: File = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let s = file.into_scenario();
    s.validate()?;
    Ok(s)
}

pub fn load_scenario_file(path: &Path) -> Result<Scenario, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    load_scenario(&text)
}
