//! Fixed-step scheduler for the closed loop.
//!
//! Each step at time `t` runs, in order:
//! 1. scripted clicks due by `t`;
//! 2. a camera frame on frame ticks, sent over the video link;
//! 3. the station absorbing whatever the video link delivers;
//! 4. a station command on 20 ms ticks, sent over the command link;
//! 5. the robot applying the newest command and integrating;
//! 6. the UAV servo and inner loop integrating;
//! 7. a telemetry frame stamped `t + dt`.
//!
//! Time is kept as an integer step count; `t` is always `step·dt`.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::camera::PixelPoint;
use crate::netlink::{Channel, ChannelParams, CommandMsg, MeasurementMsg};
use crate::perception::{observe, CameraPose, MarkerObservation};
use crate::rng::{self, SimRng};
use crate::scenario::{Scenario, ScriptedClick, COMMAND_PERIOD_US};
use crate::station::{MissionState, StationEvent, WaypointMsg};
use crate::telemetry::TelemetryFrame;
use crate::uav::{self, ServoTracker, UavState};
use crate::ugv::{self, UgvState};
use crate::{Error, Result};

/// Simulated time as an integer step count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimClock {
    pub step_index: u64,
    pub dt_us: u64,
}

impl SimClock {
    pub fn new(dt_us: u64) -> Self {
        Self { step_index: 0, dt_us }
    }

    pub fn micros(&self) -> u64 {
        self.step_index * self.dt_us
    }

    pub fn t(&self) -> f64 {
        self.micros() as f64 / 1e6
    }

    pub fn dt(&self) -> f64 {
        self.dt_us as f64 / 1e6
    }

    pub fn advance(&mut self) {
        self.step_index += 1;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    WaypointSet(WaypointMsg),
    WaypointReached { id: u64, t: f64 },
    FrameExit { t: f64 },
    StalePose { t: f64 },
    ClickRejected { t: f64, pixel: PixelPoint, error: Error },
}

impl From<StationEvent> for Event {
    fn from(e: StationEvent) -> Self {
        match e {
            StationEvent::WaypointSet(w) => Event::WaypointSet(w),
            StationEvent::WaypointReached { id, t } => Event::WaypointReached { id, t },
            StationEvent::FrameExit { t } => Event::FrameExit { t },
            StationEvent::StalePose { t } => Event::StalePose { t },
        }
    }
}

/// A link that is either simulated or a direct hand-off.
#[derive(Debug, Clone)]
enum Link<T> {
    Direct(Vec<T>),
    Simulated(Channel<T>),
}

impl<T> Link<T> {
    fn new(params: ChannelParams, bypass: bool, rng: SimRng) -> Self {
        if bypass {
            Link::Direct(Vec::new())
        } else {
            Link::Simulated(Channel::new(params, rng))
        }
    }

    fn send(&mut self, payload: T, now: f64) -> Result<()> {
        match self {
            Link::Direct(q) => {
                q.push(payload);
                Ok(())
            }
            Link::Simulated(c) => c.send(payload, now).map(|_| ()),
        }
    }

    fn poll(&mut self, now: f64) -> Vec<T> {
        match self {
            Link::Direct(q) => core::mem::take(q),
            Link::Simulated(c) => c.poll(now),
        }
    }
}

/// Runtime-adjustable parameters.
pub const TUNABLE: &[&str] = &[
    "K",
    "u_max",
    "r_max",
    "K1",
    "K2",
    "tau_att",
    "pixel_stddev",
    "dropout_prob",
    "arrival_epsilon",
];

#[derive(Debug, Clone)]
pub struct Simulation {
    scenario: Scenario,
    clock: SimClock,
    frame_period_us: u64,
    total_steps: u64,
    ugv: UgvState,
    uav: UavState,
    station: MissionState,
    video: Link<MeasurementMsg>,
    command: Link<CommandMsg>,
    noise_rng: SimRng,
    servo: ServoTracker,
    last_servo_t: Option<f64>,
    attitude_cmd: (f64, f64),
    last_command: Option<(CommandMsg, f64)>,
    latest_obs: Option<MarkerObservation>,
    clicks: VecDeque<ScriptedClick>,
    record: bool,
    history: Vec<TelemetryFrame>,
}

impl Simulation {
    pub fn new(scenario: Scenario) -> Result<Self> {
        scenario.validate()?;
        let dt_us = scenario.dt_us()?;
        let frame_period_us = scenario.frame_period_us()?;
        let total_steps = scenario.steps()?;
        let seed = scenario.seed;
        let mut clicks: Vec<ScriptedClick> = scenario.clicks.clone();
        clicks.sort_by(|a, b| a.t.total_cmp(&b.t));
        let station = MissionState::new(scenario.station_config(), frame_period_us as f64 / 1e6);
        Ok(Self {
            clock: SimClock::new(dt_us),
            frame_period_us,
            total_steps,
            ugv: UgvState::at(scenario.ugv_x, scenario.ugv_y, scenario.ugv_heading),
            uav: UavState::hovering(scenario.uav_x, scenario.uav_y, scenario.uav_z, &scenario.uav),
            station,
            video: Link::new(scenario.video_link, scenario.bypass_links, rng::stream(seed, rng::VIDEO_LINK)),
            command: Link::new(scenario.command_link, scenario.bypass_links, rng::stream(seed, rng::COMMAND_LINK)),
            noise_rng: rng::stream(seed, rng::PERCEPTION),
            servo: ServoTracker::default(),
            last_servo_t: None,
            attitude_cmd: (0.0, 0.0),
            last_command: None,
            latest_obs: None,
            clicks: clicks.into(),
            record: true,
            history: Vec::new(),
            scenario,
        })
    }

    /// Keep (default) or skip the in-memory telemetry history.
    pub fn set_recording(&mut self, record: bool) {
        self.record = record;
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn clock(&self) -> SimClock {
        self.clock
    }

    pub fn t(&self) -> f64 {
        self.clock.t()
    }

    pub fn is_finished(&self) -> bool {
        self.clock.step_index >= self.total_steps
    }

    pub fn ugv(&self) -> &UgvState {
        &self.ugv
    }

    pub fn uav(&self) -> &UavState {
        &self.uav
    }

    pub fn station(&self) -> &MissionState {
        &self.station
    }

    pub fn history(&self) -> &[TelemetryFrame] {
        &self.history
    }

    pub fn into_history(self) -> Vec<TelemetryFrame> {
        self.history
    }

    pub fn last_frame(&self) -> Option<&TelemetryFrame> {
        self.history.last()
    }

    /// Operator click at the current simulated time.
    pub fn click(&mut self, pixel: PixelPoint) -> Result<WaypointMsg> {
        self.station.handle_click(pixel, self.clock.t())
    }

    /// Rebuilds the simulation from its scenario.
    pub fn reset(&mut self) -> Result<()> {
        let record = self.record;
        *self = Simulation::new(self.scenario.clone())?;
        self.record = record;
        Ok(())
    }

    /// Changes one of the [`TUNABLE`] parameters.
    pub fn set_param(&mut self, name: &str, value: f64) -> Result<()> {
        let mut s = self.scenario.clone();
        match name {
            "K" => s.ugv.gain = value,
            "u_max" => s.ugv.u_max = value,
            "r_max" => s.ugv.r_max = value,
            "K1" => s.uav.k1 = value,
            "K2" => s.uav.k2 = value,
            "tau_att" => s.uav.tau_att = value,
            "pixel_stddev" => s.noise.pixel_stddev = value,
            "dropout_prob" => s.noise.dropout_prob = value,
            "arrival_epsilon" => s.arrival_epsilon = value,
            _ => return Err(Error::UnknownParameter),
        }
        s.validate()?;
        if name == "arrival_epsilon" {
            self.station.set_arrival_epsilon(value);
        }
        self.scenario = s;
        Ok(())
    }

    /// Advances one step and returns the events it produced.
    pub fn step(&mut self) -> Result<Vec<Event>> {
        let mut events = Vec::new();
        let mut station_events = Vec::new();
        let now_us = self.clock.micros();
        let t = self.clock.t();
        let dt = self.clock.dt();
        let sc = &self.scenario;

        while self.clicks.front().is_some_and(|c| c.t <= t) {
            if let Some(c) = self.clicks.pop_front() {
                match self.station.handle_click(c.pixel, t) {
                    Ok(w) => events.push(Event::WaypointSet(w)),
                    Err(error) => events.push(Event::ClickRejected { t, pixel: c.pixel, error }),
                }
            }
        }

        if now_us.is_multiple_of(self.frame_period_us) {
            let pose = CameraPose::from(&self.uav);
            let obs = observe(
                &self.ugv,
                sc.ugv.marker_gap,
                &pose,
                &sc.camera,
                &sc.noise,
                &mut self.noise_rng,
                t,
                sc.tilt_projection,
            )?;
            self.latest_obs = Some(obs);
            self.video.send(MeasurementMsg { t_sent: t, obs, camera: pose }, t)?;
        }

        for msg in self.video.poll(t) {
            self.station.on_measurement(msg, &mut station_events);
        }
        if let Some(sample) = self.station.servo_sample() {
            if self.last_servo_t != Some(sample.t) {
                self.last_servo_t = Some(sample.t);
                let e = uav::servo_error(
                    &sample.rc,
                    &sample.trend,
                    sample.sample_period,
                    sample.z,
                    &sc.camera,
                    sc.uav.servo_units,
                )?;
                self.servo.update(e, t);
            }
        }

        let mut sent = None;
        if now_us.is_multiple_of(COMMAND_PERIOD_US) {
            if let Some(cmd) = self.station.command_tick(t, &mut station_events) {
                self.command.send(cmd, t)?;
                sent = Some(cmd);
            }
        }
        events.extend(station_events.into_iter().map(Event::from));

        if let Some(cmd) = self.command.poll(t).pop() {
            self.last_command = Some((cmd, t));
        }
        let (u_cmd, r_cmd) = match self.last_command {
            Some((cmd, at)) if t - at <= sc.command_timeout => ugv::control(cmd.d, cmd.alpha, &sc.ugv),
            _ => (0.0, 0.0),
        };
        self.ugv = ugv::step(&self.ugv, u_cmd, r_cmd, sc.ugv.actuator_tau, dt)?;

        let (err, stale) = self.servo.current(t, sc.stale_timeout);
        self.attitude_cmd = if stale {
            (0.0, 0.0)
        } else {
            let (ux, uy) = uav::servo_control(&err, &sc.uav, self.uav.thrust);
            uav::desired_angles(ux, uy, sc.uav.angle_max)
        };
        self.uav = uav::inner_loop_step(&self.uav, self.attitude_cmd.0, self.attitude_cmd.1, &sc.uav, dt)?;

        self.clock.advance();
        if self.record {
            let frame = self.snapshot(sent, stale);
            self.history.push(frame);
        }
        Ok(events)
    }

    /// Steps until the scenario duration, collecting events.
    pub fn run_to_end(&mut self) -> Result<Vec<Event>> {
        let mut events = Vec::new();
        while !self.is_finished() {
            events.extend(self.step()?);
        }
        Ok(events)
    }

    /// Telemetry for the current state.
    pub fn snapshot(&self, sent: Option<CommandMsg>, servo_stale: bool) -> TelemetryFrame {
        let gap = self.scenario.ugv.marker_gap;
        let wp = self.station.active_waypoint().copied();
        let truth = wp.map(|w| {
            let (d, a) = self.ugv.range_bearing_to(w.world.x, w.world.y);
            let (hx, hy) = self.ugv.head(gap);
            (d, a, libm::hypot(w.world.x - hx, w.world.y - hy))
        });
        let raw = self.station.raw_pose().copied();
        let smooth = self.station.pose().copied();
        let servo = self.station.servo_sample();
        let pp = self.scenario.camera.principal_point();
        let obs = self.latest_obs;
        TelemetryFrame {
            t: self.clock.t(),
            step: self.clock.step_index,
            ugv_x: self.ugv.x,
            ugv_y: self.ugv.y,
            ugv_heading: self.ugv.heading,
            ugv_u: self.ugv.u,
            ugv_r: self.ugv.r,
            uav_x: self.uav.x,
            uav_y: self.uav.y,
            uav_z: self.uav.z,
            uav_vx: self.uav.vx,
            uav_vy: self.uav.vy,
            uav_vz: self.uav.vz,
            uav_roll: self.uav.roll,
            uav_pitch: self.uav.pitch,
            uav_yaw: self.uav.yaw,
            uav_thrust: self.uav.thrust,
            roll_d: self.attitude_cmd.0,
            pitch_d: self.attitude_cmd.1,
            rc_x_px: obs.map(|o| o.rc.x),
            rc_y_px: obs.map(|o| o.rc.y),
            rh_x_px: obs.map(|o| o.rh.x),
            rh_y_px: obs.map(|o| o.rh.y),
            obs_valid: obs.is_some_and(|o| o.valid),
            in_frame: obs.is_some_and(|o| o.in_frame),
            z_est: self.station.altitude(),
            d_raw: raw.map(|p| p.d),
            alpha_raw: raw.map(|p| p.alpha),
            d_smooth: smooth.map(|p| p.d),
            alpha_smooth: smooth.map(|p| p.alpha),
            d_true: truth.map(|x| x.0),
            alpha_true: truth.map(|x| x.1),
            head_dist: truth.map(|x| x.2),
            e_x_px: servo.map(|s| s.rc.x - pp.x),
            e_y_px: servo.map(|s| s.rc.y - pp.y),
            e_x: self.ugv.x - self.uav.x,
            e_y: self.ugv.y - self.uav.y,
            servo_stale,
            waypoint_id: wp.map(|w| w.id),
            waypoint_x: wp.map(|w| w.world.x),
            waypoint_y: wp.map(|w| w.world.y),
            cmd_sent: sent.is_some(),
            cmd_d: sent.map(|c| c.d),
            cmd_alpha: sent.map(|c| c.alpha),
        }
    }
}

/// Runs a scenario headless and returns its telemetry.
pub fn run(scenario: Scenario) -> Result<Vec<TelemetryFrame>> {
    let mut sim = Simulation::new(scenario)?;
    sim.run_to_end()?;
    Ok(sim.into_history())
}
