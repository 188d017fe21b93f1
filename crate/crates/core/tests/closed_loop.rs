use agc_core::camera::PixelPoint;
use agc_core::engine::{run, Event, Simulation};
use agc_core::netlink::ChannelParams;
use agc_core::scenario::{Scenario, ScriptedClick};
use agc_core::telemetry::TelemetryFrame;

fn overhead() -> Scenario {
    Scenario {
        ugv_x: 0.0,
        ugv_y: 0.0,
        uav_x: 0.0,
        uav_y: 0.0,
        uav_z: 3.0,
        duration: 20.0,
        ..Scenario::default()
    }
}

fn at(h: &[TelemetryFrame], t: f64) -> &TelemetryFrame {
    h.iter().find(|f| (f.t - t).abs() < 1e-9).unwrap()
}

#[test]
fn same_seed_same_run_different_seed_different_run() {
    let mut s = overhead();
    s.noise.pixel_stddev = 2.0;
    s.noise.dropout_prob = 0.05;
    s.video_link.latency_jitter = 0.02;
    s.video_link.loss_prob = 0.05;
    s.clicks.push(ScriptedClick { t: 0.5, pixel: PixelPoint::new(200.0, 50.0) });
    let a = run(s.clone()).unwrap();
    assert_eq!(a, run(s.clone()).unwrap());
    s.seed = 1;
    assert_ne!(a, run(s).unwrap());
}

#[test]
fn robot_reaches_waypoint_and_station_reports_it() {
    let mut s = overhead();
    s.duration = 60.0;
    s.clicks.push(ScriptedClick { t: 0.5, pixel: PixelPoint::new(250.0, 0.0) });
    let mut sim = Simulation::new(s).unwrap();
    let events = sim.run_to_end().unwrap();
    assert!(events.iter().any(|e| matches!(e, Event::WaypointSet(_))));
    let reached: Vec<_> = events.iter().filter(|e| matches!(e, Event::WaypointReached { .. })).collect();
    assert_eq!(reached.len(), 1);
    let last = sim.last_frame().unwrap();
    assert!((last.d_true.unwrap() - 0.15).abs() < 0.01);
    assert!(last.head_dist.unwrap() < 0.01);
}

#[test]
fn finer_steps_converge() {
    let mut s = overhead();
    s.duration = 10.0;
    s.video_link = ChannelParams::IDEAL;
    s.command_link = ChannelParams::IDEAL;
    s.clicks.push(ScriptedClick { t: 0.1, pixel: PixelPoint::new(200.0, 100.0) });
    let pos = |dt: f64| {
        let h = run(Scenario { dt, ..s.clone() }).unwrap();
        let f = at(&h, 10.0);
        (f.ugv_x, f.ugv_y, f.uav_x, f.uav_y)
    };
    let coarse = pos(0.002);
    let fine = pos(0.001);
    let finest = pos(0.0005);
    let diff = |a: (f64, f64, f64, f64), b: (f64, f64, f64, f64)| {
        (a.0 - b.0).abs().max((a.1 - b.1).abs()).max((a.2 - b.2).abs()).max((a.3 - b.3).abs())
    };
    let e1 = diff(coarse, finest);
    let e2 = diff(fine, finest);
    assert!(e2 < e1, "{e1} {e2}");
    assert!(e2 < 5e-3, "{e2}");
}

#[test]
fn halving_dt_shrinks_the_ugv_position_change() {
    let mut s = overhead();
    s.duration = 10.0;
    s.video_link = ChannelParams::IDEAL;
    s.command_link = ChannelParams::IDEAL;
    s.clicks.push(ScriptedClick { t: 0.1, pixel: PixelPoint::new(200.0, 100.0) });
    let pos = |dt: f64| {
        let f = *run(Scenario { dt, ..s.clone() }).unwrap().last().unwrap();
        (f.ugv_x, f.ugv_y)
    };
    let (p4, p2, p1) = (pos(0.004), pos(0.002), pos(0.001));
    let d42 = (p4.0 - p2.0).hypot(p4.1 - p2.1);
    let d21 = (p2.0 - p1.0).hypot(p2.1 - p1.1);
    // first-order integration: each halving roughly halves the change
    let ratio = d42 / d21;
    assert!((1.5..2.5).contains(&ratio), "{d42} {d21}");
    assert!(d21 < 1e-3, "{d21}");
}

#[test]
fn uav_settles_over_stationary_robot() {
    let s = Scenario {
        ugv_x: 0.6,
        ugv_y: -0.4,
        duration: 15.0,
        ..overhead()
    };
    let h = run(s).unwrap();
    let last = h.last().unwrap();
    assert!(last.e_x.abs() < 2e-3 && last.e_y.abs() < 2e-3, "{} {}", last.e_x, last.e_y);
    assert!((last.uav_z - 3.0).abs() < 1e-3);
    assert!(h.iter().all(|f| f.e_x > 0.0 && f.e_y < 0.0));
}

#[test]
fn lost_video_stops_robot_and_levels_uav() {
    let mut s = overhead();
    s.duration = 6.0;
    s.clicks.push(ScriptedClick { t: 0.5, pixel: PixelPoint::new(250.0, 0.0) });
    let mut sim = Simulation::new(s).unwrap();
    while sim.t() < 2.0 {
        sim.step().unwrap();
    }
    sim.set_param("dropout_prob", 0.999_999).unwrap();
    let events = sim.run_to_end().unwrap();
    assert!(events.iter().any(|e| matches!(e, Event::StalePose { .. })));
    let h = sim.history();
    let late = at(h, 5.0);
    assert_eq!(late.ugv_u, 0.0);
    assert!(late.servo_stale);
    assert!(late.roll_d == 0.0 && late.pitch_d == 0.0);
}

#[test]
fn robot_leaving_frame_freezes_commands() {
    // a sluggish servo and a descent shrink the footprint past the robot
    let mut s = Scenario {
        ugv_x: 1.4,
        duration: 10.0,
        ..overhead()
    };
    s.uav.z_min = 1.0;
    s.uav.z_d = 1.2;
    s.uav.k1 = 0.01;
    s.uav.k2 = 0.05;
    s.clicks.push(ScriptedClick { t: 0.1, pixel: PixelPoint::new(200.0, 0.0) });
    let mut sim = Simulation::new(s).unwrap();
    let events = sim.run_to_end().unwrap();
    let exits = events.iter().filter(|e| matches!(e, Event::FrameExit { .. })).count();
    assert_eq!(exits, 1);
    let h = sim.history();
    assert!(h.iter().any(|f| f.cmd_sent));
    assert!(!h.last().unwrap().in_frame);
    let late: Vec<_> = h.iter().filter(|f| f.t > 8.0).collect();
    assert!(late.iter().all(|f| f.ugv_u == 0.0 && !f.cmd_sent));
}

#[test]
fn reset_replays_identically() {
    let mut s = overhead();
    s.duration = 3.0;
    s.noise.pixel_stddev = 1.0;
    s.clicks.push(ScriptedClick { t: 0.2, pixel: PixelPoint::new(100.0, 0.0) });
    let mut sim = Simulation::new(s).unwrap();
    sim.run_to_end().unwrap();
    let first = sim.history().to_vec();
    sim.reset().unwrap();
    assert!(sim.history().is_empty());
    sim.run_to_end().unwrap();
    assert_eq!(first, sim.history());
}
