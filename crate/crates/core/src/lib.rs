//! Simulation core for a cooperative air-ground inspection loop.
//!
//! A quadrotor hovers over a ground robot and watches two colored markers on
//! it through a down-facing pinhole camera. A ground station turns the marker
//! pixels into a distance and steering angle toward an operator-selected
//! waypoint, smooths them, and streams commands to the robot at 50 Hz. The
//! same pixels drive a PD visual-servo law that keeps the robot centered in
//! the image.
//!
//! Everything here is `no_std` (with `alloc`) and deterministic: a scenario
//! plus a seed fixes every output bit. File formats, the operator protocol and
//! the command line live in the `agc-sim` companion crate.
//!
//! Module map:
//! - [`camera`]: pinhole projection, backprojection, altitude from the marker pair
//! - [`perception`]: synthetic marker observations and pose estimation
//! - [`smoothing`]: double exponential smoothing of the measurement channels
//! - [`ugv`]: unicycle kinematics and the waypoint controller
//! - [`uav`]: thrust-orientation dynamics, visual-servo PD law, attitude inner loop
//! - [`netlink`]: lossy, delayed in-order links
//! - [`station`]: waypoint management, command ticks, arrival detection
//! - [`engine`]: scenario, fixed-step scheduler, telemetry

#![no_std]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod angle;
pub mod camera;
pub mod engine;
mod error;
pub mod netlink;
pub mod perception;
pub mod rng;
pub mod scenario;
pub mod smoothing;
pub mod station;
pub mod telemetry;
pub mod uav;
pub mod ugv;

pub use error::{Error, Result};
