//! File formats, the operator protocol, the live service and headless runs
//! around the `agc-core` simulator.

pub mod config;
pub mod protocol;
pub mod serve;
pub mod summary;
pub mod telemetry_csv;

use std::sync::atomic::{AtomicBool, Ordering};

use agc_core::engine::Simulation;
use agc_core::scenario::Scenario;
use agc_core::telemetry::TelemetryFrame;

/// Runs a scenario to its end, or until `stop` is raised.
pub fn run_headless(scenario: Scenario, stop: &AtomicBool) -> agc_core::Result<Vec<TelemetryFrame>> {
    let mut sim = Simulation::new(scenario)?;
    while !sim.is_finished() && !stop.load(Ordering::Relaxed) {
        sim.step()?;
    }
    Ok(sim.into_history())
}
