use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use agc_core::scenario::Scenario;
use agc_core::telemetry::TelemetryFrame;
use agc_sim::config::{load_scenario_file, ConfigError};
use agc_sim::serve::{ServeOptions, Server};
use agc_sim::{run_headless, summary, telemetry_csv};
use anyhow::Context;
use clap::Parser;

/// Air-ground cooperation simulator: headless runs to CSV, or a live
/// station service for an operator console.
#[derive(Debug, Parser)]
#[command(name = "agc", version)]
struct Args {
    /// Scenario file (TOML); built-in defaults when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Telemetry CSV path; stdout when omitted. A `.summary.json` is written
    /// next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the scenario duration, seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Serve the operator protocol on this address instead of running headless.
    #[arg(long, value_name = "ADDR")]
    serve: Option<String>,
    /// Stream every n-th frame when serving.
    #[arg(long, default_value_t = 10)]
    decimate: u64,
    /// Wait for `resume` before stepping when serving.
    #[arg(long)]
    pause_on_start: bool,
    /// Simulated seconds per wall-clock second when serving; 0 = unpaced.
    #[arg(long, default_value_t = 1.0)]
    pace: f64,
}

fn load(args: &Args) -> Result<Scenario, ConfigError> {
    let mut s = match &args.scenario {
        Some(p) => load_scenario_file(p)?,
        None => Scenario::default(),
    };
    if let Some(seed) = args.seed {
        s.seed = seed;
    }
    if let Some(d) = args.duration {
        s.duration = d;
    }
    s.validate()?;
    Ok(s)
}

fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("summary.json")
}

fn write_outputs(frames: &[TelemetryFrame], out: Option<&Path>) -> anyhow::Result<()> {
    let summary = summary::summarize(frames);
    match out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            let mut w = telemetry_csv::write_all(BufWriter::new(file), frames)?;
            w.flush()?;
            let sp = summary_path(path);
            std::fs::write(&sp, serde_json::to_string_pretty(&summary)? + "\n")
                .with_context(|| format!("cannot write {}", sp.display()))?;
            print!("{summary}");
        }
        None => {
            let stdout = io::stdout();
            let mut w = telemetry_csv::write_all(BufWriter::new(stdout.lock()), frames)?;
            w.flush()?;
            eprint!("{summary}");
        }
    }
    Ok(())
}

fn run(args: &Args, scenario: Scenario, stop: Arc<AtomicBool>) -> anyhow::Result<()> {
    let frames = match &args.serve {
        Some(addr) => {
            let opts = ServeOptions {
                decimate: args.decimate,
                pace: args.pace,
                pause_on_start: args.pause_on_start,
            };
            let server = Server::bind(addr, scenario, opts)?;
            eprintln!("serving on {}", server.local_addr()?);
            server.run(stop)?
        }
        None => run_headless(scenario, &stop)?,
    };
    if args.serve.is_some() && args.out.is_none() {
        // nothing asked for the recording
        return Ok(());
    }
    write_outputs(&frames, args.out.as_deref())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let scenario = match load(&args) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("agc: {e}");
            return ExitCode::from(2);
        }
    };
    let stop = Arc::new(AtomicBool::new(false));
    {
        let stop = stop.clone();
        if let Err(e) = ctrlc::set_handler(move || stop.store(true, Ordering::SeqCst)) {
            eprintln!("agc: cannot install interrupt handler: {e}");
        }
    }
    match run(&args, scenario, stop.clone()) {
        Ok(()) if stop.load(Ordering::SeqCst) => ExitCode::from(130),
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("agc: {e:#}");
            ExitCode::FAILURE
        }
    }
}
