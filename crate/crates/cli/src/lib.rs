//! Command implementations behind the `v2psim` binary: scenario runs with
//! trace/summary output, pose-log replay through the bridge calibration,
//! deterministic parameter sweeps, and config validation.

pub mod sweep;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};

use v2psim::bridge::{calibrate, ingest_pose_log, map_pose};
use v2psim::geometry::{normalize_angle, Pose2, Vec2};
use v2psim::scenario::{fmt_sig9, load_config, run, write_trace, Outcome, ScenarioConfig};

/// Loads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let cfg = load_config(BufReader::new(file))
        .with_context(|| format!("invalid scenario {}", path.display()))?;
    Ok(cfg)
}

/// Runs one scenario, optionally writing `trace.csv` and `summary.json` into
/// `out_dir`. Returns the outcome; the caller maps `collided` to exit code 2.
pub fn cmd_run(
    scenario: &Path,
    seed_override: Option<u64>,
    out_dir: Option<&Path>,
    quiet: bool,
) -> Result<Outcome> {
    let mut cfg = load_scenario(scenario)?;
    if let Some(seed) = seed_override {
        cfg.seed = seed;
    }
    let (records, outcome) = run(&cfg);
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create {}", dir.display()))?;
        let trace_path = dir.join("trace.csv");
        let trace = File::create(&trace_path)
            .with_context(|| format!("cannot write {}", trace_path.display()))?;
        write_trace(&records, BufWriter::new(trace))?;
        let summary_path = dir.join("summary.json");
        let mut summary = File::create(&summary_path)
            .with_context(|| format!("cannot write {}", summary_path.display()))?;
        serde_json::to_writer_pretty(&mut summary, &outcome)?;
        summary.write_all(b"\n")?;
    }
    if !quiet {
        print_outcome(&outcome);
    }
    Ok(outcome)
}

pub fn print_outcome(o: &Outcome) {
    println!(
        "collided={} stopped={} min_separation={:.3} max_severity={} first_brake_time={} stop_time={}",
        o.collided,
        o.stopped,
        o.min_separation,
        o.max_severity,
        o.first_brake_time.map_or("-".into(), |t| format!("{t:.2}")),
        o.stop_time.map_or("-".into(), |t| format!("{t:.2}")),
    );
}

/// Parses an `x,y,heading_deg` origin triple.
pub fn parse_origin(s: &str) -> Result<Pose2> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        bail!("origin must be `x,y,heading_deg`, got `{s}`");
    }
    let mut v = [0.0f64; 3];
    for (i, p) in parts.iter().enumerate() {
        v[i] = p
            .trim()
            .parse()
            .with_context(|| format!("origin component `{}` is not a number", p.trim()))?;
        if !v[i].is_finite() {
            bail!("origin components must be finite");
        }
    }
    Ok(Pose2::new(Vec2::new(v[0], v[1]), v[2].to_radians(), 0.0))
}

/// Replays a pose log through the bridge calibration; emits the mapped
/// virtual-frame poses in the same CSV format as the input log.
pub fn cmd_replay(
    log: &Path,
    real_origin: Pose2,
    virtual_origin: Pose2,
    out: Option<&Path>,
    quiet: bool,
) -> Result<()> {
    let file = File::open(log).with_context(|| format!("cannot open {}", log.display()))?;
    let samples = ingest_pose_log(BufReader::new(file))
        .with_context(|| format!("invalid pose log {}", log.display()))?;
    let cal = calibrate(real_origin, virtual_origin);
    let mut text = String::from("t,x,y,heading_deg,speed\n");
    for s in &samples {
        let mapped = map_pose(&cal, &s.pose);
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_sig9(s.t),
            fmt_sig9(mapped.position.x),
            fmt_sig9(mapped.position.y),
            fmt_sig9(normalize_angle(mapped.heading).to_degrees()),
            fmt_sig9(mapped.speed),
        ));
    }
    match out {
        Some(path) => std::fs::write(path, &text)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{text}"),
    }
    if !quiet && out.is_some() {
        eprintln!("replayed {} samples", samples.len());
    }
    Ok(())
}

/// Parses and validates without running; prints the fully defaulted
/// effective config on success.
pub fn cmd_validate(scenario: &Path) -> Result<()> {
    let cfg = load_scenario(scenario)?;
    println!("{}", serde_json::to_string_pretty(&cfg)?);
    Ok(())
}
