//! Deterministic fixed-timestep simulation loop wiring every module
//! together, trace recording, and outcome summarization.
//!
//! Per-tick update order is fixed: pedestrians step, safety messages are
//! broadcast and transported, the vehicle's knowledge is refreshed (latest
//! decoded message per pedestrian; optionally onboard line-of-sight), risk
//! is assessed and latched into a brake command, the vehicle steps, contact
//! and line-of-sight are observed and the tick is recorded. A run ends at
//! first contact, one second after the vehicle stops, or at the horizon.

mod config;

pub use config::{
    load_config, load_config_str, ConfigError, PedestrianConfig, ProfileSegmentConfig,
    RectConfig, ScenarioConfig, SensorConfig, VehicleConfig,
};

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{
    boundary_separation, detect_collision, onboard_detects, severity_to_decel, step_pedestrian,
    step_vehicle,
};
use crate::geometry::{Pose2, Vec2};
use crate::risk::{assess, latch_update, RiskAssessment, Severity, SeverityLatch};
use crate::v2p::{decode_psm, Broadcaster, SimChannel};

/// Vehicle speed under which the run is considered stopped, m/s.
pub const STOP_SPEED: f64 = 0.01;
/// Seconds the vehicle must remain stopped before the run ends.
pub const STOP_HOLD: f64 = 1.0;

/// One simulation tick as written to the trace. `t` is exactly `tick * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub veh_x: f64,
    pub veh_y: f64,
    /// Radians (file boundaries that speak degrees convert explicitly).
    pub veh_heading: f64,
    pub veh_speed: f64,
    pub peds: Vec<PedRecord>,
    /// Seconds, +inf rendered as `inf`; taken from the most critical
    /// assessment of the tick.
    pub ttz_vehicle: f64,
    pub ttz_pedestrian: f64,
    pub dangerous: bool,
    /// Latched severity actually driving the brake command, 0-3.
    pub severity: u8,
    pub commanded_decel: f64,
    pub actual_decel: f64,
    /// Cumulative safety messages received up to and including this tick.
    pub psm_rx: u64,
    /// Ground-truth onboard line-of-sight to any pedestrian.
    pub los: bool,
    pub collided: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PedRecord {
    pub x: f64,
    pub y: f64,
    pub speed: f64,
}

/// Folded scenario result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub collided: bool,
    pub stopped: bool,
    /// Minimum vehicle/pedestrian boundary distance over the run, meters.
    pub min_separation: f64,
    pub max_severity: u8,
    pub first_brake_time: Option<f64>,
    pub stop_time: Option<f64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum TraceError {
    #[error("empty trace")]
    EmptyTrace,
}

/// Runs a validated scenario to completion. Fully deterministic for a fixed
/// config: all randomness flows from `cfg.seed` (or the channel's own seed
/// when pinned) through one seeded generator.
pub fn run(cfg: &ScenarioConfig) -> (Vec<TraceRecord>, Outcome) {
    let dt = cfg.dt;
    let mut vehicle = cfg.initial_vehicle();
    let mut peds = cfg.initial_pedestrians();
    let sensor = cfg.sensor_model();
    let mut channel = SimChannel::new(&cfg.channel, cfg.seed);
    let mut broadcasters: Vec<Broadcaster> = cfg
        .pedestrians
        .iter()
        .map(|p| Broadcaster::new(p.source_id, cfg.channel.broadcast_period))
        .collect();
    let mut knowledge: HashMap<u8, Pose2> = HashMap::new();
    let mut latch = SeverityLatch::default();
    let mut psm_rx_total: u64 = 0;
    let mut stopped_hold = 0.0f64;

    let n_ticks = ((cfg.horizon / dt).round() as u64).max(1);
    let mut records: Vec<TraceRecord> = Vec::with_capacity(n_ticks as usize);

    for tick in 0..n_ticks {
        let t = tick as f64 * dt;

        for p in peds.iter_mut() {
            *p = step_pedestrian(p, t, dt);
        }

        if cfg.v2p_enabled {
            for (p, bc) in peds.iter().zip(broadcasters.iter_mut()) {
                bc.tick(&p.pose, t, tick, dt, &mut channel);
            }
            for frame in channel.poll(tick) {
                if let Ok(msg) = decode_psm(frame.as_bytes()) {
                    knowledge.insert(msg.source_id, msg.to_pose());
                    psm_rx_total += 1;
                }
            }
        }

        // Knowledge priority: latest decoded message, else (when enabled)
        // onboard ground truth, else the pedestrian is unknown this tick.
        let mut worst: Option<RiskAssessment> = None;
        let mut max_new = Severity::None;
        for (p, pc) in peds.iter().zip(cfg.pedestrians.iter()) {
            let known = if cfg.v2p_enabled && knowledge.contains_key(&pc.source_id) {
                Some(knowledge[&pc.source_id])
            } else if cfg.react_to_onboard && onboard_detects(&vehicle, p, &sensor) {
                Some(p.pose)
            } else {
                None
            };
            if let Some(kp) = known {
                let a = assess(&vehicle.pose, &kp, &cfg.risk);
                max_new = max_new.max(a.severity);
                worst = Some(match worst {
                    None => a,
                    Some(w) => more_critical(w, a),
                });
            }
        }

        latch = latch_update(latch, max_new, dt);
        vehicle.commanded_decel = severity_to_decel(latch.current, &cfg.vehicle.brake);

        vehicle = step_vehicle(&vehicle, dt);

        let collided = peds.iter().any(|p| detect_collision(&vehicle, p));
        let los = peds.iter().any(|p| onboard_detects(&vehicle, p, &sensor));
        let (ttz_v, ttz_p, dangerous) = match worst {
            Some(a) => (a.ttz_vehicle, a.ttz_pedestrian, a.dangerous),
            None => (f64::INFINITY, f64::INFINITY, false),
        };

        records.push(TraceRecord {
            t,
            veh_x: vehicle.pose.position.x,
            veh_y: vehicle.pose.position.y,
            veh_heading: vehicle.pose.heading,
            veh_speed: vehicle.pose.speed,
            peds: peds
                .iter()
                .map(|p| PedRecord {
                    x: p.pose.position.x,
                    y: p.pose.position.y,
                    speed: p.pose.speed,
                })
                .collect(),
            ttz_vehicle: ttz_v,
            ttz_pedestrian: ttz_p,
            dangerous,
            severity: latch.current.rank(),
            commanded_decel: vehicle.commanded_decel,
            actual_decel: vehicle.actual_decel,
            psm_rx: psm_rx_total,
            los,
            collided,
        });

        if collided {
            break;
        }
        if vehicle.pose.speed < STOP_SPEED {
            stopped_hold += dt;
            if stopped_hold >= STOP_HOLD - 1e-9 {
                break;
            }
        } else {
            stopped_hold = 0.0;
        }
    }

    let outcome = summarize(&records, cfg).expect("run produces at least one record");
    (records, outcome)
}

/// Orders assessments by severity, then closer vehicle TTZ.
fn more_critical(a: RiskAssessment, b: RiskAssessment) -> RiskAssessment {
    if b.severity > a.severity || (b.severity == a.severity && b.ttz_vehicle < a.ttz_vehicle) {
        b
    } else {
        a
    }
}

/// Folds a trace into its outcome. Separation is recomputed from recorded
/// poses with the config's footprint and radii.
pub fn summarize(records: &[TraceRecord], cfg: &ScenarioConfig) -> Result<Outcome, TraceError> {
    let last = records.last().ok_or(TraceError::EmptyTrace)?;
    let collided = records.iter().any(|r| r.collided);
    let mut min_separation = f64::INFINITY;
    for r in records {
        let veh_pose = Pose2::new(Vec2::new(r.veh_x, r.veh_y), r.veh_heading, r.veh_speed);
        for (p, pc) in r.peds.iter().zip(cfg.pedestrians.iter()) {
            let sep = boundary_separation(
                &veh_pose,
                cfg.vehicle.footprint_length,
                cfg.vehicle.footprint_width,
                Vec2::new(p.x, p.y),
                pc.radius,
            );
            min_separation = min_separation.min(sep);
        }
    }
    Ok(Outcome {
        collided,
        stopped: !collided && last.veh_speed < STOP_SPEED,
        min_separation,
        max_severity: records.iter().map(|r| r.severity).max().unwrap_or(0),
        first_brake_time: records.iter().find(|r| r.commanded_decel > 0.0).map(|r| r.t),
        stop_time: if collided {
            None
        } else {
            records.iter().find(|r| r.veh_speed < STOP_SPEED).map(|r| r.t)
        },
    })
}

/// Fixed-format float: nine significant digits, `inf` sentinel. Identical
/// runs therefore serialize byte-identically.
pub fn fmt_sig9(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0.00000000".into();
    }
    // exact decimal exponent via the scientific formatter
    let sci = format!("{x:e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    let decimals = (8 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Writes the trace CSV; returns the byte count. Bool columns are 0/1.
/// Pedestrians beyond the first append `pedK_x,pedK_y,pedK_speed` columns.
pub fn write_trace<W: Write>(records: &[TraceRecord], mut w: W) -> std::io::Result<u64> {
    let n_peds = records.first().map_or(1, |r| r.peds.len());
    let mut out = String::new();
    out.push_str("t,veh_x,veh_y,veh_heading,veh_speed,ped0_x,ped0_y,ped0_speed,ttz_veh,ttz_ped,dangerous,severity,cmd_decel,act_decel,psm_rx,los,collided");
    for k in 1..n_peds {
        out.push_str(&format!(",ped{k}_x,ped{k}_y,ped{k}_speed"));
    }
    out.push('\n');
    for r in records {
        let p0 = &r.peds[0];
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_sig9(r.t),
            fmt_sig9(r.veh_x),
            fmt_sig9(r.veh_y),
            fmt_sig9(r.veh_heading),
            fmt_sig9(r.veh_speed),
            fmt_sig9(p0.x),
            fmt_sig9(p0.y),
            fmt_sig9(p0.speed),
            fmt_sig9(r.ttz_vehicle),
            fmt_sig9(r.ttz_pedestrian),
            u8::from(r.dangerous),
            r.severity,
            fmt_sig9(r.commanded_decel),
            fmt_sig9(r.actual_decel),
            r.psm_rx,
            u8::from(r.los),
            u8::from(r.collided),
        ));
        for p in &r.peds[1..] {
            out.push_str(&format!(",{},{},{}", fmt_sig9(p.x), fmt_sig9(p.y), fmt_sig9(p.speed)));
        }
        out.push('\n');
    }
    w.write_all(out.as_bytes())?;
    Ok(out.len() as u64)
}
