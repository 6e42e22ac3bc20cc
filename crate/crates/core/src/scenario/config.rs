//! Declarative scenario configuration: JSON document, documented defaults,
//! and invariant validation. Angles in the file are degrees CCW from +x;
//! everything becomes radians on the way in.

use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{
    BrakeMap, MotionProfile, PedestrianState, ProfileSegment, SensorModel, VehicleState,
};
use crate::geometry::{Pose2, Rect, Vec2};
use crate::risk::RiskConfig;
use crate::v2p::ChannelConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    /// Syntactic failure, with serde_json's line/column location.
    #[error("config parse error: {0}")]
    Parse(String),
    /// A well-formed document violating an invariant, named here.
    #[error("config validation error: {0}")]
    Validation(String),
    #[error("config read error: {0}")]
    Io(#[from] std::io::Error),
}

/// Top-level scenario document. Only `horizon`, `vehicle` and `pedestrians`
/// are required; everything else carries the documented defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Simulation timestep, seconds, in (0, 0.1].
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Simulation horizon, seconds.
    pub horizon: f64,
    /// Master seed; all scenario randomness derives from it.
    #[serde(default)]
    pub seed: u64,
    /// Whether pedestrian safety messages flow to the vehicle.
    #[serde(default = "default_true")]
    pub v2p_enabled: bool,
    /// Whether the risk stack may act on onboard line-of-sight detections
    /// when no safety message is available for a pedestrian. Off by default:
    /// the baseline vehicle does not react to late sensor pickups.
    #[serde(default)]
    pub react_to_onboard: bool,
    pub vehicle: VehicleConfig,
    pub pedestrians: Vec<PedestrianConfig>,
    /// Sight-blocking rectangles (parked vehicles, street furniture).
    #[serde(default)]
    pub occluders: Vec<RectConfig>,
    #[serde(default)]
    pub risk: RiskConfig,
    #[serde(default)]
    pub channel: ChannelConfig,
    #[serde(default)]
    pub sensor: SensorConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleConfig {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub heading_deg: f64,
    /// Held exactly until braking engages; the plant has no speed controller.
    pub cruise_speed: f64,
    #[serde(default)]
    pub brake: BrakeMap,
    #[serde(default = "default_footprint_length")]
    pub footprint_length: f64,
    #[serde(default = "default_footprint_width")]
    pub footprint_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PedestrianConfig {
    /// Wire identity for this pedestrian's safety messages; unique per scenario.
    pub source_id: u8,
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub heading_deg: f64,
    #[serde(default = "default_ped_radius")]
    pub radius: f64,
    /// Piecewise-constant (start_time, speed, heading) schedule.
    pub profile: Vec<ProfileSegmentConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSegmentConfig {
    pub start_time: f64,
    pub speed: f64,
    pub heading_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectConfig {
    pub x: f64,
    pub y: f64,
    pub half_extent_x: f64,
    pub half_extent_y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    /// Onboard sensor range, meters.
    pub range: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig { range: 60.0 }
    }
}

fn default_dt() -> f64 {
    0.01
}

fn default_true() -> bool {
    true
}

fn default_footprint_length() -> f64 {
    4.7
}

fn default_footprint_width() -> f64 {
    1.8
}

fn default_ped_radius() -> f64 {
    0.3
}

/// Parses and validates a scenario document.
pub fn load_config<R: Read>(source: R) -> Result<ScenarioConfig, ConfigError> {
    let cfg: ScenarioConfig =
        serde_json::from_reader(source).map_err(|e| ConfigError::Parse(e.to_string()))?;
    cfg.validate().map_err(ConfigError::Validation)?;
    Ok(cfg)
}

pub fn load_config_str(source: &str) -> Result<ScenarioConfig, ConfigError> {
    load_config(source.as_bytes())
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.dt > 0.0 && self.dt <= 0.1) {
            return Err(format!("dt must lie in (0, 0.1], got {}", self.dt));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(format!("horizon must be finite and > 0, got {}", self.horizon));
        }
        if self.pedestrians.is_empty() {
            return Err("at least one pedestrian is required".into());
        }
        let mut ids: Vec<u8> = self.pedestrians.iter().map(|p| p.source_id).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != self.pedestrians.len() {
            return Err("pedestrian source_ids must be unique".into());
        }
        for v in [self.vehicle.x, self.vehicle.y, self.vehicle.heading_deg] {
            if !v.is_finite() {
                return Err("vehicle pose fields must be finite".into());
            }
        }
        if !(self.vehicle.cruise_speed >= 0.0 && self.vehicle.cruise_speed.is_finite()) {
            return Err("vehicle.cruise_speed must be finite and >= 0".into());
        }
        if !(self.vehicle.footprint_length > 0.0 && self.vehicle.footprint_width > 0.0) {
            return Err("vehicle footprint dimensions must be > 0".into());
        }
        self.vehicle.brake.validate()?;
        for (i, p) in self.pedestrians.iter().enumerate() {
            if !(p.radius > 0.0 && p.radius.is_finite()) {
                return Err(format!("pedestrians[{i}].radius must be > 0"));
            }
            for v in [p.x, p.y, p.heading_deg] {
                if !v.is_finite() {
                    return Err(format!("pedestrians[{i}] pose fields must be finite"));
                }
            }
            p.motion_profile()
                .validate()
                .map_err(|e| format!("pedestrians[{i}]: {e}"))?;
        }
        for (i, r) in self.occluders.iter().enumerate() {
            if !(r.half_extent_x > 0.0 && r.half_extent_y > 0.0) {
                return Err(format!("occluders[{i}] half extents must be > 0"));
            }
            if !(r.x.is_finite() && r.y.is_finite()) {
                return Err(format!("occluders[{i}] center must be finite"));
            }
        }
        if !(self.sensor.range > 0.0 && self.sensor.range.is_finite()) {
            return Err("sensor.range must be finite and > 0".into());
        }
        self.risk.validate()?;
        self.channel.validate()?;
        Ok(())
    }

    pub fn initial_vehicle(&self) -> VehicleState {
        let pose = Pose2::new(
            Vec2::new(self.vehicle.x, self.vehicle.y),
            self.vehicle.heading_deg.to_radians(),
            self.vehicle.cruise_speed,
        );
        VehicleState::new(
            pose,
            self.vehicle.brake.actuator_tau,
            self.vehicle.footprint_length,
            self.vehicle.footprint_width,
        )
    }

    pub fn initial_pedestrians(&self) -> Vec<PedestrianState> {
        self.pedestrians
            .iter()
            .map(|p| {
                PedestrianState::new(
                    Pose2::new(Vec2::new(p.x, p.y), p.heading_deg.to_radians(), 0.0),
                    p.radius,
                    p.motion_profile(),
                )
            })
            .collect()
    }

    pub fn sensor_model(&self) -> SensorModel {
        SensorModel {
            range: self.sensor.range,
            occluders: self.occluders.iter().map(RectConfig::to_rect).collect(),
        }
    }
}

impl PedestrianConfig {
    pub fn motion_profile(&self) -> MotionProfile {
        MotionProfile {
            segments: self
                .profile
                .iter()
                .map(|s| ProfileSegment {
                    start_time: s.start_time,
                    speed: s.speed,
                    heading: s.heading_deg.to_radians(),
                })
                .collect(),
        }
    }
}

impl RectConfig {
    pub fn to_rect(&self) -> Rect {
        Rect::new(Vec2::new(self.x, self.y), self.half_extent_x, self.half_extent_y)
    }
}
