//! Collision-risk estimation: locate the potential collision point from the
//! agents' heading rays, establish a collision zone around it, compute
//! Time-To-Zone for both agents, and grade dangerous encounters into three
//! severity levels. A small latch keeps the commanded level from chattering.

use serde::{Deserialize, Serialize};

use crate::geometry::{ray_rect_entry, ray_ray_intersect, Pose2, Rect, Vec2};

/// Seconds of continuous no-danger observations before the severity latch
/// releases.
pub const LATCH_CLEAR_HOLD: f64 = 1.0;

/// Thresholds and sizing for the risk routine. Defaults: 6m x 6m zone,
/// 1.5 s TTZ-difference threshold, severity boundaries at 2.3 s / 1.5 s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiskConfig {
    /// Half extent of the square collision zone, meters.
    pub zone_half_extent: f64,
    /// T_s: max |TTZ_vehicle - TTZ_pedestrian| for a dangerous encounter, seconds.
    pub ttz_diff_threshold: f64,
    /// Vehicle TTZ at or above this is severity 1, seconds.
    pub severity_1_2_threshold: f64,
    /// Vehicle TTZ below this is severity 3, seconds.
    pub severity_2_3_threshold: f64,
    /// Vehicle TTZ must be at or below this for the encounter to count as
    /// "close" at all, seconds.
    pub engagement_horizon: f64,
    /// Agents slower than this are treated as stationary (TTZ = +inf), m/s.
    pub min_speed_epsilon: f64,
}

impl Default for RiskConfig {
    fn default() -> Self {
        RiskConfig {
            zone_half_extent: 3.0,
            ttz_diff_threshold: 1.5,
            severity_1_2_threshold: 2.3,
            severity_2_3_threshold: 1.5,
            engagement_horizon: 6.0,
            min_speed_epsilon: 0.1,
        }
    }
}

impl RiskConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.zone_half_extent.is_nan() || self.zone_half_extent <= 0.0 {
            return Err("risk.zone_half_extent must be > 0".into());
        }
        for (name, v) in [
            ("risk.ttz_diff_threshold", self.ttz_diff_threshold),
            ("risk.severity_1_2_threshold", self.severity_1_2_threshold),
            ("risk.severity_2_3_threshold", self.severity_2_3_threshold),
            ("risk.engagement_horizon", self.engagement_horizon),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be finite and > 0"));
            }
        }
        if self.severity_2_3_threshold >= self.severity_1_2_threshold {
            return Err("risk.severity_2_3_threshold must be < risk.severity_1_2_threshold".into());
        }
        if self.engagement_horizon <= self.severity_1_2_threshold {
            return Err("risk.engagement_horizon must be > risk.severity_1_2_threshold".into());
        }
        if !(self.min_speed_epsilon >= 0.0 && self.min_speed_epsilon.is_finite()) {
            return Err("risk.min_speed_epsilon must be finite and >= 0".into());
        }
        Ok(())
    }
}

/// Encounter severity; higher levels demand harder braking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub enum Severity {
    #[default]
    None,
    /// Sufficient distance to the collision zone; mild braking.
    Level1,
    /// Close to the collision zone; moderate braking.
    Level2,
    /// Very close to the collision zone; emergency braking.
    Level3,
}

impl Severity {
    pub fn rank(self) -> u8 {
        match self {
            Severity::None => 0,
            Severity::Level1 => 1,
            Severity::Level2 => 2,
            Severity::Level3 => 3,
        }
    }
}

/// Outcome of one vehicle/pedestrian risk evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskAssessment {
    pub collision_point: Option<Vec2>,
    pub zone: Option<Rect>,
    /// Seconds, or +inf when the vehicle never reaches the zone.
    pub ttz_vehicle: f64,
    /// Seconds, or +inf when the pedestrian never reaches the zone.
    pub ttz_pedestrian: f64,
    pub dangerous: bool,
    pub severity: Severity,
}

impl RiskAssessment {
    fn safe(point: Option<Vec2>, zone: Option<Rect>, ttz_v: f64, ttz_p: f64) -> Self {
        RiskAssessment {
            collision_point: point,
            zone,
            ttz_vehicle: ttz_v,
            ttz_pedestrian: ttz_p,
            dangerous: false,
            severity: Severity::None,
        }
    }
}

/// Intersection of the two heading rays plus the square zone centered there.
/// Absent when the paths are parallel or the crossing lies behind either agent.
pub fn locate_collision_point(
    vehicle: &Pose2,
    pedestrian: &Pose2,
    cfg: &RiskConfig,
) -> Option<(Vec2, Rect)> {
    let point = ray_ray_intersect(vehicle, pedestrian)?;
    let zone = Rect::new(point, cfg.zone_half_extent, cfg.zone_half_extent);
    Some((point, zone))
}

/// Time for an agent to reach the zone boundary at current heading and speed
/// (constant-velocity extrapolation). Zero inside the zone; +inf for agents
/// slower than `min_speed_epsilon` or heading away.
pub fn time_to_zone(agent: &Pose2, zone: &Rect, cfg: &RiskConfig) -> f64 {
    if agent.speed < cfg.min_speed_epsilon {
        return f64::INFINITY;
    }
    match ray_rect_entry(agent.position, agent.heading_unit(), zone) {
        Some(entry) => entry / agent.speed,
        None => f64::INFINITY,
    }
}

/// Severity of a dangerous encounter from the vehicle's TTZ. Boundaries are
/// inclusive on the milder side.
pub fn classify_severity(ttz_vehicle: f64, cfg: &RiskConfig) -> Severity {
    if ttz_vehicle >= cfg.severity_1_2_threshold {
        Severity::Level1
    } else if ttz_vehicle >= cfg.severity_2_3_threshold {
        Severity::Level2
    } else {
        Severity::Level3
    }
}

/// Full risk evaluation for one vehicle/pedestrian pair.
///
/// Dangerous iff both TTZ are finite, they differ by at most
/// `ttz_diff_threshold`, and the vehicle's TTZ is within the engagement
/// horizon ("risk high AND agents close").
pub fn assess(vehicle: &Pose2, pedestrian: &Pose2, cfg: &RiskConfig) -> RiskAssessment {
    let Some((point, zone)) = locate_collision_point(vehicle, pedestrian, cfg) else {
        return RiskAssessment::safe(None, None, f64::INFINITY, f64::INFINITY);
    };
    let ttz_v = time_to_zone(vehicle, &zone, cfg);
    let ttz_p = time_to_zone(pedestrian, &zone, cfg);
    let dangerous = ttz_v.is_finite()
        && ttz_p.is_finite()
        && (ttz_v - ttz_p).abs() <= cfg.ttz_diff_threshold
        && ttz_v <= cfg.engagement_horizon;
    if !dangerous {
        return RiskAssessment::safe(Some(point), Some(zone), ttz_v, ttz_p);
    }
    RiskAssessment {
        collision_point: Some(point),
        zone: Some(zone),
        ttz_vehicle: ttz_v,
        ttz_pedestrian: ttz_p,
        dangerous: true,
        severity: classify_severity(ttz_v, cfg),
    }
}

/// Anti-chatter hold on the commanded severity: never drops while danger
/// keeps being observed, releases after [`LATCH_CLEAR_HOLD`] seconds of
/// continuous no-danger observations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SeverityLatch {
    pub current: Severity,
    pub clear_timer: f64,
}

/// Feeds one observation into the latch. `dt` must be > 0.
pub fn latch_update(latch: SeverityLatch, new: Severity, dt: f64) -> SeverityLatch {
    assert!(dt > 0.0, "dt must be > 0");
    if new == Severity::None {
        let timer = latch.clear_timer + dt;
        if timer >= LATCH_CLEAR_HOLD - 1e-12 {
            SeverityLatch::default()
        } else {
            SeverityLatch {
                current: latch.current,
                clear_timer: timer,
            }
        }
    } else {
        SeverityLatch {
            current: latch.current.max(new),
            clear_timer: 0.0,
        }
    }
}
