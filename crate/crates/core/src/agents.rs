//! Kinematic agents: vehicle longitudinal dynamics with brake-actuator lag
//! and the severity-to-deceleration map, scripted pedestrian motion profiles,
//! the onboard line-of-sight detection baseline, and ground-truth
//! vehicle/pedestrian contact checks.

use serde::{Deserialize, Serialize};

use crate::geometry::{segment_intersects_rect, Pose2, Rect, Vec2};
use crate::risk::Severity;

/// Severity-to-deceleration table plus first-order brake actuator lag.
/// Magnitudes span comfort braking to near-limit dry-asphalt braking.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BrakeMap {
    /// Mild braking, m/s^2.
    pub level1_decel: f64,
    /// Moderate braking, m/s^2.
    pub level2_decel: f64,
    /// Emergency braking, m/s^2.
    pub level3_decel: f64,
    /// First-order actuator time constant, seconds. Zero means instant.
    pub actuator_tau: f64,
}

impl Default for BrakeMap {
    fn default() -> Self {
        BrakeMap {
            level1_decel: 2.0,
            level2_decel: 4.5,
            level3_decel: 8.0,
            actuator_tau: 0.2,
        }
    }
}

impl BrakeMap {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.level1_decel > 0.0
            && self.level1_decel < self.level2_decel
            && self.level2_decel < self.level3_decel)
        {
            return Err("brake map must satisfy 0 < level1 < level2 < level3".into());
        }
        if !(self.actuator_tau >= 0.0 && self.actuator_tau.is_finite()) {
            return Err("brake.actuator_tau must be finite and >= 0".into());
        }
        Ok(())
    }
}

/// Commanded deceleration for a severity level.
pub fn severity_to_decel(s: Severity, map: &BrakeMap) -> f64 {
    match s {
        Severity::None => 0.0,
        Severity::Level1 => map.level1_decel,
        Severity::Level2 => map.level2_decel,
        Severity::Level3 => map.level3_decel,
    }
}

/// Ego vehicle longitudinal state. The footprint rectangle (length along
/// heading, width across) is used only for ground-truth contact, never for
/// the risk math.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub pose: Pose2,
    pub commanded_decel: f64,
    pub actual_decel: f64,
    /// Brake actuator time constant, seconds (zero = instant).
    pub actuator_tau: f64,
    pub footprint_length: f64,
    pub footprint_width: f64,
}

impl VehicleState {
    pub fn new(pose: Pose2, actuator_tau: f64, footprint_length: f64, footprint_width: f64) -> Self {
        assert!(footprint_length > 0.0 && footprint_width > 0.0, "footprint dims must be > 0");
        assert!(actuator_tau >= 0.0 && actuator_tau.is_finite());
        VehicleState {
            pose,
            commanded_decel: 0.0,
            actual_decel: 0.0,
            actuator_tau,
            footprint_length,
            footprint_width,
        }
    }
}

/// One explicit-Euler step of the longitudinal plant: the actuator relaxes
/// toward the commanded deceleration, position advances with the speed
/// sampled before the speed update, and speed clamps at zero. Heading never
/// changes (straight-path experiments).
///
/// `dt` must lie in (0, 0.1].
pub fn step_vehicle(v: &VehicleState, dt: f64) -> VehicleState {
    assert!(dt > 0.0 && dt <= 0.1, "dt out of range (0, 0.1]: {dt}");
    let actual = if v.actuator_tau == 0.0 {
        v.commanded_decel
    } else {
        (v.actual_decel + (v.commanded_decel - v.actual_decel) * dt / v.actuator_tau).max(0.0)
    };
    let speed_before = v.pose.speed;
    let position = v
        .pose
        .position
         + v.pose.heading_unit() * (speed_before * dt);
    let speed = (speed_before - actual * dt).max(0.0);
    VehicleState {
        pose: Pose2::new(position, v.pose.heading, speed),
        actual_decel: actual,
        ..*v
    }
}

/// Piecewise-constant speed/heading schedule: each segment applies from its
/// start time until the next one. Before the first start time the pedestrian
/// stands still.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionProfile {
    pub segments: Vec<ProfileSegment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSegment {
    pub start_time: f64,
    pub speed: f64,
    pub heading: f64,
}

impl MotionProfile {
    pub fn validate(&self) -> Result<(), String> {
        for w in self.segments.windows(2) {
            if w[1].start_time <= w[0].start_time || w[0].start_time.is_nan() {
                return Err("profile start_times must be strictly increasing".into());
            }
        }
        for s in &self.segments {
            if !(s.speed >= 0.0 && s.speed.is_finite()) {
                return Err("profile speeds must be finite and >= 0".into());
            }
            if !s.start_time.is_finite() || !s.heading.is_finite() {
                return Err("profile fields must be finite".into());
            }
        }
        Ok(())
    }

    /// Last segment whose start time is at or before `t`.
    pub fn active(&self, t: f64) -> Option<&ProfileSegment> {
        self.segments.iter().rev().find(|s| s.start_time <= t)
    }
}

/// Scripted pedestrian: a disc of `radius` meters following a motion profile.
#[derive(Debug, Clone, PartialEq)]
pub struct PedestrianState {
    pub pose: Pose2,
    pub radius: f64,
    pub profile: MotionProfile,
}

impl PedestrianState {
    pub fn new(pose: Pose2, radius: f64, profile: MotionProfile) -> Self {
        assert!(radius > 0.0, "pedestrian radius must be > 0");
        PedestrianState { pose, radius, profile }
    }
}

/// One explicit-Euler step of the scripted pedestrian: look up the active
/// profile segment for time `t`, adopt its speed and heading, advance.
///
/// `dt` must lie in (0, 0.1].
pub fn step_pedestrian(p: &PedestrianState, t: f64, dt: f64) -> PedestrianState {
    assert!(dt > 0.0 && dt <= 0.1, "dt out of range (0, 0.1]: {dt}");
    let (speed, heading) = match p.profile.active(t) {
        Some(seg) => (seg.speed, seg.heading),
        None => (0.0, p.pose.heading),
    };
    let position = p.pose.position + Vec2::from_heading(heading) * (speed * dt);
    PedestrianState {
        pose: Pose2::new(position, heading, speed),
        radius: p.radius,
        profile: p.profile.clone(),
    }
}

/// Range-limited sensor defeated by any occluding rectangle across the sight
/// segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorModel {
    pub range: f64,
    pub occluders: Vec<Rect>,
}

impl Default for SensorModel {
    fn default() -> Self {
        SensorModel {
            range: 60.0,
            occluders: Vec::new(),
        }
    }
}

/// True iff the pedestrian is in range and no occluder crosses the straight
/// sight segment between the two positions.
pub fn onboard_detects(v: &VehicleState, p: &PedestrianState, sensor: &SensorModel) -> bool {
    let a = v.pose.position;
    let b = p.pose.position;
    if a.distance(b) > sensor.range {
        return false;
    }
    !sensor
        .occluders
        .iter()
        .any(|occ| segment_intersects_rect(a, b, occ))
}

/// Ground-truth contact: pedestrian disc against the vehicle footprint
/// rectangle (closed contact counts).
pub fn detect_collision(v: &VehicleState, p: &PedestrianState) -> bool {
    separation(v, p) <= 0.0
}

/// Boundary distance between the pedestrian disc and the vehicle footprint,
/// clamped at zero for contact or overlap.
pub fn separation(v: &VehicleState, p: &PedestrianState) -> f64 {
    boundary_separation(
        &v.pose,
        v.footprint_length,
        v.footprint_width,
        p.pose.position,
        p.radius,
    )
}

/// Same boundary distance from raw pose data, for callers that only have a
/// recorded trace row rather than live agent states.
pub fn boundary_separation(
    vehicle_pose: &Pose2,
    footprint_length: f64,
    footprint_width: f64,
    ped_center: Vec2,
    ped_radius: f64,
) -> f64 {
    // pedestrian center in the vehicle's body frame (x along heading)
    let rel = (ped_center - vehicle_pose.position).rotate(-vehicle_pose.heading);
    let footprint = Rect::new(Vec2::zero(), footprint_length / 2.0, footprint_width / 2.0);
    (footprint.distance_to_point(rel) - ped_radius).max(0.0)
}
