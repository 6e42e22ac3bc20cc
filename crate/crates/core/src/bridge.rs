//! Real-to-virtual pose correlation: calibrate a rigid transform from paired
//! initial poses, map recorded or streamed real-lot poses into the virtual
//! frame, and replay pose logs from CSV.
//!
//! Log format: header `t,x,y,heading_deg,speed`, one sample per row, t in
//! seconds strictly increasing, x/y meters, heading degrees CCW from +x,
//! speed m/s. UTF-8 with LF or CRLF line endings.

use std::io::BufRead;

use thiserror::Error;

use crate::geometry::{normalize_angle, FrameTransform, Pose2, Vec2};

pub const POSE_LOG_HEADER: &str = "t,x,y,heading_deg,speed";

/// One timestamped pose in the real-lot frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealPoseSample {
    pub t: f64,
    pub pose: Pose2,
}

/// Rigid real-to-virtual map anchored at the paired reference poses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeCalibration {
    pub transform: FrameTransform,
    pub real_origin: Pose2,
    pub virtual_origin: Pose2,
}

#[derive(Debug, Error, PartialEq)]
pub enum BridgeError {
    #[error("row {row}: malformed pose log row: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("row {row}: timestamps must be strictly increasing")]
    NonMonotoneTime { row: usize },
    #[error("pose log contains no samples")]
    EmptyLog,
    #[error("replay time {t} outside log span [{first}, {last}]")]
    OutOfRange { t: f64, first: f64, last: f64 },
    #[error("pose log read failed: {0}")]
    Io(String),
}

/// Solves the rigid transform that carries the real reference pose onto the
/// virtual one. Both vehicles start at the same orientation offset thereafter.
pub fn calibrate(real_origin: Pose2, virtual_origin: Pose2) -> BridgeCalibration {
    let rotation = normalize_angle(virtual_origin.heading - real_origin.heading);
    let translation = virtual_origin
        .position
         - real_origin.position.rotate(rotation);
    BridgeCalibration {
        transform: FrameTransform::new(rotation, translation),
        real_origin,
        virtual_origin,
    }
}

/// Maps a real-lot pose into the virtual frame. Displacement magnitudes are
/// preserved and the heading offset stays constant.
pub fn map_pose(cal: &BridgeCalibration, real: &Pose2) -> Pose2 {
    cal.transform.compose(real)
}

/// Parses a pose log CSV, rejecting malformed rows and non-monotone
/// timestamps. A header-only stream is an empty log.
pub fn ingest_pose_log<R: BufRead>(source: R) -> Result<Vec<RealPoseSample>, BridgeError> {
    let mut samples: Vec<RealPoseSample> = Vec::new();
    let mut lines = source.lines().enumerate();

    let header = match lines.next() {
        Some((_, Ok(line))) => line,
        Some((_, Err(e))) => return Err(BridgeError::Io(e.to_string())),
        None => return Err(BridgeError::EmptyLog),
    };
    if header.trim_end_matches('\r').trim() != POSE_LOG_HEADER {
        return Err(BridgeError::MalformedRow {
            row: 1,
            reason: format!("expected header `{POSE_LOG_HEADER}`"),
        });
    }

    for (idx, line) in lines {
        let row = idx + 1; // 1-based, header is row 1
        let line = line.map_err(|e| BridgeError::Io(e.to_string()))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(BridgeError::MalformedRow {
                row,
                reason: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        let mut nums = [0.0f64; 5];
        for (i, raw) in fields.iter().enumerate() {
            nums[i] = raw.trim().parse().map_err(|_| BridgeError::MalformedRow {
                row,
                reason: format!("field {} is not a number: `{}`", i + 1, raw.trim()),
            })?;
            if !nums[i].is_finite() {
                return Err(BridgeError::MalformedRow {
                    row,
                    reason: format!("field {} is not finite", i + 1),
                });
            }
        }
        let [t, x, y, heading_deg, speed] = nums;
        if speed < 0.0 {
            return Err(BridgeError::MalformedRow {
                row,
                reason: "speed must be >= 0".into(),
            });
        }
        if let Some(prev) = samples.last() {
            if t <= prev.t {
                return Err(BridgeError::NonMonotoneTime { row });
            }
        }
        samples.push(RealPoseSample {
            t,
            pose: Pose2::new(Vec2::new(x, y), heading_deg.to_radians(), speed),
        });
    }

    if samples.is_empty() {
        return Err(BridgeError::EmptyLog);
    }
    Ok(samples)
}

/// Adds seeded uniform position noise (+/- `amplitude` meters per axis) to a
/// log in place, for sensitivity sweeps. Amplitude zero leaves the log
/// untouched; headings and speeds are never perturbed.
pub fn jitter_positions(samples: &mut [RealPoseSample], amplitude: f64, seed: u64) {
    use rand::{Rng, SeedableRng};
    assert!(amplitude >= 0.0 && amplitude.is_finite());
    if amplitude == 0.0 {
        return;
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for s in samples.iter_mut() {
        let dx = rng.gen_range(-amplitude..=amplitude);
        let dy = rng.gen_range(-amplitude..=amplitude);
        s.pose = Pose2::new(
            s.pose.position + Vec2::new(dx, dy),
            s.pose.heading,
            s.pose.speed,
        );
    }
}

/// Pose at time `t` by linear interpolation of position and speed, with the
/// heading interpolated along the shorter arc. Exact at sample instants.
pub fn replay_pose(samples: &[RealPoseSample], t: f64) -> Result<Pose2, BridgeError> {
    let first = samples.first().ok_or(BridgeError::EmptyLog)?;
    let last = samples.last().unwrap();
    if t < first.t || t > last.t {
        return Err(BridgeError::OutOfRange {
            t,
            first: first.t,
            last: last.t,
        });
    }
    // index of the first sample at or after t
    let hi = samples.partition_point(|s| s.t < t);
    if hi == 0 {
        return Ok(first.pose);
    }
    let (a, b) = (&samples[hi - 1], &samples[hi.min(samples.len() - 1)]);
    if a.t == b.t || b.t == t {
        return Ok(b.pose);
    }
    let frac = (t - a.t) / (b.t - a.t);
    let position = a.pose.position + (b.pose.position - a.pose.position) * frac;
    let speed = a.pose.speed + (b.pose.speed - a.pose.speed) * frac;
    let heading = a.pose.heading + normalize_angle(b.pose.heading - a.pose.heading) * frac;
    Ok(Pose2::new(position, heading, speed))
}
