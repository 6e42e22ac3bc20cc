//! Deterministic vehicle-to-pedestrian safety co-simulation.
//!
//! The crate models one ego vehicle approaching an intersection where
//! scripted pedestrians cross, possibly hidden from its onboard sensor by
//! parked vehicles. Pedestrians broadcast quantized safety messages over a
//! simulated lossy channel; the vehicle estimates collision risk from the
//! predicted path crossing (time-to-zone for both agents), grades dangerous
//! encounters into three severity levels and brakes accordingly. A pose
//! bridge maps poses recorded on a physical test lot into the virtual scene
//! so logged drives can feed the same pipeline.
//!
//! Modules follow the pipeline: [`geometry`] holds the planar kernel,
//! [`risk`] the collision-risk routine, [`agents`] the vehicle/pedestrian
//! plants and sensing, [`v2p`] the wire codec and broadcast channel,
//! [`bridge`] the real-to-virtual pose mapping, and [`scenario`] the
//! configuration format plus the simulation loop.

pub mod agents;
pub mod bridge;
pub mod geometry;
pub mod risk;
pub mod scenario;
pub mod v2p;

pub use geometry::{FrameTransform, Pose2, Rect, Vec2};
pub use risk::{RiskAssessment, RiskConfig, Severity};
pub use scenario::{load_config, run, Outcome, ScenarioConfig, TraceRecord};
