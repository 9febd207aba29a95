//! Deterministic desk-scale simulation of active visual SLAM on a
//! three-wheel omnidirectional robot carrying an independently rotating
//! camera.
//!
//! The crate covers the whole loop:
//!
//! - [`kinematics`]: wheel speeds for base and camera joint, pose
//!   integration and the wheel-rotation energy proxy.
//! - [`worldsim`]: occupancy environments, collision-aware motion, LRF,
//!   depth-camera sector, gyros, joint encoder and odometry sensors.
//! - [`estimation`]: robot and camera EKFs and their merged camera-pose
//!   estimate.
//! - [`slamlite`]: log-odds mapping, pose graph with loop closures and a
//!   sparse Gauss-Newton optimizer.
//! - [`planner`]: frontier goals with a camera-heading utility and a
//!   receding-horizon controller for the platform modes A, HH, OC and Y0.
//! - [`metrics`]: balanced map accuracy, trajectory error, per-meter ratios
//!   and time bucketing.
//! - [`harness`]: configuration, single trials and seeded batch runs with
//!   CSV, PGM and g2o outputs.
//!
//! Runnable examples live in `examples/`: `wheel_kinematics`, `sensing`,
//! `merged_estimate`, `occupancy_mapping`, `pose_graph_loop`,
//! `frontier_waypoint`, `receding_horizon`, `single_trial` and
//! `comparison_batch`.

pub mod error;
pub mod estimation;
pub mod geometry;
pub mod harness;
pub mod kinematics;
pub mod metrics;
pub mod planner;
pub mod raycast;
pub mod slamlite;
pub mod worldsim;

pub use error::{Error, Result};
