//! Ground-truth world: environment, true state propagation and synthetic
//! sensors.

mod environment;
mod sensors;
mod world;

pub use environment::Environment;
pub use sensors::{
    camera_observation, raycast_lrf, scan_match_odometry, synthesize_inertial_and_encoder, wheel_odometry,
    CameraModel, CameraObservation, CameraRay, InertialReading, NoiseConfig, OdometryDelta, SensorFrame,
    WheelOdometry, CAMERA_RAY_SPACING, LRF_BEAMS,
};
pub(crate) use sensors::gaussian;
pub use world::{Command, TrueState, World};
