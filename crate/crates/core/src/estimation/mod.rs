//! Robot and camera-joint EKFs, the differential IMU and the merged camera
//! pose estimate.

mod camera;
mod ekf;
mod merge;
mod robot;

pub use camera::{CameraFilter, JointModel};
pub use ekf::{check_psd, ekf_predict, ekf_update, GaussianEstimate, Measurement, MotionModel};
pub use merge::{
    differential_imu, differential_imu_with_tolerance, fuse_loop_closure_xy, interpolate_estimate, merge_states,
    write_estimate_trace, Composition, DifferentialImuMeasurement, GyroSample, MergedState, TimedEstimate,
    DIFFERENTIAL_IMU_VARIANCE, TIME_TOLERANCE,
};
pub use robot::{pose_nees, RobotFilter, RobotFilterConfig, RobotModel};

/// State indices of the robot filter.
pub mod robot_index {
    pub use super::robot::{R, THETA, U, W, X, Y};
}

/// State indices of the camera filter.
pub mod camera_index {
    pub use super::camera::{DGAMMA, GAMMA};
}
