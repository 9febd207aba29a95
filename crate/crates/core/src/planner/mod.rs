//! Frontier exploration, information-gain goal selection and the
//! receding-horizon controller for the four platform modes.

mod control;
mod explore;
mod frontier;
mod modes;
mod navigation;
mod waypoint;

pub use control::{pure_pursuit_rates, rh_solve, shift_plan, ControllerConfig, Reference, RhSolution};
pub use explore::{Explorer, ExplorerStatus, ReplanReason};
pub use frontier::{detect_frontiers, FrontierCluster, MIN_CLUSTER_SIZE};
pub use modes::{apply_mode_constraints, ConstraintSet, Platform, PlatformMode};
pub use navigation::{disc_hits_class, distance_transform, obstacle_clearance, path_length, CostField, NavConfig, NavigationMap};
pub use waypoint::{
    heading_utilities, nearest_reachable, polar_unknown_bins, select_waypoint, PlannerConfig, Waypoint,
    WaypointDecision,
};
