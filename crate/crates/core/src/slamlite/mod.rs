//! Occupancy mapping, pose graph and SE(2) graph optimization.

mod graph;
mod grid;
mod optimize;
mod skyline;

pub use graph::{
    detect_loop_closure, signature_overlap, EdgeKind, GraphEdge, GraphNode, LoopClosureParams, NodePolicy,
    OdometryAccumulator, PoseGraph,
};
pub use grid::{
    binary_entropy, logistic, write_class_pgm, CellClass, CellCounts, LogOddsParams, MapEntropy, OccupancyGrid,
    FREE_THRESHOLD, OCCUPIED_THRESHOLD,
};
pub use optimize::{edge_residual, graph_chi2, marginal_covariance, optimize_graph, GnConfig, OptimizationReport};
pub use skyline::{reverse_cuthill_mckee, SkylineMatrix};
