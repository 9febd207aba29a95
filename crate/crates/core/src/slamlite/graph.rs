use std::io::Write;

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Pose2D};
use crate::worldsim::gaussian;

#[derive(Debug, Clone, PartialEq)]
pub struct GraphNode {
    pub id: usize,
    pub pose: Pose2D,
    pub timestamp: f64,
    /// Sorted, distinct cells seen from this node.
    pub signature: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Odometry,
    Loop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphEdge {
    pub from: usize,
    pub to: usize,
    /// Pose of `to` in the frame of `from`.
    pub measurement: Pose2D,
    pub information: Matrix3<f64>,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NodePolicy {
    pub min_translation: f64,
    pub min_rotation: f64,
}

impl Default for NodePolicy {
    fn default() -> Self {
        Self { min_translation: 0.3, min_rotation: 0.3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopClosureParams {
    /// Smallest id gap between the two ends of a loop edge.
    pub min_separation: usize,
    /// Largest estimated distance to a candidate node, meters.
    pub max_distance: f64,
    /// Smallest signature overlap `|A ∩ B| / min(|A|, |B|)`.
    pub min_overlap: f64,
    /// Standard deviations of the loop measurement `(x, y, θ)`.
    pub sigma: [f64; 3],
}

impl Default for LoopClosureParams {
    fn default() -> Self {
        Self { min_separation: 20, max_distance: 1.0, min_overlap: 0.5, sigma: [0.02, 0.02, 0.01] }
    }
}

/// Relative-motion covariance accumulated since the last node by
/// compounding per-step velocity uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdometryAccumulator {
    pub delta: Pose2D,
    pub cov: Matrix3<f64>,
}

impl Default for OdometryAccumulator {
    fn default() -> Self {
        Self { delta: Pose2D::default(), cov: Matrix3::zeros() }
    }
}

impl OdometryAccumulator {
    /// Adds one step of motion `velocity · dt` expressed in the current node
    /// frame, with covariance `vel_cov · dt²`.
    pub fn accumulate(&mut self, velocity: [f64; 3], vel_cov: &Matrix3<f64>, dt: f64) {
        let d = Vector3::new(velocity[0] * dt, velocity[1] * dt, velocity[2] * dt);
        let (s, c) = self.delta.theta.sin_cos();
        let jr = Matrix3::new(
            1.0, 0.0, -s * d[0] - c * d[1],
            0.0, 1.0, c * d[0] - s * d[1],
            0.0, 0.0, 1.0,
        );
        let jd = Matrix3::new(
            c, -s, 0.0,
            s, c, 0.0,
            0.0, 0.0, 1.0,
        );
        self.cov = jr * self.cov * jr.transpose() + jd * vel_cov * jd.transpose() * (dt * dt);
        self.delta = self.delta.compose(&Pose2D::new(d[0], d[1], d[2]));
    }
}

/// Fraction of the smaller signature shared with the other. Both inputs must
/// be sorted and distinct.
pub fn signature_overlap(a: &[usize], b: &[usize]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let (mut i, mut j, mut shared) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                shared += 1;
                i += 1;
                j += 1;
            }
        }
    }
    shared as f64 / a.len().min(b.len()) as f64
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PoseGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
    /// Estimator pose when the last node was created.
    anchor: Option<Pose2D>,
    pub odometry: OdometryAccumulator,
}

impl PoseGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn last(&self) -> Option<&GraphNode> {
        self.nodes.last()
    }

    pub fn loop_count(&self) -> usize {
        self.edges.iter().filter(|e| e.kind == EdgeKind::Loop).count()
    }

    pub fn poses(&self) -> Vec<Pose2D> {
        self.nodes.iter().map(|n| n.pose).collect()
    }

    pub fn set_poses(&mut self, poses: &[Pose2D]) -> Result<()> {
        if poses.len() != self.nodes.len() {
            return Err(Error::InvalidParameter(format!("{} poses for {} nodes", poses.len(), self.nodes.len())));
        }
        for (n, p) in self.nodes.iter_mut().zip(poses) {
            n.pose = *p;
        }
        Ok(())
    }

    /// Re-bases odometry on a corrected estimator pose.
    pub fn reset_anchor(&mut self, est_pose: Pose2D) {
        self.anchor = Some(est_pose);
    }

    /// Adds a node once the estimate has moved or turned far enough from the
    /// last node, linked by an odometry edge whose information is the
    /// inverse of the accumulated covariance. The new node is placed at the
    /// (possibly optimized) last node composed with the estimated motion.
    pub fn maybe_add_node(&mut self, est_pose: Pose2D, timestamp: f64, signature: Vec<usize>, policy: &NodePolicy) -> Option<usize> {
        let mut signature = signature;
        signature.sort_unstable();
        signature.dedup();
        let Some(anchor) = self.anchor.filter(|_| !self.nodes.is_empty()) else {
            self.nodes.push(GraphNode { id: 0, pose: est_pose, timestamp, signature });
            self.anchor = Some(est_pose);
            self.odometry = OdometryAccumulator::default();
            return Some(0);
        };
        let rel = anchor.between(&est_pose);
        let moved = rel.x.hypot(rel.y) >= policy.min_translation - 1e-9;
        let turned = rel.theta.abs() >= policy.min_rotation - 1e-9;
        if !moved && !turned {
            return None;
        }
        let prev = self.nodes.last().expect("non-empty graph");
        let id = self.nodes.len();
        let pose = prev.pose.compose(&rel);
        let cov = self.odometry.cov + Matrix3::identity() * 1e-12;
        let information = cov.try_inverse().unwrap_or_else(|| Matrix3::identity() * 1e12);
        self.edges.push(GraphEdge { from: prev.id, to: id, measurement: rel, information, kind: EdgeKind::Odometry });
        self.nodes.push(GraphNode { id, pose, timestamp, signature });
        self.anchor = Some(est_pose);
        self.odometry = OdometryAccumulator::default();
        Some(id)
    }

    pub fn add_edge(&mut self, edge: GraphEdge) -> Result<()> {
        if edge.from == edge.to || edge.from >= self.nodes.len() || edge.to >= self.nodes.len() {
            return Err(Error::InvalidParameter(format!("invalid edge {} -> {}", edge.from, edge.to)));
        }
        if edge.information.iter().any(|v| !v.is_finite()) || edge.information.cholesky().is_none() {
            return Err(Error::NotPsd);
        }
        self.edges.push(edge);
        Ok(())
    }

    /// g2o-style text dump of vertices and edges.
    pub fn write_g2o<W: Write>(&self, mut out: W) -> Result<()> {
        for n in &self.nodes {
            writeln!(out, "VERTEX_SE2 {} {} {} {}", n.id, n.pose.x, n.pose.y, n.pose.theta)?;
        }
        for e in &self.edges {
            let i = &e.information;
            writeln!(
                out,
                "EDGE_SE2 {} {} {} {} {} {} {} {} {} {} {}",
                e.from,
                e.to,
                e.measurement.x,
                e.measurement.y,
                e.measurement.theta,
                i[(0, 0)],
                i[(0, 1)],
                i[(0, 2)],
                i[(1, 1)],
                i[(1, 2)],
                i[(2, 2)]
            )?;
        }
        Ok(())
    }
}

/// Looks for an older node near `current` whose view overlaps. The emitted
/// edge measures the true relative pose plus Gaussian noise; the caller adds
/// it to the graph.
pub fn detect_loop_closure<R: Rng + ?Sized>(
    graph: &PoseGraph,
    current: usize,
    params: &LoopClosureParams,
    truth: &dyn Fn(usize) -> Pose2D,
    rng: &mut R,
) -> Option<GraphEdge> {
    let cur = graph.nodes.get(current)?;
    let last_candidate = current.checked_sub(params.min_separation)?;
    let mut best: Option<(f64, usize)> = None;
    for node in &graph.nodes[..=last_candidate] {
        if node.pose.distance(&cur.pose) > params.max_distance {
            continue;
        }
        let overlap = signature_overlap(&node.signature, &cur.signature);
        if overlap >= params.min_overlap && best.is_none_or(|(o, _)| overlap > o) {
            best = Some((overlap, node.id));
        }
    }
    let (_, from) = best?;
    let t = truth(from).between(&truth(current));
    let [sx, sy, st] = params.sigma;
    let measurement = Pose2D::new(
        t.x + sx * gaussian(rng),
        t.y + sy * gaussian(rng),
        wrap_angle(t.theta + st * gaussian(rng)),
    );
    let information = Matrix3::from_diagonal(&Vector3::new(1.0 / (sx * sx), 1.0 / (sy * sy), 1.0 / (st * st)));
    Some(GraphEdge { from, to: current, measurement, information, kind: EdgeKind::Loop })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stationary_adds_one_node() {
        let mut g = PoseGraph::new();
        let p = NodePolicy::default();
        for k in 0..50 {
            g.maybe_add_node(Pose2D::new(1.0, 1.0, 0.0), k as f64 * 0.1, vec![], &p);
        }
        assert_eq!(g.len(), 1);
        assert!(g.edges.is_empty());
    }

    #[test]
    fn straight_meter_gives_four_nodes() {
        let mut g = PoseGraph::new();
        let p = NodePolicy::default();
        for k in 0..=100 {
            g.maybe_add_node(Pose2D::new(k as f64 * 0.01, 0.0, 0.0), k as f64 * 0.1, vec![], &p);
        }
        assert_eq!(g.len(), 4);
        assert_eq!(g.edges.len(), 3);
    }

    #[test]
    fn rotation_sweep() {
        let mut g = PoseGraph::new();
        let p = NodePolicy::default();
        let n = 1000;
        for k in 0..=n {
            let th = std::f64::consts::PI * k as f64 / n as f64;
            g.maybe_add_node(Pose2D::new(0.0, 0.0, th), k as f64, vec![], &p);
        }
        // nodes at 0, 0.3, ..., 3.0
        assert_eq!(g.len(), 11);
        for w in g.nodes.windows(2) {
            assert!((wrap_angle(w[1].pose.theta - w[0].pose.theta) - 0.3).abs() < 0.01);
        }
    }

    #[test]
    fn accumulator_straight_line() {
        let mut acc = OdometryAccumulator::default();
        let cov = Matrix3::from_diagonal(&Vector3::new(0.01, 0.01, 0.0));
        for _ in 0..10 {
            acc.accumulate([1.0, 0.0, 0.0], &cov, 0.1);
        }
        assert!((acc.delta.x - 1.0).abs() < 1e-12);
        assert!((acc.cov[(0, 0)] - 0.001).abs() < 1e-15);
    }

    #[test]
    fn heading_uncertainty_spreads_laterally() {
        let mut acc = OdometryAccumulator::default();
        let cov = Matrix3::from_diagonal(&Vector3::new(0.0, 0.0, 0.01));
        for _ in 0..10 {
            acc.accumulate([1.0, 0.0, 0.0], &cov, 0.1);
        }
        assert!(acc.cov[(1, 1)] > 0.0);
        assert_eq!(acc.cov[(0, 0)], 0.0);
    }

    #[test]
    fn overlap() {
        assert_eq!(signature_overlap(&[1, 2, 3, 4], &[3, 4, 5]), 2.0 / 3.0);
        assert_eq!(signature_overlap(&[], &[1]), 0.0);
    }

    fn chain(n: usize) -> PoseGraph {
        let mut g = PoseGraph::new();
        // walk out and back along x so that the last node revisits the first
        for k in 0..n {
            let x = if k < n / 2 { k as f64 * 0.3 } else { (n - 1 - k) as f64 * 0.3 };
            let th = if k < n / 2 { 0.0 } else { std::f64::consts::PI };
            g.nodes.push(GraphNode { id: k, pose: Pose2D::new(x, 0.0, th), timestamp: k as f64, signature: vec![k % 7, 100] });
        }
        g
    }

    #[test]
    fn loop_never_fires_early() {
        let g = chain(19);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for cur in 0..19 {
            assert!(detect_loop_closure(&g, cur, &LoopClosureParams::default(), &|i| g.nodes[i].pose, &mut rng).is_none());
        }
    }

    #[test]
    fn loop_fires_on_revisit() {
        let mut g = chain(30);
        for n in &mut g.nodes {
            n.signature = vec![1, 2, 3];
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let e = detect_loop_closure(&g, 29, &LoopClosureParams::default(), &|i| g.nodes[i].pose, &mut rng).unwrap();
        assert_eq!(e.kind, EdgeKind::Loop);
        assert!(e.from <= 9);
        g.nodes[29].signature = vec![7, 8, 9];
        assert!(detect_loop_closure(&g, 29, &LoopClosureParams::default(), &|i| g.nodes[i].pose, &mut rng).is_none());
    }

    #[test]
    fn g2o_format() {
        let mut g = PoseGraph::new();
        g.maybe_add_node(Pose2D::new(0.0, 0.0, 0.0), 0.0, vec![], &NodePolicy::default());
        g.odometry.cov = Matrix3::identity();
        g.maybe_add_node(Pose2D::new(0.5, 0.0, 0.0), 1.0, vec![], &NodePolicy::default());
        let mut buf = Vec::new();
        g.write_g2o(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "VERTEX_SE2 0 0 0 0");
        assert_eq!(lines[1], "VERTEX_SE2 1 0.5 0 0");
        assert!(lines[2].starts_with("EDGE_SE2 0 1 0.5 0 0 "));
    }
}
