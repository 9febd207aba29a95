use nalgebra::{Matrix2, Matrix3, Vector3};

use super::graph::{GraphEdge, PoseGraph};
use super::skyline::{reverse_cuthill_mckee, SkylineMatrix};
use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Pose2D};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GnConfig {
    pub max_iterations: usize,
    /// Stop once the largest step component falls below this.
    pub step_tolerance: f64,
    /// Damping retries per iteration before giving up on a descent step.
    pub max_damping_steps: usize,
}

impl Default for GnConfig {
    fn default() -> Self {
        Self { max_iterations: 50, step_tolerance: 1e-8, max_damping_steps: 12 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationReport {
    pub poses: Vec<Pose2D>,
    /// Total chi² before the first and after every accepted iteration.
    pub chi2: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn rot(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Residual of one relative-pose constraint and its Jacobians with respect
/// to the two endpoint poses.
pub fn edge_residual(xi: &Pose2D, xj: &Pose2D, z: &Pose2D) -> (Vector3<f64>, Matrix3<f64>, Matrix3<f64>) {
    let rit = rot(xi.theta).transpose();
    let rzt = rot(z.theta).transpose();
    let dt = nalgebra::Vector2::new(xj.x - xi.x, xj.y - xi.y);
    let et = rzt * (rit * dt - nalgebra::Vector2::new(z.x, z.y));
    let e = Vector3::new(et[0], et[1], wrap_angle(xj.theta - xi.theta - z.theta));
    let (s, c) = xi.theta.sin_cos();
    let drit = Matrix2::new(-s, c, -c, -s);
    let rr = rzt * rit;
    let dth = rzt * drit * dt;
    let a = Matrix3::new(
        -rr[(0, 0)], -rr[(0, 1)], dth[0],
        -rr[(1, 0)], -rr[(1, 1)], dth[1],
        0.0, 0.0, -1.0,
    );
    let b = Matrix3::new(
        rr[(0, 0)], rr[(0, 1)], 0.0,
        rr[(1, 0)], rr[(1, 1)], 0.0,
        0.0, 0.0, 1.0,
    );
    (e, a, b)
}

pub fn graph_chi2(edges: &[GraphEdge], poses: &[Pose2D]) -> f64 {
    edges
        .iter()
        .map(|ed| {
            let (e, _, _) = edge_residual(&poses[ed.from], &poses[ed.to], &ed.measurement);
            (e.transpose() * ed.information * e)[0]
        })
        .sum()
}

/// Variable layout: every node but the first, permuted by reverse
/// Cuthill-McKee to keep the profile narrow.
struct Layout {
    /// Block position of node `i`, `None` for the fixed first node.
    pos: Vec<Option<usize>>,
    first: Vec<usize>,
}

impl Layout {
    fn new(n: usize, edges: &[GraphEdge]) -> Self {
        let m = n.saturating_sub(1);
        let mut adj = vec![Vec::new(); m];
        for e in edges {
            if e.from > 0 && e.to > 0 {
                adj[e.from - 1].push(e.to - 1);
                adj[e.to - 1].push(e.from - 1);
            }
        }
        let order = reverse_cuthill_mckee(&adj);
        let mut pos = vec![None; n];
        for (new, &old) in order.iter().enumerate() {
            pos[old + 1] = Some(new);
        }
        let mut first_block: Vec<usize> = (0..m).collect();
        for e in edges {
            if let (Some(a), Some(b)) = (pos[e.from], pos[e.to]) {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                first_block[hi] = first_block[hi].min(lo);
            }
        }
        let first = (0..3 * m).map(|r| 3 * first_block[r / 3]).collect();
        Self { pos, first }
    }
}

fn assemble(layout: &Layout, edges: &[GraphEdge], poses: &[Pose2D]) -> (SkylineMatrix, Vec<f64>) {
    let mut h = SkylineMatrix::new(layout.first.clone());
    let mut b = vec![0.0; layout.first.len()];
    for ed in edges {
        let (e, ja, jb) = edge_residual(&poses[ed.from], &poses[ed.to], &ed.measurement);
        let om = &ed.information;
        let blocks = [(layout.pos[ed.from], ja), (layout.pos[ed.to], jb)];
        for (pi, ji) in &blocks {
            let Some(pi) = pi else { continue };
            let g = ji.transpose() * om * e;
            for r in 0..3 {
                b[3 * pi + r] += g[r];
            }
            for (pj, jj) in &blocks {
                let Some(pj) = pj else { continue };
                if pj > pi {
                    continue;
                }
                let blk = ji.transpose() * om * jj;
                for r in 0..3 {
                    for c in 0..3 {
                        let (row, col) = (3 * pi + r, 3 * pj + c);
                        if col <= row {
                            h.add(row, col, blk[(r, c)]);
                        }
                    }
                }
            }
        }
    }
    (h, b)
}

fn check_connected(graph: &PoseGraph) -> Result<()> {
    let n = graph.nodes.len();
    let mut adj = vec![Vec::new(); n];
    for e in &graph.edges {
        if e.from >= n || e.to >= n {
            return Err(Error::InvalidParameter(format!("edge {} -> {} references a missing node", e.from, e.to)));
        }
        adj[e.from].push(e.to);
        adj[e.to].push(e.from);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    if seen.iter().all(|&s| s) {
        Ok(())
    } else {
        Err(Error::InvalidParameter("pose graph is not connected".into()))
    }
}

fn apply_step(layout: &Layout, poses: &[Pose2D], dx: &[f64]) -> Vec<Pose2D> {
    poses
        .iter()
        .zip(&layout.pos)
        .map(|(p, pos)| match pos {
            Some(k) => Pose2D::new(p.x + dx[3 * k], p.y + dx[3 * k + 1], wrap_angle(p.theta + dx[3 * k + 2])),
            None => *p,
        })
        .collect()
}

/// Gauss-Newton over all node poses with the first node held fixed. A step
/// that fails to factor or raises chi² is retried with Levenberg damping.
pub fn optimize_graph(graph: &PoseGraph, cfg: &GnConfig) -> Result<OptimizationReport> {
    let mut poses = graph.poses();
    if poses.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("graph node pose"));
    }
    let mut chi = graph_chi2(&graph.edges, &poses);
    let mut report = OptimizationReport { poses: poses.clone(), chi2: vec![chi], iterations: 0, converged: true };
    if poses.len() < 2 {
        return Ok(report);
    }
    check_connected(graph)?;
    let layout = Layout::new(poses.len(), &graph.edges);
    let mut lambda = 0.0f64;
    report.converged = false;
    for it in 0..cfg.max_iterations {
        report.iterations = it + 1;
        let (h, b) = assemble(&layout, &graph.edges, &poses);
        let mut accepted = None;
        for attempt in 0..=cfg.max_damping_steps {
            let mut hd = h.clone();
            if lambda > 0.0 {
                for r in 0..hd.dim() {
                    hd.add(r, r, lambda * (h.get(r, r) + 1e-9));
                }
            }
            let Ok(l) = hd.cholesky() else {
                if attempt == cfg.max_damping_steps {
                    return Err(Error::SingularSystem);
                }
                lambda = (lambda * 10.0).max(1e-6);
                continue;
            };
            let mut dx: Vec<f64> = b.iter().map(|v| -v).collect();
            l.solve_factored(&mut dx);
            let cand = apply_step(&layout, &poses, &dx);
            let cand_chi = graph_chi2(&graph.edges, &cand);
            if cand_chi <= chi {
                accepted = Some((cand, cand_chi, dx.iter().fold(0.0f64, |m, v| m.max(v.abs()))));
                lambda = if lambda < 1e-9 { 0.0 } else { lambda / 10.0 };
                break;
            }
            lambda = (lambda * 10.0).max(1e-6);
        }
        let Some((cand, cand_chi, step)) = accepted else {
            report.converged = true;
            break;
        };
        poses = cand;
        chi = cand_chi;
        report.chi2.push(chi);
        if step < cfg.step_tolerance {
            report.converged = true;
            break;
        }
    }
    report.poses = poses;
    Ok(report)
}

/// Marginal covariance of one node, from the inverse of the information
/// matrix linearized at `poses`. The fixed first node has zero covariance.
pub fn marginal_covariance(graph: &PoseGraph, poses: &[Pose2D], node: usize) -> Result<Matrix3<f64>> {
    if node >= poses.len() || poses.len() != graph.nodes.len() {
        return Err(Error::InvalidParameter(format!("node {node} not in graph")));
    }
    let layout = Layout::new(poses.len(), &graph.edges);
    let Some(k) = layout.pos[node] else { return Ok(Matrix3::zeros()) };
    let (h, _) = assemble(&layout, &graph.edges, poses);
    let l = h.cholesky()?;
    let mut out = Matrix3::zeros();
    for c in 0..3 {
        let mut e = vec![0.0; h.dim()];
        e[3 * k + c] = 1.0;
        l.solve_factored(&mut e);
        for r in 0..3 {
            out[(r, c)] = e[3 * k + r];
        }
    }
    Ok(0.5 * (out + out.transpose()))
}
