#![allow(dead_code)]

use std::f64::consts::PI;

use activecam::geometry::{wrap_angle, Pose2D};
use activecam::slamlite::{EdgeKind, GraphEdge, GraphNode, PoseGraph};
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Plain-array evaluation of `diag(1/r) · S_L · T_R(θ) · v`.
pub fn wheel_oracle(theta: f64, v: [f64; 3], d: f64, r: f64, alpha: [f64; 3]) -> [f64; 3] {
    let t = [
        [theta.cos(), theta.sin(), 0.0],
        [-theta.sin(), theta.cos(), 0.0],
        [0.0, 0.0, 1.0],
    ];
    let mut body = [0.0; 3];
    for i in 0..3 {
        for j in 0..3 {
            body[i] += t[i][j] * v[j];
        }
    }
    let mut w = [0.0; 3];
    for i in 0..3 {
        let row = [-alpha[i].sin(), alpha[i].cos(), d];
        for j in 0..3 {
            w[i] += row[j] * body[j];
        }
        w[i] /= r;
    }
    w
}

pub fn node(id: usize, p: Pose2D, sig: Vec<usize>) -> GraphNode {
    GraphNode { id, pose: p, timestamp: id as f64, signature: sig }
}

pub fn edge(from: usize, to: usize, z: Pose2D, info: Matrix3<f64>, kind: EdgeKind) -> GraphEdge {
    GraphEdge { from, to, measurement: z, information: info, kind }
}

/// Relative-pose error written out component by component.
pub fn residual(a: [f64; 3], b: [f64; 3], z: &Pose2D) -> [f64; 3] {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let (sa, ca) = a[2].sin_cos();
    let (lx, ly) = (ca * dx + sa * dy, -sa * dx + ca * dy);
    let (sz, cz) = z.theta.sin_cos();
    let (ex, ey) = (lx - z.x, ly - z.y);
    [cz * ex + sz * ey, -sz * ex + cz * ey, wrap_angle(b[2] - a[2] - z.theta)]
}

/// Dense Gauss-Newton with numeric Jacobians, first node fixed.
pub fn dense_oracle(graph: &PoseGraph) -> Vec<Pose2D> {
    let n = graph.nodes.len();
    let mut x: Vec<f64> = graph.nodes[1..].iter().flat_map(|p| [p.pose.x, p.pose.y, p.pose.theta]).collect();
    let first = graph.nodes[0].pose;
    let pose_of = |x: &[f64], i: usize| if i == 0 { [first.x, first.y, first.theta] } else { [x[3 * i - 3], x[3 * i - 2], x[3 * i - 1]] };
    let stacked = |x: &[f64]| -> Vec<f64> {
        graph
            .edges
            .iter()
            .flat_map(|e| {
                let r = residual(pose_of(x, e.from), pose_of(x, e.to), &e.measurement);
                let l = e.information.cholesky().unwrap().l().transpose();
                let w = l * Vector3::from(r);
                [w[0], w[1], w[2]]
            })
            .collect()
    };
    for _ in 0..200 {
        let r0 = DVector::from_vec(stacked(&x));
        let mut j = DMatrix::zeros(r0.len(), x.len());
        for k in 0..x.len() {
            let h = 1e-7;
            let mut a = x.clone();
            let mut b = x.clone();
            a[k] += h;
            b[k] -= h;
            let (ra, rb) = (stacked(&a), stacked(&b));
            for i in 0..r0.len() {
                j[(i, k)] = (ra[i] - rb[i]) / (2.0 * h);
            }
        }
        let step = (j.transpose() * &j).lu().solve(&(-(j.transpose() * &r0))).unwrap();
        for k in 0..x.len() {
            x[k] += step[k];
        }
        if step.amax() < 1e-12 {
            break;
        }
    }
    (0..n).map(|i| { let p = pose_of(&x, i); Pose2D::new(p[0], p[1], wrap_angle(p[2])) }).collect()
}

pub fn three_node_graph(loop_z: Pose2D) -> PoseGraph {
    let mut g = PoseGraph::new();
    g.nodes = vec![
        node(0, Pose2D::new(0.0, 0.0, 0.0), vec![]),
        node(1, Pose2D::new(1.1, 0.1, 0.2), vec![]),
        node(2, Pose2D::new(1.9, 1.2, 1.8), vec![]),
    ];
    let info = Matrix3::from_diagonal(&Vector3::new(100.0, 100.0, 400.0));
    g.edges = vec![
        edge(0, 1, Pose2D::new(1.0, 0.0, PI / 2.0), info, EdgeKind::Odometry),
        edge(1, 2, Pose2D::new(1.0, 0.0, PI / 2.0), info, EdgeKind::Odometry),
        edge(0, 2, loop_z, info * 2.0, EdgeKind::Loop),
    ];
    g
}

pub fn drifted_loop(n: usize, seed: u64) -> (PoseGraph, Vec<Pose2D>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = 2.0 * PI / n as f64;
    let radius = 2.0;
    let truth: Vec<Pose2D> = (0..n)
        .map(|i| {
            let a = i as f64 * step;
            Pose2D::new(radius * a.cos(), radius * a.sin(), wrap_angle(a + PI / 2.0))
        })
        .collect();
    let info = Matrix3::from_diagonal(&Vector3::new(400.0, 400.0, 2500.0));
    let mut g = PoseGraph::new();
    g.nodes.push(node(0, truth[0], vec![]));
    for i in 1..n {
        let z = truth[i - 1].between(&truth[i]);
        let noisy = Pose2D::new(
            z.x * 1.03 + 0.01 * rng.random_range(-1.0..1.0),
            z.y + 0.01 * rng.random_range(-1.0..1.0),
            z.theta + 0.03,
        );
        let pose = g.nodes[i - 1].pose.compose(&noisy);
        g.nodes.push(node(i, pose, vec![]));
        g.edges.push(edge(i - 1, i, noisy, info, EdgeKind::Odometry));
    }
    g.edges.push(edge(0, n - 1, truth[0].between(&truth[n - 1]), info * 10.0, EdgeKind::Loop));
    (g, truth)
}

pub fn rmse(a: &[Pose2D], b: &[Pose2D]) -> f64 {
    (a.iter().zip(b).map(|(p, q)| (p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}
