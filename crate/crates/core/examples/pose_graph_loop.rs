//! A square loop driven with biased odometry: the pose graph drifts until a
//! loop closure is found, then Gauss-Newton pulls it back.
//!
//! ```text
//! cargo run --example pose_graph_loop
//! ```

use nalgebra::Matrix3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use activecam::geometry::Pose2D;
use activecam::slamlite::{detect_loop_closure, graph_chi2, optimize_graph, GnConfig, LoopClosureParams, NodePolicy, PoseGraph};

fn rmse(a: &[Pose2D], b: &[Pose2D]) -> f64 {
    (a.iter().zip(b).map(|(p, q)| (p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

fn main() -> activecam::Result<()> {
    let policy = NodePolicy::default();
    let params = LoopClosureParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut graph = PoseGraph::new();
    let mut truth: Vec<Pose2D> = Vec::new();

    // 4 m square, one node per 0.4 m, odometry heading biased by 1.5 degrees per node.
    let mut true_pose = Pose2D::new(0.0, 0.0, 0.0);
    let mut est = true_pose;
    let step = Pose2D::new(0.4, 0.0, 0.0);
    let turn = Pose2D::new(0.0, 0.0, std::f64::consts::FRAC_PI_2);
    // Stand-in view signature: the same 16 ids for every pose in a 0.5 m cell.
    let signature = |p: &Pose2D| -> Vec<usize> {
        let cell = ((p.x / 0.5).round() as i64 + 100) * 1000 + (p.y / 0.5).round() as i64 + 100;
        (0..16).map(|k| cell as usize * 16 + k).collect()
    };
    graph.maybe_add_node(est, 0.0, signature(&true_pose), &policy);
    truth.push(true_pose);
    let mut loops = 0;
    for k in 1..=41 {
        let mv = if k % 10 == 0 { step.compose(&turn) } else { step };
        true_pose = true_pose.compose(&mv);
        est = est.compose(&Pose2D::new(mv.x, mv.y, mv.theta + 0.026));
        graph.odometry.accumulate([mv.x, mv.y, mv.theta], &(Matrix3::identity() * 0.01), 1.0);
        if let Some(id) = graph.maybe_add_node(est, k as f64, signature(&true_pose), &policy) {
            truth.push(true_pose);
            if let Some(edge) = detect_loop_closure(&graph, id, &LoopClosureParams { max_distance: 3.0, ..params }, &|i| truth[i], &mut rng) {
                println!("loop closure {} -> {}", edge.from, edge.to);
                graph.add_edge(edge)?;
                loops += 1;
            }
        }
    }
    let before = graph.poses();
    let report = optimize_graph(&graph, &GnConfig::default())?;
    println!("{} nodes, {} edges, {loops} loop edges", graph.len(), graph.edges.len());
    println!("chi2 {:.3} -> {:.3} in {} iterations", graph_chi2(&graph.edges, &before), report.chi2.last().unwrap(), report.iterations);
    println!("position RMSE {:.3} m -> {:.3} m", rmse(&before, &truth), rmse(&report.poses, &truth));
    graph.set_poses(&report.poses)?;
    let mut g2o = Vec::new();
    graph.write_g2o(&mut g2o)?;
    let text = String::from_utf8_lossy(&g2o);
    println!("g2o dump: {} lines, first: {}", text.lines().count(), text.lines().next().unwrap_or(""));
    Ok(())
}
