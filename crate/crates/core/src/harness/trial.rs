use nalgebra::{Matrix2, Matrix3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::estimation::{
    differential_imu, fuse_loop_closure_xy, merge_states, CameraFilter, Composition, GyroSample, JointModel,
    MergedState, RobotFilter, RobotFilterConfig, TimedEstimate,
};
use crate::geometry::{rotate, Pose2D};
use crate::kinematics::{extended_wheel_speeds, ExtendedVelocity};
use crate::metrics::{ate_rmse, balanced_accuracy, ground_truth_classes, loops_per_meter, wheel_rotation_per_meter, ConfusionMatrix};
use crate::planner::{
    obstacle_clearance, rh_solve, shift_plan, Explorer, ExplorerStatus, Platform, PlatformMode, Reference,
};
use crate::raycast::GridGeometry;
use crate::slamlite::{
    detect_loop_closure, marginal_covariance, optimize_graph, CellClass, OccupancyGrid, PoseGraph,
};
use crate::worldsim::{
    camera_observation, scan_match_odometry, synthesize_inertial_and_encoder, wheel_odometry, CameraObservation,
    Command, Environment, TrueState, World,
};

/// Signatures with fewer obstacle cells are too weak to match.
const MIN_SIGNATURE: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub enum TrialOutcome {
    /// No frontier left before the time limit.
    Completed,
    /// Ran for the full duration.
    TimedOut,
    Failed(String),
}

impl TrialOutcome {
    pub fn is_success(&self) -> bool {
        !matches!(self, TrialOutcome::Failed(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            TrialOutcome::Completed => "completed",
            TrialOutcome::TimedOut => "timeout",
            TrialOutcome::Failed(_) => "failed",
        }
    }
}

/// State after one control step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSample {
    pub time: f64,
    /// Merged estimate `(x, y, ψ)` in the map frame of the pose graph.
    pub estimate: Pose2D,
    /// True `(x, y, ψ)`.
    pub truth: Pose2D,
    pub true_theta: f64,
    pub command: ExtendedVelocity,
    /// Lateral body velocity realized by the wheels.
    pub body_vy: f64,
    /// Realized camera heading rate.
    pub heading_rate: f64,
    pub theta_var: f64,
    pub gamma_var: f64,
    pub psi_var: f64,
    /// Merged state equals the robot estimate component for component.
    pub identity_composition: bool,
    pub path_length: f64,
    pub wheel_rotation: f64,
    pub loops: usize,
    pub entropy_norm: f64,
    pub bac: f64,
    /// Running RMS position error of the map-frame estimate.
    pub ate: f64,
    pub solver_fault: bool,
    pub solver_monotone: bool,
    pub max_violation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopEvent {
    pub time: f64,
    pub from: usize,
    pub to: usize,
}

/// Final per-trial metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary {
    pub duration: f64,
    pub path_length: f64,
    pub wheel_rotation: f64,
    pub wheel_rotation_per_meter: Option<f64>,
    pub loops: usize,
    pub loops_per_meter: Option<f64>,
    /// Position error of the optimized graph nodes.
    pub ate: Option<f64>,
    /// Position error of the filter estimate over all steps.
    pub ate_filter: Option<f64>,
    /// Balanced accuracy of the map re-rendered from the optimized graph.
    pub bac: f64,
    /// Balanced accuracy of the online map.
    pub bac_online: f64,
    pub entropy_norm: f64,
    /// `Σ|Δθ|` of the true base heading.
    pub theta_variation: f64,
    pub max_body_vy: f64,
    pub max_heading_rate: f64,
    pub max_violation: f64,
}

#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub platform: Platform,
    pub seed: u64,
    pub outcome: TrialOutcome,
    pub samples: Vec<StepSample>,
    pub loop_events: Vec<LoopEvent>,
    pub graph: PoseGraph,
    /// True camera pose at each node's timestamp.
    pub node_truth: Vec<Pose2D>,
    pub geometry: GridGeometry,
    pub online_map: OccupancyGrid,
    pub final_map: OccupancyGrid,
    pub ground_truth: Vec<CellClass>,
    /// `(time, classes)` of the online map at the configured period.
    pub snapshots: Vec<(f64, Vec<CellClass>)>,
    /// Robot filter estimate after every step when recording is enabled.
    pub trace: Vec<TimedEstimate>,
    pub replans: usize,
    pub summary: TrialSummary,
}

struct Frame {
    node: usize,
    rel: Pose2D,
    obs: CameraObservation,
}

fn camera_pose(s: &TrueState) -> Pose2D {
    Pose2D::new(s.pose.x, s.pose.y, s.camera_heading())
}

/// Estimate re-expressed in the map frame of the optimized graph: the last
/// node composed with the filter motion since that node was anchored.
fn map_frame(graph: &PoseGraph, anchor: &Pose2D, merged: &MergedState) -> MergedState {
    let node = graph.last().map_or(*anchor, |n| n.pose);
    let p = node.compose(&anchor.between(&merged.pose()));
    MergedState { x: p.x, y: p.y, psi: p.theta, ..merged.clone() }
}

/// World-frame velocity reversing the attempted translation; along the base
/// axis when the mode forbids lateral motion.
fn back_off(command: &ExtendedVelocity, theta: f64, mode: PlatformMode, speed: f64) -> [f64; 2] {
    let n = command.vx.hypot(command.vy);
    let dir = if n > 1e-9 { [-command.vx / n, -command.vy / n] } else { [-theta.cos(), -theta.sin()] };
    if mode == PlatformMode::Y0 {
        let h = [theta.cos(), theta.sin()];
        let s = if dir[0] * h[0] + dir[1] * h[1] > 0.0 { speed } else { -speed };
        return [s * h[0], s * h[1]];
    }
    [speed * dir[0], speed * dir[1]]
}

fn footprint(geom: &GridGeometry, c: [f64; 2], radius: f64) -> Vec<usize> {
    let mut out = Vec::new();
    for idx in 0..geom.len() {
        let p = geom.center_of_index(idx);
        if (p[0] - c[0]).hypot(p[1] - c[1]) <= radius {
            out.push(idx);
        }
    }
    out
}

struct MapTracker {
    grid: OccupancyGrid,
    classes: Vec<CellClass>,
    confusion: ConfusionMatrix,
}

impl MapTracker {
    fn apply(&mut self, cells: &[(usize, bool)], gt: &[CellClass]) {
        self.grid.update_occupancy(cells);
        for &(idx, _) in cells {
            let new = self.grid.classify(idx);
            let old = self.classes[idx];
            if new != old {
                self.confusion.reclassify(gt[idx], old, new);
                self.classes[idx] = new;
            }
        }
    }

    fn mark_free(&mut self, cells: &[usize], gt: &[CellClass]) -> Result<()> {
        for &idx in cells {
            self.grid.set_probability(idx, 0.2)?;
            let old = self.classes[idx];
            if old != CellClass::Free {
                self.confusion.reclassify(gt[idx], old, CellClass::Free);
                self.classes[idx] = CellClass::Free;
            }
        }
        Ok(())
    }
}

fn step_failure(e: Error) -> Error {
    match e {
        Error::TrialFailed(_) => e,
        other => Error::TrialFailed(other.to_string()),
    }
}

/// Runs one closed-loop exploration trial: sense, estimate, merge, map and
/// graph, plan, control and step the world at the control rate until the
/// duration elapses or no frontier is left. Deterministic in `(cfg, seed)`.
///
/// Persistent solver faults or contact fail the trial through the outcome;
/// numerical breakdowns return an error.
pub fn run_trial(cfg: &ExperimentConfig, env: &Environment, seed: u64) -> Result<TrialRecord> {
    cfg.validate()?;
    let platform = cfg.platform();
    let start = cfg.start_pose();
    let geom = env.geometry;
    let cam = cfg.sensors.camera();
    let tick = cfg.sensors.encoder_tick();
    let dt = cfg.ctrl.step_dt;
    let steps = ((cfg.duration / dt).round() as usize).max(1);
    let composition = if platform.merged { Composition::Merged } else { Composition::NoComposition };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut loop_rng = ChaCha8Rng::seed_from_u64(seed);
    loop_rng.set_stream(1);

    let mut world = World::new(env.clone(), cfg.kin.clone(), cfg.sim.robot_radius, cfg.sim.dt, start)?;
    let mut robot = RobotFilter::new(
        start,
        Matrix3::identity() * 1e-6,
        [1e-4, 1e-4, 1e-4],
        RobotFilterConfig::default(),
    )?;
    let mut camera = if platform.mode.camera_locked() {
        CameraFilter::locked()
    } else {
        CameraFilter::new(0.0, [1e-6, 1e-4], tick, JointModel::default())?
    };
    let ground_truth = ground_truth_classes(env, [start.x, start.y]);
    let est_classes = vec![CellClass::Unknown; geom.len()];
    let mut map = MapTracker {
        confusion: ConfusionMatrix::from_classes(&est_classes, &ground_truth)?,
        grid: OccupancyGrid::new(geom, cfg.slam.log_odds),
        classes: est_classes,
    };
    let foot = footprint(&geom, [start.x, start.y], cfg.sim.robot_radius);
    map.mark_free(&foot, &ground_truth)?;

    let merge_now = |robot: &RobotFilter, camera: &CameraFilter, time: f64| {
        merge_states(
            &TimedEstimate { est: robot.estimate().clone(), time },
            &TimedEstimate { est: camera.estimate().clone(), time },
            composition,
        )
    };
    let mut merged = merge_now(&robot, &camera, 0.0)?;

    let mut graph = PoseGraph::new();
    let mut node_truth = Vec::new();
    let mut frames: Vec<Frame> = Vec::new();
    let mut anchor_est = merged.pose();
    let mut loop_events = Vec::new();

    let observe = |world: &World, pose: &MergedState| -> Result<(CameraObservation, Vec<(usize, bool)>, Vec<usize>)> {
        let s = world.state();
        let obs = camera_observation(&world.env, &s.pose, s.camera_heading(), &cam)?;
        let cells = obs.project(&geom, pose.x, pose.y, pose.psi, cam.max_depth);
        let mut sig: Vec<usize> = obs.cells.iter().filter(|c| c.1).map(|c| c.0).collect();
        if sig.len() < MIN_SIGNATURE {
            sig.clear();
        }
        Ok((obs, cells, sig))
    };

    let (obs0, cells0, sig0) = observe(&world, &merged)?;
    map.apply(&cells0, &ground_truth);
    graph.maybe_add_node(merged.pose(), 0.0, sig0, &cfg.slam.node);
    node_truth.push(camera_pose(world.state()));
    frames.push(Frame { node: 0, rel: Pose2D::default(), obs: CameraObservation { rays: obs0.rays, cells: Vec::new() } });

    let mut explorer = Explorer::new(cfg.planner, cam);
    let mut plan: Vec<ExtendedVelocity> = Vec::new();
    let mut samples = Vec::with_capacity(steps);
    let mut snapshots = Vec::new();
    let mut next_snapshot = if cfg.sim.snapshot_every > 0.0 { 0.0 } else { f64::INFINITY };
    let mut trace = Vec::new();
    let mut fault_time = 0.0;
    let mut contact_time = 0.0;
    let mut sq_err = 0.0;
    let mut theta_variation = 0.0;
    let (mut max_body_vy, mut max_heading_rate, mut max_violation) = (0.0f64, 0.0f64, 0.0f64);
    let mut outcome = TrialOutcome::TimedOut;
    let mut corrected = merged.clone();
    let mut retreat: Option<(f64, [f64; 2])> = None;
    let wheel_inv = cfg.kin.wheel_matrix().try_inverse().unwrap_or_else(Matrix3::zeros) * cfg.kin.wheel_radius;

    for k in 0..steps {
        let t = k as f64 * dt;
        if t >= next_snapshot {
            snapshots.push((t, map.classes.clone()));
            next_snapshot += cfg.sim.snapshot_every;
        }
        let theta_hat = corrected.psi - camera.estimate().mean[0];
        let status = explorer.update(t, &corrected, &geom, &map.classes);
        if status == ExplorerStatus::Complete && cfg.sim.stop_when_complete && k > 0 {
            outcome = TrialOutcome::Completed;
            break;
        }
        let reference = match explorer.waypoint() {
            Some(w) => Reference::along_path(&w.path, [corrected.x, corrected.y], w.psi, &cfg.ctrl),
            None => Reference::hold([corrected.x, corrected.y], corrected.psi, &cfg.ctrl),
        };
        let warm = shift_plan(&plan);
        let classes = &map.classes;
        let radius = cfg.sim.robot_radius;
        let guard = radius + cfg.ctrl.clearance_margin;
        let here = obstacle_clearance(&geom, classes, [corrected.x, corrected.y], guard);
        let collides = |p: [f64; 2]| {
            let c = obstacle_clearance(&geom, classes, p, guard);
            c < radius || (c < guard && c < here)
        };
        let sol = rh_solve(&corrected, theta_hat, &reference, platform.mode, &cfg.ctrl, Some(&warm), &collides);
        let monotone = sol.cost_history.windows(2).all(|w| w[1] <= w[0]);
        max_violation = max_violation.max(sol.max_violation);
        plan = if sol.fault { Vec::new() } else { sol.plan.clone() };
        let mut command = sol.command;
        let mut fault = sol.fault;
        if let Some((until, v)) = retreat {
            if t < until - 1e-9 {
                command = ExtendedVelocity::new(v[0], v[1], 0.0, 0.0);
                plan.clear();
            } else {
                retreat = None;
            }
        }
        let wheels = match extended_wheel_speeds(theta_hat, &command, &cfg.kin) {
            Ok(w) if w.check_limit(cfg.kin.wheel_limit).is_ok() => w,
            _ => {
                fault = true;
                command = ExtendedVelocity::ZERO;
                extended_wheel_speeds(theta_hat, &command, &cfg.kin)?
            }
        };
        fault_time = if fault { fault_time + dt } else { 0.0 };

        let prev_true = world.state().pose;
        world.step(Command::Wheels(wheels), dt)?;
        contact_time = if world.in_contact() { contact_time + dt } else { 0.0 };
        let time = (k + 1) as f64 * dt;
        if world.in_contact() && retreat.is_none() {
            retreat = Some((time + cfg.ctrl.retreat_time, back_off(&command, theta_hat, platform.mode, cfg.ctrl.retreat_speed)));
            explorer.notify_contact();
        }
        let s = *world.state();
        theta_variation += crate::geometry::wrap_angle(s.pose.theta - prev_true.theta).abs();
        let realized = wheel_inv * nalgebra::Vector3::from(world.last_wheels().wheels);
        max_body_vy = max_body_vy.max(realized[1].abs());
        max_heading_rate = max_heading_rate.max((s.twist.dtheta + s.dgamma).abs());

        let odom = wheel_odometry(world.last_wheels(), &cfg.kin, &cfg.noise, &mut rng);
        let delta = scan_match_odometry(&prev_true, &s.pose, &cfg.noise, &mut rng);
        let imu = synthesize_inertial_and_encoder(&s, &cfg.noise, tick, &mut rng);
        let gyro_var = cfg.noise.gyro_sigma.powi(2).max(1e-12);
        let estimate = (|| -> Result<()> {
            robot.update_wheel_odometry(&odom, dt)?;
            robot.update_gyro(imu.base_gyro, gyro_var)?;
            robot.update_scan_match(&delta, dt)?;
            robot.predict(dt)?;
            let d = differential_imu(GyroSample { rate: imu.base_gyro, time }, GyroSample { rate: imu.cam_gyro, time })?;
            camera.update_rate(&d)?;
            camera.predict(dt)?;
            camera.update_encoder(imu.encoder_ticks)?;
            Ok(())
        })();
        estimate.map_err(step_failure)?;
        merged = merge_now(&robot, &camera, time)?;
        corrected = map_frame(&graph, &anchor_est, &merged);

        let (obs, cells, sig) = observe(&world, &corrected)?;
        map.apply(&cells, &ground_truth);

        let gamma_hat = camera.estimate().mean[0];
        let v = rotate(-gamma_hat, [merged.vx, merged.vy]);
        let mut vcov = merged.velocity_cov();
        let (sg, cg) = (-gamma_hat).sin_cos();
        let rot = Matrix3::new(cg, -sg, 0.0, sg, cg, 0.0, 0.0, 0.0, 1.0);
        vcov = rot * vcov * rot.transpose();
        graph.odometry.accumulate([v[0], v[1], merged.dpsi], &vcov, dt);
        if let Some(id) = graph.maybe_add_node(merged.pose(), time, sig, &cfg.slam.node) {
            node_truth.push(camera_pose(&s));
            anchor_est = merged.pose();
            let truth = |i: usize| node_truth[i];
            if let Some(edge) = detect_loop_closure(&graph, id, &cfg.slam.loop_closure, &truth, &mut loop_rng) {
                loop_events.push(LoopEvent { time, from: edge.from, to: edge.to });
                graph.add_edge(edge)?;
                let report = optimize_graph(&graph, &cfg.slam.gn()).map_err(step_failure)?;
                graph.set_poses(&report.poses)?;
                let cov = marginal_covariance(&graph, &report.poses, id).map_err(step_failure)?;
                let p = report.poses[id];
                let cov_xy = Matrix2::new(cov[(0, 0)], cov[(0, 1)], cov[(1, 0)], cov[(1, 1)]);
                let fused = fuse_loop_closure_xy(robot.estimate(), [p.x, p.y], cov_xy).map_err(step_failure)?;
                robot.set_estimate(fused);
                merged = merge_now(&robot, &camera, time)?;
                graph.reset_anchor(merged.pose());
                anchor_est = merged.pose();
            }
            corrected = map_frame(&graph, &anchor_est, &merged);
        }
        let node = graph.len() - 1;
        frames.push(Frame {
            node,
            rel: anchor_est.between(&merged.pose()),
            obs: CameraObservation { rays: obs.rays, cells: Vec::new() },
        });

        let tp = camera_pose(&s);
        sq_err += (corrected.x - tp.x).powi(2) + (corrected.y - tp.y).powi(2);
        let r = robot.estimate();
        let identity = merged.psi == r.mean[2]
            && merged.x == r.mean[0]
            && merged.y == r.mean[1]
            && merged.cov.iter().zip(r.cov.iter()).all(|(a, b)| a == b);
        samples.push(StepSample {
            time,
            estimate: corrected.pose(),
            truth: tp,
            true_theta: s.pose.theta,
            command,
            body_vy: realized[1],
            heading_rate: s.twist.dtheta + s.dgamma,
            theta_var: r.cov[(2, 2)],
            gamma_var: camera.estimate().cov[(0, 0)],
            psi_var: merged.cov[(2, 2)],
            identity_composition: identity,
            path_length: world.path_length(),
            wheel_rotation: world.wheel_rotation(),
            loops: graph.loop_count(),
            entropy_norm: map.grid.map_entropy().normalized,
            bac: map.confusion.balanced_accuracy(),
            ate: (sq_err / samples.len().saturating_add(1) as f64).sqrt(),
            solver_fault: sol.fault,
            solver_monotone: monotone,
            max_violation: sol.max_violation,
        });
        if cfg.sim.record_trace {
            trace.push(TimedEstimate { est: robot.estimate().clone(), time });
        }
        if fault_time > cfg.sim.fault_timeout {
            outcome = TrialOutcome::Failed(format!("controller fault for more than {} s at t = {time:.1} s", cfg.sim.fault_timeout));
            break;
        }
        if contact_time > cfg.sim.fault_timeout {
            outcome = TrialOutcome::Failed(format!("contact for more than {} s at t = {time:.1} s", cfg.sim.fault_timeout));
            break;
        }
    }

    let mut final_map = OccupancyGrid::new(geom, cfg.slam.log_odds);
    for &idx in &foot {
        final_map.set_probability(idx, 0.2)?;
    }
    for f in &frames {
        let p = graph.nodes[f.node].pose.compose(&f.rel);
        final_map.update_occupancy(&f.obs.project(&geom, p.x, p.y, p.theta, cam.max_depth));
    }
    let bac = balanced_accuracy(&final_map.classes(), &ground_truth)?;

    let node_est: Vec<(f64, Pose2D)> = graph.nodes.iter().map(|n| (n.timestamp, n.pose)).collect();
    let node_gt: Vec<(f64, Pose2D)> = graph.nodes.iter().zip(&node_truth).map(|(n, p)| (n.timestamp, *p)).collect();
    let est_traj: Vec<(f64, Pose2D)> = samples.iter().map(|s| (s.time, s.estimate)).collect();
    let gt_traj: Vec<(f64, Pose2D)> = samples.iter().map(|s| (s.time, s.truth)).collect();
    let duration = samples.last().map_or(0.0, |s| s.time);
    let path_length = world.path_length();
    let summary = TrialSummary {
        duration,
        path_length,
        wheel_rotation: world.wheel_rotation(),
        wheel_rotation_per_meter: wheel_rotation_per_meter(world.wheel_rotation(), path_length),
        loops: graph.loop_count(),
        loops_per_meter: loops_per_meter(graph.loop_count(), path_length),
        ate: ate_rmse(&node_est, &node_gt).ok(),
        ate_filter: ate_rmse(&est_traj, &gt_traj).ok(),
        bac,
        bac_online: map.confusion.balanced_accuracy(),
        entropy_norm: map.grid.map_entropy().normalized,
        theta_variation,
        max_body_vy,
        max_heading_rate,
        max_violation,
    };
    Ok(TrialRecord {
        platform,
        seed,
        outcome,
        samples,
        loop_events,
        graph,
        node_truth,
        geometry: geom,
        online_map: map.grid,
        final_map,
        ground_truth,
        snapshots,
        trace,
        replans: explorer.replans(),
        summary,
    })
}
