use serde::{Deserialize, Serialize};

use super::modes::{apply_mode_constraints, ConstraintSet, PlatformMode};
use crate::error::{Error, Result};
use crate::estimation::MergedState;
use crate::geometry::wrap_angle;
use crate::kinematics::ExtendedVelocity;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    pub horizon_steps: usize,
    pub step_dt: f64,
    pub v_max: f64,
    pub omega_max: f64,
    pub w_position: f64,
    pub w_heading: f64,
    /// Weight on every control component, camera rotation included.
    pub w_effort: f64,
    /// Stop when the projected-gradient step falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Speed at which the position reference advances along the path.
    pub ref_speed: f64,
    /// Distance ahead on the path used as the steering target, meters.
    pub lookahead: f64,
    /// Proportional gain of the pure-pursuit base heading law.
    pub pursuit_gain: f64,
    /// Extra clearance kept from mapped obstacles by the rollout check, meters.
    pub clearance_margin: f64,
    /// Duration of the back-off after touching an obstacle, seconds.
    pub retreat_time: f64,
    /// Back-off speed, m/s.
    pub retreat_speed: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            horizon_steps: 20,
            step_dt: 0.1,
            v_max: 1.0,
            omega_max: 1.0,
            w_position: 1.0,
            w_heading: 0.5,
            w_effort: 0.05,
            tolerance: 1e-6,
            max_iterations: 300,
            ref_speed: 0.3,
            lookahead: 0.5,
            pursuit_gain: 1.5,
            clearance_margin: 0.1,
            retreat_time: 0.5,
            retreat_speed: 0.2,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = [self.step_dt, self.v_max, self.omega_max, self.tolerance, self.ref_speed, self.lookahead, self.pursuit_gain];
        if self.horizon_steps == 0 || pos.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Config("ctrl: horizon, step and limits must be positive".into()));
        }
        let non_neg = [self.clearance_margin, self.retreat_time, self.retreat_speed];
        if non_neg.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Config("ctrl: clearance margin and retreat must be non-negative".into()));
        }
        if [self.w_position, self.w_heading, self.w_effort].iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Config("ctrl: weights must be non-negative".into()));
        }
        Ok(())
    }
}

/// Tracking targets over the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    /// Position reference for steps `1..=N`.
    pub positions: Vec<[f64; 2]>,
    /// Camera heading reference.
    pub psi: f64,
    /// Steering point for the pure-pursuit base law.
    pub pursuit_target: Option<[f64; 2]>,
}

fn point_at(path: &[[f64; 2]], s: f64) -> [f64; 2] {
    let mut acc = 0.0;
    for w in path.windows(2) {
        let l = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
        if acc + l >= s && l > 0.0 {
            let t = (s - acc) / l;
            return [w[0][0] + t * (w[1][0] - w[0][0]), w[0][1] + t * (w[1][1] - w[0][1])];
        }
        acc += l;
    }
    *path.last().expect("non-empty path")
}

fn project_on_path(path: &[[f64; 2]], p: [f64; 2]) -> f64 {
    let (mut best, mut best_s, mut acc) = (f64::INFINITY, 0.0, 0.0);
    for w in path.windows(2) {
        let (dx, dy) = (w[1][0] - w[0][0], w[1][1] - w[0][1]);
        let l2 = dx * dx + dy * dy;
        let t = if l2 > 0.0 { (((p[0] - w[0][0]) * dx + (p[1] - w[0][1]) * dy) / l2).clamp(0.0, 1.0) } else { 0.0 };
        let d = (w[0][0] + t * dx - p[0]).hypot(w[0][1] + t * dy - p[1]);
        if d < best {
            best = d;
            best_s = acc + t * l2.sqrt();
        }
        acc += l2.sqrt();
    }
    best_s
}

impl Reference {
    /// Holds position and heading.
    pub fn hold(position: [f64; 2], psi: f64, cfg: &ControllerConfig) -> Self {
        Self { positions: vec![position; cfg.horizon_steps], psi, pursuit_target: None }
    }

    /// A carrot advancing along `path` from the point nearest to `position`.
    pub fn along_path(path: &[[f64; 2]], position: [f64; 2], psi: f64, cfg: &ControllerConfig) -> Self {
        if path.len() < 2 {
            return Self::hold(path.first().copied().unwrap_or(position), psi, cfg);
        }
        let s0 = project_on_path(path, position);
        let positions = (1..=cfg.horizon_steps).map(|k| point_at(path, s0 + cfg.ref_speed * cfg.step_dt * k as f64)).collect();
        let target = point_at(path, s0 + cfg.lookahead);
        let far = (target[0] - position[0]).hypot(target[1] - position[1]) > 0.05;
        Self { positions, psi, pursuit_target: far.then_some(target) }
    }
}

/// Base heading rates of a pure-pursuit law over the horizon, steering the
/// base toward `target` from `position` starting at heading `theta`.
pub fn pure_pursuit_rates(theta: f64, position: [f64; 2], target: Option<[f64; 2]>, cfg: &ControllerConfig) -> Vec<f64> {
    let Some(t) = target else { return vec![0.0; cfg.horizon_steps] };
    let bearing = (t[1] - position[1]).atan2(t[0] - position[0]);
    let mut th = theta;
    (0..cfg.horizon_steps)
        .map(|_| {
            let r = (cfg.pursuit_gain * wrap_angle(bearing - th)).clamp(-cfg.omega_max, cfg.omega_max);
            th += r * cfg.step_dt;
            r
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhSolution {
    /// First control of the optimized sequence.
    pub command: ExtendedVelocity,
    pub plan: Vec<ExtendedVelocity>,
    /// Objective after every iteration, starting with the initial guess.
    pub cost_history: Vec<f64>,
    pub iterations: usize,
    pub max_violation: f64,
    /// Solver could not produce an admissible plan; the command is zero.
    pub fault: bool,
    /// The predicted rollout hits an obstacle; translation was zeroed.
    pub collision: bool,
}

struct Problem<'a> {
    p0: [f64; 2],
    theta0: f64,
    psi0: f64,
    reference: &'a Reference,
    cfg: &'a ControllerConfig,
    set: ConstraintSet,
    /// Pinned base rates (Y0 only).
    fixed_dtheta: Option<Vec<f64>>,
}

type Plan = Vec<[f64; 4]>;

impl Problem<'_> {
    fn thetas(&self, u: &Plan) -> Vec<f64> {
        let mut th = self.theta0;
        u.iter()
            .map(|c| {
                let t = th;
                th += c[2] * self.cfg.step_dt;
                t
            })
            .collect()
    }

    fn cost(&self, u: &Plan) -> f64 {
        let c = self.cfg;
        let (mut p, mut psi, mut j) = (self.p0, self.psi0, 0.0);
        for (k, uk) in u.iter().enumerate() {
            j += c.w_effort * uk.iter().map(|v| v * v).sum::<f64>();
            p[0] += uk[0] * c.step_dt;
            p[1] += uk[1] * c.step_dt;
            psi += (uk[2] + uk[3]) * c.step_dt;
            let r = self.reference.positions[k];
            j += c.w_position * ((p[0] - r[0]).powi(2) + (p[1] - r[1]).powi(2));
            j += c.w_heading * wrap_angle(psi - self.reference.psi).powi(2);
        }
        j
    }

    fn gradient(&self, u: &Plan) -> Plan {
        let c = self.cfg;
        let n = u.len();
        let mut ex = vec![[0.0; 3]; n];
        let (mut p, mut psi) = (self.p0, self.psi0);
        for (k, uk) in u.iter().enumerate() {
            p[0] += uk[0] * c.step_dt;
            p[1] += uk[1] * c.step_dt;
            psi += (uk[2] + uk[3]) * c.step_dt;
            let r = self.reference.positions[k];
            ex[k] = [p[0] - r[0], p[1] - r[1], wrap_angle(psi - self.reference.psi)];
        }
        let mut g = vec![[0.0; 4]; n];
        let mut lam = [0.0; 3];
        for k in (0..n).rev() {
            lam[0] += 2.0 * c.w_position * ex[k][0];
            lam[1] += 2.0 * c.w_position * ex[k][1];
            lam[2] += 2.0 * c.w_heading * ex[k][2];
            g[k] = [
                lam[0] * c.step_dt + 2.0 * c.w_effort * u[k][0],
                lam[1] * c.step_dt + 2.0 * c.w_effort * u[k][1],
                lam[2] * c.step_dt + 2.0 * c.w_effort * u[k][2],
                lam[2] * c.step_dt + 2.0 * c.w_effort * u[k][3],
            ];
        }
        g
    }

    fn project(&self, u: &Plan) -> Plan {
        let mut out = Vec::with_capacity(u.len());
        let mut th = self.theta0;
        for (k, uk) in u.iter().enumerate() {
            let fixed = self.fixed_dtheta.as_ref().map(|f| f[k]);
            let p = self.set.project(&ExtendedVelocity::new(uk[0], uk[1], uk[2], uk[3]), th, fixed);
            th += p.dtheta * self.cfg.step_dt;
            out.push([p.vx, p.vy, p.dtheta, p.dgamma]);
        }
        out
    }

    fn lipschitz(&self) -> f64 {
        let c = self.cfg;
        let n = c.horizon_steps as f64;
        let chain = c.step_dt * c.step_dt * n * (n + 1.0) / 2.0;
        (2.0 * c.w_position * chain).max(4.0 * c.w_heading * chain) + 2.0 * c.w_effort
    }
}

fn to_velocity(u: &[f64; 4]) -> ExtendedVelocity {
    ExtendedVelocity::new(u[0], u[1], u[2], u[3])
}

/// Receding-horizon tracking of a position and camera-heading reference under
/// the mode constraints, solved by monotone accelerated projected gradient.
///
/// `theta` is the estimated base heading (the camera joint angle is
/// `state.psi - theta`). `warm_start` is the previous plan, shifted by one
/// step. `collides` is evaluated on the predicted positions.
pub fn rh_solve(
    state: &MergedState,
    theta: f64,
    reference: &Reference,
    mode: PlatformMode,
    cfg: &ControllerConfig,
    warm_start: Option<&[ExtendedVelocity]>,
    collides: &dyn Fn([f64; 2]) -> bool,
) -> RhSolution {
    let n = cfg.horizon_steps;
    let zero = RhSolution {
        command: ExtendedVelocity::ZERO,
        plan: vec![ExtendedVelocity::ZERO; n],
        cost_history: Vec::new(),
        iterations: 0,
        max_violation: 0.0,
        fault: true,
        collision: false,
    };
    let Ok(set) = apply_mode_constraints(mode, cfg.v_max, cfg.omega_max) else { return zero };
    let finite = [state.x, state.y, state.psi, theta, reference.psi].iter().all(|v| v.is_finite())
        && reference.positions.len() == n
        && reference.positions.iter().all(|p| p[0].is_finite() && p[1].is_finite());
    if cfg.validate().is_err() || !finite {
        return zero;
    }
    let fixed_dtheta = (mode == PlatformMode::Y0)
        .then(|| pure_pursuit_rates(theta, [state.x, state.y], reference.pursuit_target, cfg));
    let prob = Problem { p0: [state.x, state.y], theta0: theta, psi0: state.psi, reference, cfg, set, fixed_dtheta };

    let init: Plan = match warm_start {
        Some(w) if w.len() == n => w.iter().map(|v| [v.vx, v.vy, v.dtheta, v.dgamma]).collect(),
        _ => vec![[0.0; 4]; n],
    };
    let mut x = prob.project(&init);
    let mut fx = prob.cost(&x);
    let mut history = vec![fx];
    let step = 1.0 / prob.lipschitz();
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut iterations = 0;
    for _ in 0..cfg.max_iterations {
        iterations += 1;
        let g = prob.gradient(&y);
        let trial: Plan = y.iter().zip(&g).map(|(yk, gk)| std::array::from_fn(|i| yk[i] - step * gk[i])).collect();
        let z = prob.project(&trial);
        let fz = prob.cost(&z);
        let moved = z.iter().zip(&y).flat_map(|(a, b)| a.iter().zip(b).map(|(p, q)| (p - q).abs())).fold(0.0, f64::max);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let x_prev = x.clone();
        if fz <= fx {
            x = z.clone();
            fx = fz;
        }
        history.push(fx);
        if moved < cfg.tolerance {
            break;
        }
        y = (0..n)
            .map(|k| {
                std::array::from_fn(|i| {
                    x[k][i] + (t / t_next) * (z[k][i] - x[k][i]) + ((t - 1.0) / t_next) * (x[k][i] - x_prev[k][i])
                })
            })
            .collect();
        y = prob.project(&y);
        t = t_next;
    }

    let thetas = prob.thetas(&x);
    let max_violation = x
        .iter()
        .enumerate()
        .map(|(k, u)| set.violation(&to_velocity(u), thetas[k], prob.fixed_dtheta.as_ref().map(|f| f[k])))
        .fold(0.0, f64::max);
    if max_violation > 1e-6 {
        return RhSolution { cost_history: history, iterations, max_violation, ..zero };
    }
    let mut p = [state.x, state.y];
    let mut collision = false;
    for u in &x {
        p[0] += u[0] * cfg.step_dt;
        p[1] += u[1] * cfg.step_dt;
        if collides(p) {
            collision = true;
            break;
        }
    }
    let plan: Vec<ExtendedVelocity> = x.iter().map(to_velocity).collect();
    let mut command = plan[0];
    if collision {
        command.vx = 0.0;
        command.vy = 0.0;
    }
    RhSolution { command, plan, cost_history: history, iterations, max_violation, fault: false, collision }
}

/// Shifts a plan one step forward, repeating the last control.
pub fn shift_plan(plan: &[ExtendedVelocity]) -> Vec<ExtendedVelocity> {
    if plan.is_empty() {
        return Vec::new();
    }
    let mut out = plan[1..].to_vec();
    out.push(*plan.last().unwrap());
    out
}
