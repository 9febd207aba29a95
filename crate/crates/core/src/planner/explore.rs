use super::frontier::detect_frontiers;
use super::navigation::NavigationMap;
use super::waypoint::{select_waypoint, PlannerConfig, Waypoint, WaypointDecision};
use crate::estimation::MergedState;
use crate::geometry::wrap_angle;
use crate::raycast::GridGeometry;
use crate::slamlite::CellClass;
use crate::worldsim::CameraModel;

/// Why the explorer chose a new goal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplanReason {
    Initial,
    Periodic,
    Reached,
    Blocked,
    Stuck,
    /// The base touched an obstacle.
    Contact,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExplorerStatus {
    /// Keep tracking the current goal.
    Tracking,
    /// No reachable frontier with enough utility remains.
    Complete,
}

/// Goal bookkeeping between control steps: periodic replanning, arrival,
/// blocked paths and a blacklist for goals the robot cannot make progress on.
#[derive(Debug, Clone)]
pub struct Explorer {
    pub cfg: PlannerConfig,
    pub cam: CameraModel,
    waypoint: Option<Waypoint>,
    last_plan: f64,
    best_progress: f64,
    progress_time: f64,
    blacklist: Vec<[f64; 2]>,
    replans: usize,
    last_reason: Option<ReplanReason>,
    contact: bool,
}

const PROGRESS_EPS: f64 = 0.02;

impl Explorer {
    pub fn new(cfg: PlannerConfig, cam: CameraModel) -> Self {
        Self {
            cfg,
            cam,
            waypoint: None,
            last_plan: f64::NEG_INFINITY,
            best_progress: f64::INFINITY,
            progress_time: 0.0,
            blacklist: Vec::new(),
            replans: 0,
            last_reason: None,
            contact: false,
        }
    }

    pub fn waypoint(&self) -> Option<&Waypoint> {
        self.waypoint.as_ref()
    }

    pub fn blacklist(&self) -> &[[f64; 2]] {
        &self.blacklist
    }

    pub fn replans(&self) -> usize {
        self.replans
    }

    pub fn last_reason(&self) -> Option<ReplanReason> {
        self.last_reason
    }

    /// Requests a replan at the next update.
    pub fn notify_contact(&mut self) {
        self.contact = true;
    }

    fn progress(&self, w: &Waypoint, state: &MergedState) -> f64 {
        (w.position[0] - state.x).hypot(w.position[1] - state.y) + 0.25 * wrap_angle(w.psi - state.psi).abs()
    }

    pub fn reached(&self, state: &MergedState) -> bool {
        self.waypoint.as_ref().is_some_and(|w| {
            (w.position[0] - state.x).hypot(w.position[1] - state.y) <= self.cfg.reach_tolerance
                && wrap_angle(w.psi - state.psi).abs() <= self.cfg.heading_tolerance
        })
    }

    fn blocked(&self, geom: &GridGeometry, classes: &[CellClass]) -> bool {
        self.waypoint.as_ref().is_some_and(|w| {
            w.path.iter().any(|p| geom.index_of(p[0], p[1]).is_none_or(|i| classes[i] == CellClass::Occupied))
        })
    }

    /// Advances the goal logic by one control step.
    pub fn update(&mut self, time: f64, state: &MergedState, geom: &GridGeometry, classes: &[CellClass]) -> ExplorerStatus {
        let reason = match &self.waypoint {
            None => Some(ReplanReason::Initial),
            Some(w) => {
                let p = self.progress(w, state);
                if p < self.best_progress - PROGRESS_EPS {
                    self.best_progress = p;
                    self.progress_time = time;
                }
                if self.reached(state) {
                    Some(ReplanReason::Reached)
                } else if self.contact {
                    Some(ReplanReason::Contact)
                } else if self.blocked(geom, classes) {
                    Some(ReplanReason::Blocked)
                } else if time - self.progress_time >= self.cfg.stuck_timeout {
                    self.blacklist.push(w.position);
                    Some(ReplanReason::Stuck)
                } else if time - self.last_plan >= self.cfg.replan_period {
                    Some(ReplanReason::Periodic)
                } else {
                    None
                }
            }
        };
        let Some(reason) = reason else { return ExplorerStatus::Tracking };
        self.contact = false;
        self.replans += 1;
        self.last_reason = Some(reason);
        self.last_plan = time;
        let nav = NavigationMap::new(geom.clone(), classes.to_vec(), self.cfg.nav);
        let Some(field) = nav.search([state.x, state.y]) else {
            self.waypoint = None;
            return ExplorerStatus::Complete;
        };
        let frontiers = detect_frontiers(geom, classes);
        match select_waypoint(&frontiers, state, &nav, &field, &self.cam, &self.cfg, &self.blacklist) {
            WaypointDecision::Goal(w) => {
                let same = self
                    .waypoint
                    .as_ref()
                    .is_some_and(|old| old.position == w.position && (old.psi - w.psi).abs() < 1e-12);
                if !same {
                    self.best_progress = self.progress(&w, state);
                    self.progress_time = time;
                }
                self.waypoint = Some(w);
                ExplorerStatus::Tracking
            }
            WaypointDecision::ExplorationComplete => {
                self.waypoint = None;
                ExplorerStatus::Complete
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix6;

    fn state(x: f64, y: f64, psi: f64) -> MergedState {
        MergedState { x, y, psi, vx: 0.0, vy: 0.0, dpsi: 0.0, cov: Matrix6::zeros(), time: 0.0 }
    }

    fn half_known() -> (GridGeometry, Vec<CellClass>) {
        let g = GridGeometry::new(80, 80, 0.05, [0.0, 0.0]);
        let mut c = vec![CellClass::Unknown; g.len()];
        for i in 0..g.len() {
            let (x, y) = g.coords(i);
            if x == 0 || y == 0 || x == 79 || y == 79 {
                c[i] = CellClass::Occupied;
            } else if x < 40 {
                c[i] = CellClass::Free;
            }
        }
        (g, c)
    }

    #[test]
    fn plans_toward_unknown_side() {
        let (g, c) = half_known();
        let mut e = Explorer::new(PlannerConfig::default(), CameraModel::default());
        assert_eq!(e.update(0.0, &state(1.0, 2.0, 0.0), &g, &c), ExplorerStatus::Tracking);
        let w = e.waypoint().unwrap();
        assert!(w.position[0] > 1.0);
        assert!(wrap_angle(w.psi).abs() < 1.0);
        assert_eq!(e.last_reason(), Some(ReplanReason::Initial));
    }

    #[test]
    fn fully_known_room_completes() {
        let (g, mut c) = half_known();
        for cl in c.iter_mut() {
            if *cl == CellClass::Unknown {
                *cl = CellClass::Free;
            }
        }
        let mut e = Explorer::new(PlannerConfig::default(), CameraModel::default());
        assert_eq!(e.update(0.0, &state(1.0, 2.0, 0.0), &g, &c), ExplorerStatus::Complete);
    }

    #[test]
    fn no_progress_blacklists_goal() {
        let (g, c) = half_known();
        let mut e = Explorer::new(PlannerConfig::default(), CameraModel::default());
        let s = state(1.0, 2.0, 0.0);
        e.update(0.0, &s, &g, &c);
        let mut t = 0.0;
        while e.blacklist().is_empty() && t < 20.0 {
            t += 0.1;
            e.update(t, &s, &g, &c);
        }
        assert_eq!(e.last_reason(), Some(ReplanReason::Stuck));
        assert!(t >= e.cfg.stuck_timeout - 1e-9);
    }

    #[test]
    fn contact_forces_replan() {
        let (g, c) = half_known();
        let mut e = Explorer::new(PlannerConfig::default(), CameraModel::default());
        let s = state(1.0, 2.0, 0.0);
        e.update(0.0, &s, &g, &c);
        e.update(0.1, &s, &g, &c);
        assert_eq!(e.replans(), 1);
        e.notify_contact();
        e.update(0.2, &s, &g, &c);
        assert_eq!(e.last_reason(), Some(ReplanReason::Contact));
        e.update(0.3, &s, &g, &c);
        assert_eq!(e.replans(), 2);
    }
}
