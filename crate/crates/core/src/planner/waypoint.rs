use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::frontier::FrontierCluster;
use super::navigation::{path_length, CostField, NavConfig, NavigationMap};
use crate::estimation::MergedState;
use crate::geometry::wrap_angle;
use crate::raycast::{traverse, GridGeometry};
use crate::slamlite::CellClass;
use crate::worldsim::CameraModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    /// Candidate headings per waypoint, evenly spaced.
    pub headings: usize,
    /// Added to the path length in the utility/cost ratio, meters.
    pub path_offset: f64,
    /// Candidates seeing fewer unknown cells are ignored.
    pub min_utility: f64,
    /// Seconds between periodic replans.
    pub replan_period: f64,
    pub reach_tolerance: f64,
    pub heading_tolerance: f64,
    /// Seconds without progress before a waypoint is blacklisted.
    pub stuck_timeout: f64,
    /// Radius around blacklisted points excluded from selection, meters.
    pub blacklist_radius: f64,
    pub nav: NavConfig,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            headings: 36,
            path_offset: 1.0,
            min_utility: 5.0,
            replan_period: 2.0,
            reach_tolerance: 0.15,
            heading_tolerance: 0.15,
            stuck_timeout: 6.0,
            blacklist_radius: 0.5,
            nav: NavConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Waypoint {
    pub position: [f64; 2],
    /// Desired camera heading.
    pub psi: f64,
    /// Unknown cells expected inside the camera sector.
    pub utility: f64,
    pub path: Vec<[f64; 2]>,
    pub path_length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WaypointDecision {
    Goal(Waypoint),
    ExplorationComplete,
}

const FAN_BINS: usize = 360;

/// Unknown cells first reached by each 1° ray of a full fan from `pos`.
/// Rays stop at occupied cells and at the camera depth; each cell is
/// credited to one ray only.
pub fn polar_unknown_bins(geom: &GridGeometry, classes: &[CellClass], pos: [f64; 2], max_depth: f64) -> Vec<f64> {
    let mut seen = vec![false; geom.len()];
    let mut bins = vec![0.0; FAN_BINS];
    for (j, bin) in bins.iter_mut().enumerate() {
        let angle = (j as f64).to_radians();
        traverse(geom, pos, angle, max_depth, |idx, _| match classes[idx] {
            CellClass::Occupied => false,
            CellClass::Unknown => {
                if !seen[idx] {
                    seen[idx] = true;
                    *bin += 1.0;
                }
                true
            }
            CellClass::Free => true,
        });
    }
    bins
}

/// Sector utility for `n` evenly spaced world headings starting at 0.
pub fn heading_utilities(bins: &[f64], fov: f64, n: usize) -> Vec<f64> {
    let half = 0.5 * fov + 1e-9;
    (0..n)
        .map(|i| {
            let h = 2.0 * PI * i as f64 / n as f64;
            bins.iter()
                .enumerate()
                .filter(|(j, _)| wrap_angle((*j as f64).to_radians() - h).abs() <= half)
                .map(|(_, v)| v)
                .sum()
        })
        .collect()
}

/// Reachable cell nearest to `p`, searching square rings outward.
pub fn nearest_reachable(geom: &GridGeometry, field: &CostField, nav: &NavigationMap, p: [f64; 2]) -> Option<usize> {
    let res = geom.resolution;
    let cx = ((p[0] - geom.origin[0]) / res).floor() as isize;
    let cy = ((p[1] - geom.origin[1]) / res).floor() as isize;
    let max_r = geom.width.max(geom.height) as isize;
    let mut best: Option<(f64, usize)> = None;
    for r in 0..=max_r {
        if let Some((d, _)) = best {
            if (r as f64 - 1.0) * res > d {
                break;
            }
        }
        for dy in -r..=r {
            for dx in -r..=r {
                if dx.abs() != r && dy.abs() != r {
                    continue;
                }
                let (x, y) = (cx + dx, cy + dy);
                if x < 0 || y < 0 || x >= geom.width as isize || y >= geom.height as isize {
                    continue;
                }
                let idx = geom.index(x as usize, y as usize);
                if !field.reachable(idx) || !nav.is_traversable(idx) && idx != field.start {
                    continue;
                }
                let c = geom.center_of_index(idx);
                let d = (c[0] - p[0]).hypot(c[1] - p[1]);
                if best.is_none_or(|(bd, bi)| d < bd || (d == bd && idx < bi)) {
                    best = Some((d, idx));
                }
            }
        }
    }
    best.map(|(_, i)| i)
}

/// Scores every (frontier candidate, heading) pair by utility over
/// `path_length + path_offset` and returns the best; ties go to the smaller
/// heading change from the current camera heading.
pub fn select_waypoint(
    frontiers: &[FrontierCluster],
    state: &MergedState,
    nav: &NavigationMap,
    field: &CostField,
    cam: &CameraModel,
    cfg: &PlannerConfig,
    blacklist: &[[f64; 2]],
) -> WaypointDecision {
    let geom = &nav.geometry;
    let mut best: Option<(f64, f64, Waypoint)> = None;
    let mut tried = std::collections::HashSet::new();
    for cluster in frontiers {
        let Some(goal) = nearest_reachable(geom, field, nav, cluster.centroid) else { continue };
        if !tried.insert(goal) {
            continue;
        }
        let position = geom.center_of_index(goal);
        if blacklist.iter().any(|b| (b[0] - position[0]).hypot(b[1] - position[1]) < cfg.blacklist_radius) {
            continue;
        }
        let bins = polar_unknown_bins(geom, nav.classes(), position, cam.max_depth);
        let utils = heading_utilities(&bins, cam.fov, cfg.headings);
        let Some(path) = field.path(geom, goal) else { continue };
        let len = path_length(&path);
        for (i, &u) in utils.iter().enumerate() {
            if u < cfg.min_utility {
                continue;
            }
            let psi = wrap_angle(2.0 * PI * i as f64 / cfg.headings as f64);
            let score = u / (len + cfg.path_offset);
            let turn = wrap_angle(psi - state.psi).abs();
            let better = match &best {
                None => true,
                Some((bs, bt, _)) => {
                    let tol = 1e-12 * bs.abs().max(1.0);
                    score > bs + tol || ((score - bs).abs() <= tol && turn < *bt)
                }
            };
            if better {
                best = Some((score, turn, Waypoint { position, psi, utility: u, path: path.clone(), path_length: len }));
            }
        }
    }
    match best {
        Some((_, _, w)) => WaypointDecision::Goal(w),
        None => WaypointDecision::ExplorationComplete,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fan_counts_each_cell_once() {
        let g = GridGeometry::new(41, 41, 0.1, [0.0, 0.0]);
        let classes = vec![CellClass::Unknown; g.len()];
        let bins = polar_unknown_bins(&g, &classes, [2.05, 2.05], 1.0);
        let total: f64 = bins.iter().sum();
        let mut distinct = std::collections::HashSet::new();
        for j in 0..360 {
            traverse(&g, [2.05, 2.05], (j as f64).to_radians(), 1.0, |i, _| {
                distinct.insert(i);
                true
            });
        }
        assert_eq!(total as usize, distinct.len());
    }

    #[test]
    fn sliding_sum_covers_fov() {
        let mut bins = vec![0.0; 360];
        bins[90] = 5.0;
        let u = heading_utilities(&bins, 69.4f64.to_radians(), 36);
        assert_eq!(u[9], 5.0);
        assert_eq!(u[6], 5.0);
        assert_eq!(u[5], 0.0);
        assert_eq!(u[12], 5.0);
        assert_eq!(u[13], 0.0);
    }
}
