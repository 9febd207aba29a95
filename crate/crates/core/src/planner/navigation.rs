use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::raycast::GridGeometry;
use crate::slamlite::CellClass;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NavConfig {
    pub robot_radius: f64,
    /// Extra inflation beyond the robot radius, in cells.
    pub inflation_cells: usize,
    /// Distance from obstacles over which the soft cost decays, meters.
    pub soft_radius: f64,
    /// Peak soft cost per meter next to an inflated obstacle.
    pub soft_weight: f64,
    /// Cost factor for cells closer to unknown space than the inflation.
    pub unknown_penalty: f64,
}

impl Default for NavConfig {
    fn default() -> Self {
        Self { robot_radius: 0.2, inflation_cells: 1, soft_radius: 0.5, soft_weight: 2.0, unknown_penalty: 4.0 }
    }
}

impl NavConfig {
    pub fn inflation(&self, resolution: f64) -> f64 {
        self.robot_radius + self.inflation_cells as f64 * resolution
    }
}

#[derive(Clone, Copy, PartialEq)]
struct QueueItem {
    cost: f64,
    idx: usize,
}

impl Eq for QueueItem {}

impl Ord for QueueItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for QueueItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const DIAG: f64 = std::f64::consts::SQRT_2;

fn neighbors8_cost(geom: &GridGeometry, idx: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
    let (ix, iy) = geom.coords(idx);
    let (w, h) = (geom.width as isize, geom.height as isize);
    [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)].into_iter().filter_map(move |(dx, dy)| {
        let (nx, ny) = (ix as isize + dx, iy as isize + dy);
        (nx >= 0 && ny >= 0 && nx < w && ny < h)
            .then(|| (geom.index(nx as usize, ny as usize), if dx != 0 && dy != 0 { DIAG } else { 1.0 }))
    })
}

/// Chamfer distance (meters) from every cell to the nearest source cell,
/// with unit orthogonal and `√2` diagonal steps. Two raster passes.
pub fn distance_transform(geom: &GridGeometry, source: &[bool]) -> Vec<f64> {
    let (w, h) = (geom.width, geom.height);
    let (a, d) = (geom.resolution, DIAG * geom.resolution);
    let mut dist: Vec<f64> = source.iter().map(|&s| if s { 0.0 } else { f64::INFINITY }).collect();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let mut v = dist[i];
            if x > 0 {
                v = v.min(dist[i - 1] + a);
            }
            if y > 0 {
                v = v.min(dist[i - w] + a);
                if x > 0 {
                    v = v.min(dist[i - w - 1] + d);
                }
                if x + 1 < w {
                    v = v.min(dist[i - w + 1] + d);
                }
            }
            dist[i] = v;
        }
    }
    for y in (0..h).rev() {
        for x in (0..w).rev() {
            let i = y * w + x;
            let mut v = dist[i];
            if x + 1 < w {
                v = v.min(dist[i + 1] + a);
            }
            if y + 1 < h {
                v = v.min(dist[i + w] + a);
                if x + 1 < w {
                    v = v.min(dist[i + w + 1] + d);
                }
                if x > 0 {
                    v = v.min(dist[i + w - 1] + d);
                }
            }
            dist[i] = v;
        }
    }
    dist
}

/// Traversability derived from a class map: only free cells are
/// traversable, cells within the inflation radius of an occupied cell are
/// blocked, and proximity to obstacles or unknown space adds cost.
#[derive(Debug, Clone)]
pub struct NavigationMap {
    pub geometry: GridGeometry,
    pub cfg: NavConfig,
    /// Distance to the nearest occupied cell.
    pub obstacle_clearance: Vec<f64>,
    /// Distance to the nearest unknown cell.
    pub unknown_clearance: Vec<f64>,
    classes: Vec<CellClass>,
}

impl NavigationMap {
    pub fn new(geometry: GridGeometry, classes: Vec<CellClass>, cfg: NavConfig) -> Self {
        let occ: Vec<bool> = classes.iter().map(|c| *c == CellClass::Occupied).collect();
        let unk: Vec<bool> = classes.iter().map(|c| *c == CellClass::Unknown).collect();
        Self {
            obstacle_clearance: distance_transform(&geometry, &occ),
            unknown_clearance: distance_transform(&geometry, &unk),
            geometry,
            cfg,
            classes,
        }
    }

    pub fn classes(&self) -> &[CellClass] {
        &self.classes
    }

    pub fn is_traversable(&self, idx: usize) -> bool {
        self.classes[idx] == CellClass::Free && self.obstacle_clearance[idx] >= self.cfg.inflation(self.geometry.resolution)
    }

    /// Cost multiplier for moving through a cell.
    pub fn cell_factor(&self, idx: usize) -> f64 {
        let infl = self.cfg.inflation(self.geometry.resolution);
        let mut f = 1.0;
        let d = self.obstacle_clearance[idx] - infl;
        if d < self.cfg.soft_radius {
            f += self.cfg.soft_weight * (1.0 - d.max(0.0) / self.cfg.soft_radius);
        }
        if self.unknown_clearance[idx] < infl {
            f += self.cfg.unknown_penalty;
        }
        f
    }

    /// Whether a disc of the robot radius at `p` overlaps a cell classified
    /// occupied.
    pub fn disc_hits_occupied(&self, p: [f64; 2]) -> bool {
        match self.geometry.index_of(p[0], p[1]) {
            Some(i) => self.obstacle_clearance[i] < self.cfg.robot_radius,
            None => true,
        }
    }

    /// Shortest weighted paths from `start` to every cell. The start cell is
    /// always expanded so a robot inside an inflated band can leave it.
    pub fn search(&self, start: [f64; 2]) -> Option<CostField> {
        let s = self.geometry.index_of(start[0], start[1])?;
        let n = self.geometry.len();
        let mut cost = vec![f64::INFINITY; n];
        let mut parent = vec![usize::MAX; n];
        let mut heap = BinaryHeap::new();
        cost[s] = 0.0;
        heap.push(QueueItem { cost: 0.0, idx: s });
        let res = self.geometry.resolution;
        while let Some(QueueItem { cost: c, idx }) = heap.pop() {
            if c > cost[idx] {
                continue;
            }
            let escaping = !self.is_traversable(idx);
            for (nb, step) in neighbors8_cost(&self.geometry, idx) {
                let ok = self.is_traversable(nb)
                    || (escaping
                        && self.classes[nb] == CellClass::Free
                        && self.obstacle_clearance[nb] >= self.obstacle_clearance[idx]);
                if !ok {
                    continue;
                }
                let nc = c + step * res * 0.5 * (self.cell_factor(idx) + self.cell_factor(nb));
                if nc < cost[nb] {
                    cost[nb] = nc;
                    parent[nb] = idx;
                    heap.push(QueueItem { cost: nc, idx: nb });
                }
            }
        }
        Some(CostField { start: s, cost, parent })
    }
}

/// Result of a single-source search over the navigation map.
#[derive(Debug, Clone)]
pub struct CostField {
    pub start: usize,
    pub cost: Vec<f64>,
    parent: Vec<usize>,
}

impl CostField {
    pub fn reachable(&self, idx: usize) -> bool {
        self.cost[idx].is_finite()
    }

    /// Cell sequence from the start to `goal`.
    pub fn path_cells(&self, goal: usize) -> Option<Vec<usize>> {
        if !self.reachable(goal) {
            return None;
        }
        let mut out = vec![goal];
        let mut c = goal;
        while c != self.start {
            c = self.parent[c];
            out.push(c);
        }
        out.reverse();
        Some(out)
    }

    /// Path as cell centers, starting at the start cell.
    pub fn path(&self, geom: &GridGeometry, goal: usize) -> Option<Vec<[f64; 2]>> {
        Some(self.path_cells(goal)?.into_iter().map(|i| geom.center_of_index(i)).collect())
    }
}

/// Distance from `p` to the nearest cell of class `Occupied`, measured to
/// the cell boundary and capped at `max`. Zero outside the grid.
pub fn obstacle_clearance(geom: &GridGeometry, classes: &[CellClass], p: [f64; 2], max: f64) -> f64 {
    let Some((cx, cy)) = geom.cell_of(p[0], p[1]) else { return 0.0 };
    let reach = (max / geom.resolution).ceil() as isize + 1;
    let h = 0.5 * geom.resolution;
    let mut best = max;
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            let (x, y) = (cx as isize + dx, cy as isize + dy);
            if x < 0 || y < 0 || x >= geom.width as isize || y >= geom.height as isize {
                continue;
            }
            let idx = geom.index(x as usize, y as usize);
            if classes[idx] != CellClass::Occupied {
                continue;
            }
            let c = geom.center_of_index(idx);
            let qx = p[0].clamp(c[0] - h, c[0] + h);
            let qy = p[1].clamp(c[1] - h, c[1] + h);
            best = best.min((qx - p[0]).hypot(qy - p[1]));
        }
    }
    best
}

/// Whether a disc at `p` overlaps any cell of class `Occupied`, or leaves the
/// grid.
pub fn disc_hits_class(geom: &GridGeometry, classes: &[CellClass], p: [f64; 2], radius: f64) -> bool {
    obstacle_clearance(geom, classes, p, radius) < radius
}

/// Euclidean length of a polyline.
pub fn path_length(path: &[[f64; 2]]) -> f64 {
    path.windows(2).map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1])).sum()
}
