//! Grid geometry and Amanatides–Woo voxel traversal shared by the world
//! simulator, the mapper and the planner.

use serde::{Deserialize, Serialize};

/// Placement of a row-major cell grid in the world. Cell `(0, 0)` is the
/// bottom-left cell and spans `[origin, origin + resolution)` on both axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    pub origin: [f64; 2],
}

impl GridGeometry {
    pub fn new(width: usize, height: usize, resolution: f64, origin: [f64; 2]) -> Self {
        Self { width, height, resolution, origin }
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.width + ix
    }

    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.width, idx / self.width)
    }

    /// Cell containing the world point, if inside the grid.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fx = ((x - self.origin[0]) / self.resolution).floor();
        let fy = ((y - self.origin[1]) / self.resolution).floor();
        if fx < 0.0 || fy < 0.0 || !fx.is_finite() || !fy.is_finite() {
            return None;
        }
        let (ix, iy) = (fx as usize, fy as usize);
        (ix < self.width && iy < self.height).then_some((ix, iy))
    }

    pub fn index_of(&self, x: f64, y: f64) -> Option<usize> {
        self.cell_of(x, y).map(|(ix, iy)| self.index(ix, iy))
    }

    pub fn center(&self, ix: usize, iy: usize) -> [f64; 2] {
        [
            self.origin[0] + (ix as f64 + 0.5) * self.resolution,
            self.origin[1] + (iy as f64 + 0.5) * self.resolution,
        ]
    }

    pub fn center_of_index(&self, idx: usize) -> [f64; 2] {
        let (ix, iy) = self.coords(idx);
        self.center(ix, iy)
    }

    pub fn extent(&self) -> [f64; 2] {
        [self.width as f64 * self.resolution, self.height as f64 * self.resolution]
    }

    /// Neighbors in 4-connectivity.
    pub fn neighbors4(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let (ix, iy) = self.coords(idx);
        let (w, h) = (self.width as isize, self.height as isize);
        [(-1isize, 0isize), (1, 0), (0, -1), (0, 1)]
            .into_iter()
            .filter_map(move |(dx, dy)| {
                let nx = ix as isize + dx;
                let ny = iy as isize + dy;
                (nx >= 0 && ny >= 0 && nx < w && ny < h).then(|| self.index(nx as usize, ny as usize))
            })
    }

    /// Neighbors in 8-connectivity.
    pub fn neighbors8(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let (ix, iy) = self.coords(idx);
        let (w, h) = (self.width as isize, self.height as isize);
        (-1isize..=1)
            .flat_map(|dy| (-1isize..=1).map(move |dx| (dx, dy)))
            .filter(|&(dx, dy)| dx != 0 || dy != 0)
            .filter_map(move |(dx, dy)| {
                let nx = ix as isize + dx;
                let ny = iy as isize + dy;
                (nx >= 0 && ny >= 0 && nx < w && ny < h).then(|| self.index(nx as usize, ny as usize))
            })
    }
}

/// Walks the cells pierced by the ray from `start` along `angle`, calling
/// `visit(cell_index, entry_distance)` for each cell whose entry distance is
/// below `max_dist`. The start cell is visited with entry distance 0. The
/// walk stops when `visit` returns `false` or the ray leaves the grid.
pub fn traverse<F>(geom: &GridGeometry, start: [f64; 2], angle: f64, max_dist: f64, mut visit: F)
where
    F: FnMut(usize, f64) -> bool,
{
    let Some((mut ix, mut iy)) = geom.cell_of(start[0], start[1]) else {
        return;
    };
    if !visit(geom.index(ix, iy), 0.0) {
        return;
    }
    let (dy, dx) = angle.sin_cos();
    let res = geom.resolution;
    let (step_x, mut t_max_x, t_delta_x) = axis_setup(start[0], geom.origin[0], ix, dx, res);
    let (step_y, mut t_max_y, t_delta_y) = axis_setup(start[1], geom.origin[1], iy, dy, res);
    loop {
        let t;
        if t_max_x < t_max_y {
            t = t_max_x;
            t_max_x += t_delta_x;
            if step_x < 0 {
                if ix == 0 {
                    return;
                }
                ix -= 1;
            } else {
                ix += 1;
                if ix >= geom.width {
                    return;
                }
            }
        } else {
            t = t_max_y;
            t_max_y += t_delta_y;
            if step_y < 0 {
                if iy == 0 {
                    return;
                }
                iy -= 1;
            } else {
                iy += 1;
                if iy >= geom.height {
                    return;
                }
            }
        }
        if !(t < max_dist) {
            return;
        }
        if !visit(geom.index(ix, iy), t) {
            return;
        }
    }
}

fn axis_setup(p: f64, origin: f64, i: usize, d: f64, res: f64) -> (i32, f64, f64) {
    if d > 0.0 {
        let boundary = origin + (i as f64 + 1.0) * res;
        (1, (boundary - p) / d, res / d)
    } else if d < 0.0 {
        let boundary = origin + i as f64 * res;
        (-1, (boundary - p) / d, -res / d)
    } else {
        (0, f64::INFINITY, f64::INFINITY)
    }
}

/// Distance to the first cell for which `blocked` holds, or `None` when the
/// ray travels `max_dist` (or leaves the grid) without hitting one.
pub fn first_hit<F>(geom: &GridGeometry, start: [f64; 2], angle: f64, max_dist: f64, blocked: F) -> Option<(usize, f64)>
where
    F: Fn(usize) -> bool,
{
    let mut hit = None;
    traverse(geom, start, angle, max_dist, |idx, t| {
        if blocked(idx) {
            hit = Some((idx, t));
            false
        } else {
            true
        }
    });
    hit
}
