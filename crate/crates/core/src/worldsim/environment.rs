use std::collections::VecDeque;
use std::path::Path;

use crate::error::{Error, Result};
use crate::raycast::GridGeometry;

/// Ground-truth occupancy of a bounded planar world.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub geometry: GridGeometry,
    occupied: Vec<bool>,
}

impl Environment {
    /// Builds an environment from a row-major occupancy vector (row 0 at the
    /// bottom) and checks that it is bounded and has free space.
    pub fn new(geometry: GridGeometry, occupied: Vec<bool>) -> Result<Self> {
        if occupied.len() != geometry.len() || geometry.width < 3 || geometry.height < 3 {
            return Err(Error::GridMismatch(format!(
                "{} cells for a {}x{} grid",
                occupied.len(),
                geometry.width,
                geometry.height
            )));
        }
        if !(geometry.resolution > 0.0) {
            return Err(Error::InvalidParameter("resolution must be positive".into()));
        }
        let env = Self { geometry, occupied };
        env.check_bounded()?;
        if env.free_count() == 0 {
            return Err(Error::InvalidParameter("environment has no free cell".into()));
        }
        Ok(env)
    }

    fn check_bounded(&self) -> Result<()> {
        let (w, h) = (self.geometry.width, self.geometry.height);
        for ix in 0..w {
            for iy in [0, h - 1] {
                if !self.occupied[self.geometry.index(ix, iy)] {
                    return Err(Error::UnboundedEnvironment { ix, iy });
                }
            }
        }
        for iy in 0..h {
            for ix in [0, w - 1] {
                if !self.occupied[self.geometry.index(ix, iy)] {
                    return Err(Error::UnboundedEnvironment { ix, iy });
                }
            }
        }
        Ok(())
    }

    /// Parses `#` (occupied) / `.` (free) text; the first line is the top row.
    pub fn from_ascii(text: &str, resolution: f64, origin: [f64; 2]) -> Result<Self> {
        Self::from_ascii_named(text, resolution, origin, Path::new("<ascii>"))
    }

    fn from_ascii_named(text: &str, resolution: f64, origin: [f64; 2], path: &Path) -> Result<Self> {
        let malformed = |reason: String| Error::MalformedEnvironment { path: path.to_path_buf(), reason };
        let rows: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).filter(|l| !l.is_empty()).collect();
        if rows.is_empty() {
            return Err(malformed("no rows".into()));
        }
        let width = rows[0].chars().count();
        let height = rows.len();
        let mut occupied = vec![false; width * height];
        for (r, line) in rows.iter().enumerate() {
            if line.chars().count() != width {
                return Err(malformed(format!("row {r} has {} columns, expected {width}", line.chars().count())));
            }
            let iy = height - 1 - r;
            for (ix, ch) in line.chars().enumerate() {
                occupied[iy * width + ix] = match ch {
                    '#' => true,
                    '.' => false,
                    other => return Err(malformed(format!("unexpected character {other:?} in row {r}"))),
                };
            }
        }
        if width < 3 || height < 3 {
            return Err(malformed(format!("{width}x{height} is too small")));
        }
        Self::new(GridGeometry::new(width, height, resolution, origin), occupied)
    }

    /// Parses a binary (P5) PGM: values below 128 are occupied. The first
    /// image row is the top row.
    pub fn from_pgm(bytes: &[u8], resolution: f64, origin: [f64; 2]) -> Result<Self> {
        Self::from_pgm_named(bytes, resolution, origin, Path::new("<pgm>"))
    }

    fn from_pgm_named(bytes: &[u8], resolution: f64, origin: [f64; 2], path: &Path) -> Result<Self> {
        let malformed = |reason: &str| Error::MalformedEnvironment { path: path.to_path_buf(), reason: reason.to_string() };
        let mut pos = 0usize;
        let mut fields = Vec::with_capacity(4);
        while fields.len() < 4 {
            while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
                if bytes[pos] == b'#' {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                } else {
                    pos += 1;
                }
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(malformed("truncated header"));
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| malformed("header is not ASCII"))?);
        }
        if fields[0] != "P5" {
            return Err(malformed("only binary P5 maps are supported"));
        }
        let parse = |s: &str| s.parse::<usize>().map_err(|_| malformed("bad header number"));
        let (width, height, maxval) = (parse(fields[1])?, parse(fields[2])?, parse(fields[3])?);
        if maxval == 0 || maxval > 255 {
            return Err(malformed("maxval must be in 1..=255"));
        }
        pos += 1; // single whitespace after maxval
        let data = bytes.get(pos..pos + width * height).ok_or_else(|| malformed("pixel data too short"))?;
        if width < 3 || height < 3 {
            return Err(malformed("image too small"));
        }
        let mut occupied = vec![false; width * height];
        for r in 0..height {
            let iy = height - 1 - r;
            for ix in 0..width {
                occupied[iy * width + ix] = data[r * width + ix] < 128;
            }
        }
        Self::new(GridGeometry::new(width, height, resolution, origin), occupied)
    }

    /// Loads `.pgm` files as PGM and everything else as ASCII.
    pub fn load(path: &Path, resolution: f64, origin: [f64; 2]) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::MalformedEnvironment {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")) {
            Self::from_pgm_named(&bytes, resolution, origin, path)
        } else {
            let text = String::from_utf8(bytes).map_err(|_| Error::MalformedEnvironment {
                path: path.to_path_buf(),
                reason: "not UTF-8 text".into(),
            })?;
            Self::from_ascii_named(&text, resolution, origin, path)
        }
    }

    pub fn is_occupied(&self, idx: usize) -> bool {
        self.occupied[idx]
    }

    /// Occupancy at a world point; points outside the grid count as occupied.
    pub fn occupied_at(&self, x: f64, y: f64) -> bool {
        self.geometry.index_of(x, y).is_none_or(|i| self.occupied[i])
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupied
    }

    pub fn free_count(&self) -> usize {
        self.occupied.iter().filter(|o| !**o).count()
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.len() - self.free_count()
    }

    /// Whether a disc of `radius` centered at `(x, y)` overlaps any occupied
    /// cell.
    pub fn disc_collides(&self, x: f64, y: f64, radius: f64) -> bool {
        let g = &self.geometry;
        let res = g.resolution;
        let lo_x = ((x - radius - g.origin[0]) / res).floor() as isize;
        let hi_x = ((x + radius - g.origin[0]) / res).floor() as isize;
        let lo_y = ((y - radius - g.origin[1]) / res).floor() as isize;
        let hi_y = ((y + radius - g.origin[1]) / res).floor() as isize;
        for iy in lo_y..=hi_y {
            for ix in lo_x..=hi_x {
                if ix < 0 || iy < 0 || ix as usize >= g.width || iy as usize >= g.height {
                    return true;
                }
                let (ux, uy) = (ix as usize, iy as usize);
                if !self.occupied[g.index(ux, uy)] {
                    continue;
                }
                let cx0 = g.origin[0] + ix as f64 * res;
                let cy0 = g.origin[1] + iy as f64 * res;
                let nx = x.clamp(cx0, cx0 + res);
                let ny = y.clamp(cy0, cy0 + res);
                if (nx - x).powi(2) + (ny - y).powi(2) < radius * radius {
                    return true;
                }
            }
        }
        false
    }

    /// Free cells 4-connected to the cell containing `(x, y)`.
    pub fn free_component(&self, x: f64, y: f64) -> Vec<bool> {
        let g = &self.geometry;
        let mut seen = vec![false; g.len()];
        let Some(start) = g.index_of(x, y) else { return seen };
        if self.occupied[start] {
            return seen;
        }
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(c) = queue.pop_front() {
            for n in g.neighbors4(c) {
                if !seen[n] && !self.occupied[n] {
                    seen[n] = true;
                    queue.push_back(n);
                }
            }
        }
        seen
    }
}
