use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raycast::GridGeometry;

/// Log-odds increments and clamp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogOddsParams {
    pub l_occ: f64,
    pub l_free: f64,
    pub l_max: f64,
}

impl Default for LogOddsParams {
    fn default() -> Self {
        Self { l_occ: 0.85, l_free: -0.4, l_max: 4.0 }
    }
}

/// Occupancy probability above which an observed cell is occupied.
pub const OCCUPIED_THRESHOLD: f64 = 0.65;
/// Occupancy probability below which an observed cell is free.
pub const FREE_THRESHOLD: f64 = 0.35;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellClass {
    Free,
    Occupied,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CellCounts {
    pub free: usize,
    pub occupied: usize,
    pub unknown: usize,
}

impl CellCounts {
    pub fn total(&self) -> usize {
        self.free + self.occupied + self.unknown
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapEntropy {
    /// Summed binary entropy of observed cells, bits.
    pub bits: f64,
    /// `bits` per observed cell; 0 when nothing is observed.
    pub normalized: f64,
    pub observed: usize,
}

pub fn logistic(l: f64) -> f64 {
    1.0 / (1.0 + (-l).exp())
}

/// Binary entropy in bits, 0 at `p ∈ {0, 1}`.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Log-odds occupancy grid with per-cell observed flags and a running
/// entropy total.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub geometry: GridGeometry,
    pub params: LogOddsParams,
    log_odds: Vec<f64>,
    observed: Vec<bool>,
    entropy_bits: f64,
    observed_count: usize,
}

impl OccupancyGrid {
    pub fn new(geometry: GridGeometry, params: LogOddsParams) -> Self {
        let n = geometry.len();
        Self { geometry, params, log_odds: vec![0.0; n], observed: vec![false; n], entropy_bits: 0.0, observed_count: 0 }
    }

    pub fn len(&self) -> usize {
        self.log_odds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_odds.is_empty()
    }

    pub fn is_observed(&self, idx: usize) -> bool {
        self.observed[idx]
    }

    pub fn log_odds(&self, idx: usize) -> f64 {
        self.log_odds[idx]
    }

    /// Occupancy probability; 0.5 for cells never observed.
    pub fn probability(&self, idx: usize) -> f64 {
        if self.observed[idx] {
            logistic(self.log_odds[idx])
        } else {
            0.5
        }
    }

    fn cell_entropy(&self, idx: usize) -> f64 {
        if self.observed[idx] {
            binary_entropy(logistic(self.log_odds[idx]))
        } else {
            0.0
        }
    }

    fn set_cell(&mut self, idx: usize, l: f64) {
        let before = self.cell_entropy(idx);
        if !self.observed[idx] {
            self.observed[idx] = true;
            self.observed_count += 1;
        }
        self.log_odds[idx] = l;
        self.entropy_bits += self.cell_entropy(idx) - before;
    }

    /// Adds `l_occ` to terminal occupied cells and `l_free` to traversed free
    /// cells, clamped to `±l_max`.
    pub fn update_occupancy(&mut self, cells: &[(usize, bool)]) {
        let p = self.params;
        for &(idx, occ) in cells {
            let l = (self.log_odds[idx] + if occ { p.l_occ } else { p.l_free }).clamp(-p.l_max, p.l_max);
            self.set_cell(idx, l);
        }
    }

    /// Marks a cell observed with the given probability. `p` of 0 or 1 maps
    /// to infinite log-odds.
    pub fn set_probability(&mut self, idx: usize, p: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("probability {p} outside [0, 1]")));
        }
        self.set_cell(idx, (p / (1.0 - p)).ln());
        Ok(())
    }

    /// Recomputes the running entropy total from scratch.
    pub fn recompute_entropy(&mut self) {
        self.entropy_bits = (0..self.len()).map(|i| self.cell_entropy(i)).sum();
    }

    pub fn map_entropy(&self) -> MapEntropy {
        let bits = self.entropy_bits.max(0.0);
        let normalized = if self.observed_count == 0 { 0.0 } else { bits / self.observed_count as f64 };
        MapEntropy { bits, normalized, observed: self.observed_count }
    }

    pub fn classify(&self, idx: usize) -> CellClass {
        if !self.observed[idx] {
            return CellClass::Unknown;
        }
        let p = logistic(self.log_odds[idx]);
        if p >= OCCUPIED_THRESHOLD {
            CellClass::Occupied
        } else if p <= FREE_THRESHOLD {
            CellClass::Free
        } else {
            CellClass::Unknown
        }
    }

    pub fn classes(&self) -> Vec<CellClass> {
        (0..self.len()).map(|i| self.classify(i)).collect()
    }

    pub fn classify_cells(&self) -> CellCounts {
        let mut c = CellCounts::default();
        for i in 0..self.len() {
            match self.classify(i) {
                CellClass::Free => c.free += 1,
                CellClass::Occupied => c.occupied += 1,
                CellClass::Unknown => c.unknown += 1,
            }
        }
        c
    }

    /// Binary PGM snapshot: 255 free, 0 occupied, 128 unknown; top row first.
    pub fn write_pgm<W: Write>(&self, out: W) -> Result<()> {
        write_class_pgm(&self.geometry, &self.classes(), out)
    }
}

/// Writes a class map as binary PGM.
pub fn write_class_pgm<W: Write>(geom: &GridGeometry, classes: &[CellClass], mut out: W) -> Result<()> {
    if classes.len() != geom.len() {
        return Err(Error::GridMismatch(format!("{} classes for {} cells", classes.len(), geom.len())));
    }
    write!(out, "P5\n{} {}\n255\n", geom.width, geom.height)?;
    let mut row = Vec::with_capacity(geom.width);
    for iy in (0..geom.height).rev() {
        row.clear();
        row.extend((0..geom.width).map(|ix| match classes[geom.index(ix, iy)] {
            CellClass::Free => 255u8,
            CellClass::Occupied => 0,
            CellClass::Unknown => 128,
        }));
        out.write_all(&row)?;
    }
    Ok(())
}
