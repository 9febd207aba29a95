//! Evaluation metrics: map balanced accuracy, trajectory error, per-meter
//! ratios, time bucketing and batch aggregation.

use crate::error::{Error, Result};
use crate::geometry::Pose2D;
use crate::slamlite::CellClass;
use crate::worldsim::Environment;

/// Shortest path for which per-meter ratios are reported, meters.
pub const MIN_PATH_LENGTH: f64 = 0.01;

/// Largest time gap when pairing estimated and true poses, seconds.
pub const ATE_ASSOCIATION_WINDOW: f64 = 0.05;

/// Default bucketing window, seconds.
pub const BUCKET_WINDOW: f64 = 2.0;

const CLASSES: [CellClass; 3] = [CellClass::Free, CellClass::Occupied, CellClass::Unknown];

fn class_index(c: CellClass) -> usize {
    match c {
        CellClass::Free => 0,
        CellClass::Occupied => 1,
        CellClass::Unknown => 2,
    }
}

/// Rows: ground-truth class; columns: estimated class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub counts: [[usize; 3]; 3],
}

impl ConfusionMatrix {
    pub fn from_classes(est: &[CellClass], gt: &[CellClass]) -> Result<Self> {
        if est.len() != gt.len() {
            return Err(Error::GridMismatch(format!("{} estimated cells vs {} ground-truth cells", est.len(), gt.len())));
        }
        let mut m = Self::default();
        for (&e, &g) in est.iter().zip(gt) {
            m.counts[class_index(g)][class_index(e)] += 1;
        }
        Ok(m)
    }

    /// Moves one cell from estimated class `from` to `to`.
    pub fn reclassify(&mut self, gt: CellClass, from: CellClass, to: CellClass) {
        let g = class_index(gt);
        self.counts[g][class_index(from)] -= 1;
        self.counts[g][class_index(to)] += 1;
    }

    pub fn recall(&self, class: CellClass) -> Option<f64> {
        let g = class_index(class);
        let total: usize = self.counts[g].iter().sum();
        (total > 0).then(|| self.counts[g][g] as f64 / total as f64)
    }

    /// Mean recall over the classes present in the ground truth.
    pub fn balanced_accuracy(&self) -> f64 {
        let recalls: Vec<f64> = CLASSES.iter().filter_map(|&c| self.recall(c)).collect();
        if recalls.is_empty() {
            return 0.0;
        }
        recalls.iter().sum::<f64>() / recalls.len() as f64
    }
}

/// Balanced accuracy of an estimated class map against ground truth.
pub fn balanced_accuracy(est: &[CellClass], gt: &[CellClass]) -> Result<f64> {
    Ok(ConfusionMatrix::from_classes(est, gt)?.balanced_accuracy())
}

/// Ground-truth class map: free cells 4-connected to the start, occupied
/// cells 8-adjacent to that free region, everything else unknown.
pub fn ground_truth_classes(env: &Environment, start: [f64; 2]) -> Vec<CellClass> {
    let g = &env.geometry;
    let free = env.free_component(start[0], start[1]);
    let mut out = vec![CellClass::Unknown; g.len()];
    for idx in 0..g.len() {
        if free[idx] {
            out[idx] = CellClass::Free;
        } else if env.is_occupied(idx) && g.neighbors8(idx).any(|n| free[n]) {
            out[idx] = CellClass::Occupied;
        }
    }
    out
}

/// RMS of position error between time-associated pose pairs. Each estimated
/// sample is paired with the nearest ground-truth sample within the
/// association window; ground truth must be sorted by time.
pub fn ate_rmse(est: &[(f64, Pose2D)], gt: &[(f64, Pose2D)]) -> Result<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for &(t, p) in est {
        let i = gt.partition_point(|(tg, _)| *tg < t);
        let best = [i.checked_sub(1), (i < gt.len()).then_some(i)]
            .into_iter()
            .flatten()
            .min_by(|&a, &b| (gt[a].0 - t).abs().total_cmp(&(gt[b].0 - t).abs()));
        if let Some(j) = best.filter(|&j| (gt[j].0 - t).abs() <= ATE_ASSOCIATION_WINDOW) {
            let q = gt[j].1;
            sum += (p.x - q.x).powi(2) + (p.y - q.y).powi(2);
            n += 1;
        }
    }
    if n < 2 {
        return Err(Error::InsufficientData(format!("{n} associated pose pairs, need at least 2")));
    }
    Ok((sum / n as f64).sqrt())
}

/// Loop closures per meter; `None` when the path is too short.
pub fn loops_per_meter(n_loops: usize, path_len: f64) -> Option<f64> {
    (path_len > MIN_PATH_LENGTH).then(|| n_loops as f64 / path_len)
}

/// Base wheel rotation per meter; `None` when the path is too short.
pub fn wheel_rotation_per_meter(acc_rad: f64, path_len: f64) -> Option<f64> {
    (path_len > MIN_PATH_LENGTH).then(|| acc_rad / path_len)
}

/// Buckets sorted `(time, value)` samples into windows `[k·w, (k+1)·w)`
/// covering `[0, duration)`. Each window takes its last sample; empty
/// windows repeat the previous window, and windows before the first sample
/// take the first value. `duration` defaults to the last sample time.
pub fn bucket_series(samples: &[(f64, f64)], window: f64, duration: Option<f64>) -> Result<Vec<(f64, f64)>> {
    if !(window > 0.0) {
        return Err(Error::InvalidParameter("bucket window must be positive".into()));
    }
    if samples.windows(2).any(|w| w[1].0 < w[0].0) {
        return Err(Error::InvalidParameter("samples must be sorted by time".into()));
    }
    let Some(&(_, first)) = samples.first() else { return Ok(Vec::new()) };
    let end = duration.unwrap_or(samples[samples.len() - 1].0);
    let n = ((end / window).ceil() as usize).max(1);
    let mut out = Vec::with_capacity(n);
    let mut value = first;
    let mut i = 0;
    for k in 0..n {
        let hi = (k + 1) as f64 * window;
        while i < samples.len() && samples[i].0 < hi {
            value = samples[i].1;
            i += 1;
        }
        out.push((k as f64 * window, value));
    }
    Ok(out)
}

/// Streaming mean and sample standard deviation (Welford).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunningStats {
    n: usize,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> Option<f64> {
        (self.n > 0).then_some(self.mean)
    }

    /// Sample standard deviation; 0 for a single value.
    pub fn std(&self) -> Option<f64> {
        match self.n {
            0 => None,
            1 => Some(0.0),
            n => Some((self.m2 / (n - 1) as f64).sqrt()),
        }
    }
}

/// Two-pass mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, var.sqrt()))
}
