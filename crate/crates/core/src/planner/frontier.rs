use std::collections::VecDeque;

use crate::raycast::GridGeometry;
use crate::slamlite::CellClass;

/// Smallest frontier cluster kept.
pub const MIN_CLUSTER_SIZE: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct FrontierCluster {
    /// Cell indices in ascending order.
    pub cells: Vec<usize>,
    pub centroid: [f64; 2],
}

/// Free cells 4-adjacent to unknown cells, grouped by 8-connectivity.
/// Clusters below [`MIN_CLUSTER_SIZE`] are dropped. Clusters are ordered by
/// their smallest cell index.
pub fn detect_frontiers(geom: &GridGeometry, classes: &[CellClass]) -> Vec<FrontierCluster> {
    let is_frontier: Vec<bool> = (0..geom.len())
        .map(|i| classes[i] == CellClass::Free && geom.neighbors4(i).any(|n| classes[n] == CellClass::Unknown))
        .collect();
    let mut seen = vec![false; geom.len()];
    let mut out = Vec::new();
    for s in 0..geom.len() {
        if !is_frontier[s] || seen[s] {
            continue;
        }
        seen[s] = true;
        let mut cells = vec![s];
        let mut queue = VecDeque::from([s]);
        while let Some(c) = queue.pop_front() {
            for n in geom.neighbors8(c) {
                if is_frontier[n] && !seen[n] {
                    seen[n] = true;
                    cells.push(n);
                    queue.push_back(n);
                }
            }
        }
        if cells.len() < MIN_CLUSTER_SIZE {
            continue;
        }
        cells.sort_unstable();
        let mut c = [0.0, 0.0];
        for &i in &cells {
            let p = geom.center_of_index(i);
            c[0] += p[0];
            c[1] += p[1];
        }
        let n = cells.len() as f64;
        out.push(FrontierCluster { cells, centroid: [c[0] / n, c[1] / n] });
    }
    out
}
