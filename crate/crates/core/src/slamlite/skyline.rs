//! Symmetric positive-definite matrices in variable-band (skyline) storage
//! with an in-place Cholesky factorization.

use crate::error::{Error, Result};

/// Lower triangle stored row by row from each row's first nonzero column.
#[derive(Debug, Clone, PartialEq)]
pub struct SkylineMatrix {
    first: Vec<usize>,
    rows: Vec<Vec<f64>>,
}

impl SkylineMatrix {
    /// Zero matrix whose row `i` may hold entries in columns `first[i]..=i`.
    pub fn new(first: Vec<usize>) -> Self {
        let rows = first.iter().enumerate().map(|(i, &f)| vec![0.0; i + 1 - f.min(i)]).collect();
        let first = first.iter().enumerate().map(|(i, &f)| f.min(i)).collect();
        Self { first, rows }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Number of stored entries.
    pub fn profile(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (r, c) = if c > r { (c, r) } else { (r, c) };
        if c < self.first[r] {
            0.0
        } else {
            self.rows[r][c - self.first[r]]
        }
    }

    /// Adds to entry `(r, c)` of the lower triangle.
    ///
    /// # Panics
    /// If `(r, c)` lies outside the profile.
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        let (r, c) = if c > r { (c, r) } else { (r, c) };
        let f = self.first[r];
        assert!(c >= f, "entry ({r}, {c}) outside the skyline");
        self.rows[r][c - f] += v;
    }

    /// Cholesky factor `L` with `A = L Lᵀ`, sharing the profile of `A`.
    pub fn cholesky(&self) -> Result<SkylineMatrix> {
        let n = self.dim();
        let mut l = self.clone();
        for i in 0..n {
            let fi = l.first[i];
            for j in fi..=i {
                let fj = l.first[j];
                let k0 = fi.max(fj);
                let mut sum = l.rows[i][j - fi];
                let (ri, rj) = (&l.rows[i], &l.rows[j]);
                for k in k0..j {
                    sum -= ri[k - fi] * rj[k - fj];
                }
                if j < i {
                    let d = l.rows[j][j - fj];
                    l.rows[i][j - fi] = sum / d;
                } else {
                    if !(sum > 0.0) || !sum.is_finite() {
                        return Err(Error::SingularSystem);
                    }
                    l.rows[i][i - fi] = sum.sqrt();
                }
            }
        }
        Ok(l)
    }

    /// Solves `L Lᵀ x = b` in place, with `self` the factor from
    /// [`SkylineMatrix::cholesky`].
    pub fn solve_factored(&self, b: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.rows[i];
            let mut s = b[i];
            for k in fi..i {
                s -= row[k - fi] * b[k];
            }
            b[i] = s / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.rows[i];
            b[i] /= row[i - fi];
            let bi = b[i];
            for k in fi..i {
                b[k] -= row[k - fi] * bi;
            }
        }
    }
}

/// Reverse Cuthill-McKee ordering of an undirected graph given as adjacency
/// lists. Returns `order[new] = old`.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let degree = |v: usize| adj[v].len();
    while order.len() < n {
        let start = (0..n).filter(|&v| !visited[v]).min_by_key(|&v| (degree(v), v)).unwrap_or(0);
        visited[start] = true;
        let mut head = order.len();
        order.push(start);
        while head < order.len() {
            let v = order[head];
            head += 1;
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            next.sort_by_key(|&u| (degree(u), u));
            next.dedup();
            for u in next {
                if !visited[u] {
                    visited[u] = true;
                    order.push(u);
                }
            }
        }
    }
    order.reverse();
    order
}
