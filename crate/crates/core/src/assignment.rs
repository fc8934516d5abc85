//! Rectangular linear assignment: every row gets a distinct column.
//!
//! Two solvers share one contract. [`hungarian`] is optimal and returns the
//! lexicographically smallest optimal `row_to_col`; [`greedy_sort_assign`]
//! scans entries in ascending order and is faster but suboptimal.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Row-major `rows x cols` cost matrix with `rows <= cols` and finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        assert_eq!(data.len(), rows * cols, "expected {rows}x{cols} entries");
        if rows > cols {
            return Err(Error::ShapeError { rows, cols });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteCost {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged cost matrix");
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    /// Total cost of a row-to-column map, summed in row order.
    pub fn cost_of(&self, row_to_col: &[usize]) -> f64 {
        row_to_col.iter().enumerate().map(|(r, &c)| self.get(r, c)).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub row_to_col: Vec<usize>,
    pub cost: f64,
}

impl Assignment {
    fn new(cost: &CostMatrix, row_to_col: Vec<usize>) -> Self {
        let total = cost.cost_of(&row_to_col);
        Self {
            row_to_col,
            cost: total,
        }
    }
}

/// Optimal assignment via the Hungarian method on the matrix padded to square.
///
/// Padding rows carry a constant sentinel above the sum of all real entries.
/// Among optimal assignments the lexicographically smallest `row_to_col` is
/// returned, found by re-routing alternating cycles in the equality subgraph.
pub fn hungarian(cost: &CostMatrix) -> Result<Assignment> {
    let (r, c) = (cost.rows, cost.cols);
    if r > c {
        return Err(Error::ShapeError { rows: r, cols: c });
    }
    if r == 0 {
        return Ok(Assignment {
            row_to_col: Vec::new(),
            cost: 0.0,
        });
    }
    let n = c;
    let abs_sum: f64 = cost.data.iter().map(|x| x.abs()).sum();
    let sentinel = abs_sum + 1.0;
    let entry = |i: usize, j: usize| if i < r { cost.get(i, j) } else { sentinel };

    // potentials-based O(n^3) solver, 1-indexed with a virtual column 0
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = entry(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![0usize; n];
    let mut col_to_row = vec![0usize; n];
    for j in 1..=n {
        row_to_col[owner[j] - 1] = j - 1;
        col_to_row[j - 1] = owner[j] - 1;
    }

    // equality subgraph of the optimal duals
    let scale = 1.0 + cost.data.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let tol = 1e-10 * scale * n as f64;
    let tight: Vec<bool> = (0..n * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            entry(i, j) - u[i + 1] - v[j + 1] <= tol
        })
        .collect();

    let mut locked = vec![false; n];
    for i in 0..r {
        for j in 0..row_to_col[i] {
            if tight[i * n + j] && reroute(i, j, n, &tight, &locked, &mut row_to_col, &mut col_to_row) {
                break;
            }
        }
        locked[i] = true;
    }

    row_to_col.truncate(r);
    Ok(Assignment::new(cost, row_to_col))
}

/// Moves row `i` onto column `j` along an alternating cycle of tight edges
/// that avoids locked rows. Returns false when no such cycle exists.
fn reroute(
    i: usize,
    j: usize,
    n: usize,
    tight: &[bool],
    locked: &[bool],
    row_to_col: &mut [usize],
    col_to_row: &mut [usize],
) -> bool {
    let old = row_to_col[i];
    let start = col_to_row[j];
    if locked[start] {
        return false;
    }
    let mut reached_from = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    seen[j] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(row) = queue.pop_front() {
        for col in 0..n {
            if seen[col] || !tight[row * n + col] {
                continue;
            }
            seen[col] = true;
            reached_from[col] = row;
            if col == old {
                let mut col = col;
                loop {
                    let mover = reached_from[col];
                    let freed = row_to_col[mover];
                    row_to_col[mover] = col;
                    col_to_row[col] = mover;
                    if freed == j {
                        break;
                    }
                    col = freed;
                }
                row_to_col[i] = j;
                col_to_row[j] = i;
                return true;
            }
            let next = col_to_row[col];
            if !locked[next] && next != i {
                queue.push_back(next);
            }
        }
    }
    false
}

/// Sort-based heuristic: accept entries in ascending cost order (ties in
/// row-major order) whenever both the row and the column are still free.
pub fn greedy_sort_assign(cost: &CostMatrix) -> Result<Assignment> {
    let (r, c) = (cost.rows, cost.cols);
    if r > c {
        return Err(Error::ShapeError { rows: r, cols: c });
    }
    let mut order: Vec<usize> = (0..r * c).collect();
    order.sort_by(|&a, &b| cost.data[a].total_cmp(&cost.data[b]).then(a.cmp(&b)));
    let mut row_to_col = vec![usize::MAX; r];
    let mut col_used = vec![false; c];
    let mut remaining = r;
    for k in order {
        if remaining == 0 {
            break;
        }
        let (i, j) = (k / c, k % c);
        if row_to_col[i] == usize::MAX && !col_used[j] {
            row_to_col[i] = j;
            col_used[j] = true;
            remaining -= 1;
        }
    }
    Ok(Assignment::new(cost, row_to_col))
}

/// Exhaustive minimum over all injections, lexicographic first on ties.
/// Only for small test instances.
#[cfg(test)]
pub(crate) fn brute_force(cost: &CostMatrix) -> (f64, Vec<usize>) {
    fn rec(cost: &CostMatrix, row: usize, used: &mut Vec<bool>, cur: &mut Vec<usize>, best: &mut (f64, Vec<usize>)) {
        if row == cost.rows() {
            let total = cost.cost_of(cur);
            if total < best.0 {
                *best = (total, cur.clone());
            }
            return;
        }
        for col in 0..cost.cols() {
            if !used[col] {
                used[col] = true;
                cur.push(col);
                rec(cost, row + 1, used, cur, best);
                cur.pop();
                used[col] = false;
            }
        }
    }
    let mut best = (f64::INFINITY, Vec::new());
    rec(cost, 0, &mut vec![false; cost.cols()], &mut Vec::new(), &mut best);
    best
}
