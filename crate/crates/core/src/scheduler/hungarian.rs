//! Minimum-cost bipartite assignment (Kuhn–Munkres with potentials).
//!
//! Forbidden pairs are marked with `f64::INFINITY`. Among all optimal
//! assignments the lexicographically smallest sorted `(row, col)` sequence is
//! returned, so results do not depend on solver internals.

use super::SchedulerError;

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// Matched pairs sorted by row.
    pub pairs: Vec<(usize, usize)>,
    pub total_cost: f64,
}

impl Assignment {
    pub fn column_of(&self, row: usize) -> Option<usize> {
        self.pairs.iter().find(|(r, _)| *r == row).map(|&(_, c)| c)
    }
}

fn check_matrix(cost: &[Vec<f64>]) -> Result<usize, SchedulerError> {
    let m = cost.first().map_or(0, Vec::len);
    for (r, row) in cost.iter().enumerate() {
        if row.len() != m {
            return Err(SchedulerError::InvalidCost(format!(
                "row {r} has {} columns, expected {m}",
                row.len()
            )));
        }
        for (c, &v) in row.iter().enumerate() {
            if v.is_nan() || v < 0.0 || v == f64::NEG_INFINITY {
                return Err(SchedulerError::InvalidCost(format!("entry ({r},{c}) = {v}")));
            }
        }
    }
    Ok(m)
}

/// Minimum-cost assignment of `min(n, m)` pairs.
pub fn hungarian(cost: &[Vec<f64>]) -> Result<Assignment, SchedulerError> {
    let m = check_matrix(cost)?;
    let best = max_cardinality_assignment(cost)?;
    if best.pairs.len() < cost.len().min(m) {
        return Err(SchedulerError::Infeasible);
    }
    Ok(best)
}

/// Matches as many rows as the `INFINITY` mask allows, then minimizes cost.
pub fn max_cardinality_assignment(cost: &[Vec<f64>]) -> Result<Assignment, SchedulerError> {
    let m = check_matrix(cost)?;
    let n = cost.len();
    if n == 0 || m == 0 {
        return Ok(Assignment {
            pairs: Vec::new(),
            total_cost: 0.0,
        });
    }
    let rows: Vec<usize> = (0..n).collect();
    let cols: Vec<usize> = (0..m).collect();
    let (opt_card, opt_cost) = solve_value(cost, &rows, &cols);
    let tol = 1e-9 * opt_cost.abs().max(1.0);

    // Greedy lexicographic reconstruction: fix each row to the smallest
    // column that still admits an optimal completion.
    let mut pairs = Vec::new();
    let mut free_cols = cols;
    let (mut fixed_card, mut fixed_cost) = (0usize, 0.0f64);
    for r in 0..n {
        let rest_rows: Vec<usize> = (r + 1..n).collect();
        let mut chosen = None;
        for (i, &c) in free_cols.iter().enumerate() {
            let v = cost[r][c];
            if !v.is_finite() {
                continue;
            }
            let mut remaining = free_cols.clone();
            remaining.remove(i);
            let (card, sub) = solve_value(cost, &rest_rows, &remaining);
            if fixed_card + 1 + card == opt_card && (fixed_cost + v + sub - opt_cost).abs() <= tol {
                chosen = Some((i, c, v));
                break;
            }
        }
        if let Some((i, c, v)) = chosen {
            pairs.push((r, c));
            free_cols.remove(i);
            fixed_card += 1;
            fixed_cost += v;
        }
        // otherwise row r stays unmatched in every optimal completion
    }
    debug_assert_eq!(fixed_card, opt_card);
    Ok(Assignment {
        pairs,
        total_cost: fixed_cost,
    })
}

/// (cardinality, cost) of a min-cost max-cardinality matching restricted to
/// the given rows and columns.
fn solve_value(cost: &[Vec<f64>], rows: &[usize], cols: &[usize]) -> (usize, f64) {
    if rows.is_empty() || cols.is_empty() {
        return (0, 0.0);
    }
    let finite_sum: f64 = rows
        .iter()
        .flat_map(|&r| cols.iter().map(move |&c| cost[r][c]))
        .filter(|v| v.is_finite())
        .sum();
    // any matching with fewer forbidden pairs beats one with more
    let big = finite_sum + 1.0;
    let entry = |r: usize, c: usize| {
        let v = cost[rows[r]][cols[c]];
        if v.is_finite() {
            v
        } else {
            big
        }
    };
    let transposed = rows.len() > cols.len();
    let (n, m) = if transposed {
        (cols.len(), rows.len())
    } else {
        (rows.len(), cols.len())
    };
    let matrix: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..m)
                .map(|j| if transposed { entry(j, i) } else { entry(i, j) })
                .collect()
        })
        .collect();
    let assignment = kuhn_munkres(&matrix);
    let mut card = 0;
    let mut total = 0.0;
    for (i, &j) in assignment.iter().enumerate() {
        let v = matrix[i][j];
        if v < big {
            card += 1;
            total += v;
        }
    }
    (card, total)
}

/// Classic O(n^2 m) shortest augmenting path Hungarian method for `n <= m`.
/// Returns the column assigned to each row.
fn kuhn_munkres(a: &[Vec<f64>]) -> Vec<usize> {
    let n = a.len();
    let m = a[0].len();
    debug_assert!(n <= m);
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    // p[j]: row (1-based) matched to column j; way[j]: previous column on path
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = a[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}
