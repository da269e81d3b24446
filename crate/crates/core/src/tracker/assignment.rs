//! Rectangular assignment with forbidden pairs.

use crate::error::{Error, Result};

/// One-to-one matching between rows and columns of `cost`.
///
/// The matching uses as many allowed pairs as possible and, among those of
/// maximal size, minimizes the total cost. Forbidden pairs are never used.
/// Returns `(row, column)` pairs sorted by row.
///
/// ```
/// use panoptrack::tracker::assignment_solve;
///
/// let cost = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
/// let forbidden = vec![vec![false; 2]; 2];
/// assert_eq!(assignment_solve(&cost, &forbidden).unwrap(), vec![(0, 0), (1, 1)]);
/// ```
pub fn assignment_solve(cost: &[Vec<f64>], forbidden: &[Vec<bool>]) -> Result<Vec<(usize, usize)>> {
    let rows = cost.len();
    if forbidden.len() != rows {
        return Err(Error::LengthMismatch {
            expected: rows,
            found: forbidden.len(),
        });
    }
    let cols = cost.first().map_or(0, Vec::len);
    for (r, (c, f)) in cost.iter().zip(forbidden).enumerate() {
        if c.len() != cols || f.len() != cols {
            return Err(Error::InvalidValue(format!("row {r} has the wrong length")));
        }
        for (j, (&v, &x)) in c.iter().zip(f).enumerate() {
            if !x && !v.is_finite() {
                return Err(Error::InvalidValue(format!(
                    "cost at ({r}, {j}) is not finite"
                )));
            }
        }
    }
    let allowed = || {
        cost.iter()
            .zip(forbidden)
            .flat_map(|(c, f)| c.iter().zip(f).filter(|(_, &x)| !x).map(|(&v, _)| v))
    };
    let Some(min) = allowed().min_by(f64::total_cmp) else {
        return Ok(Vec::new());
    };
    let max_shifted = allowed().map(|v| v - min).fold(0.0, f64::max);

    // Square matrix in which forbidden and padding cells cost more than any
    // complete set of allowed pairs, so every extra allowed pair pays off.
    let n = rows.max(cols);
    let big = n as f64 * max_shifted + 1.0;
    let square: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i < rows && j < cols && !forbidden[i][j] {
                        cost[i][j] - min
                    } else {
                        big
                    }
                })
                .collect()
        })
        .collect();

    let assignment = hungarian(&square);
    Ok(assignment
        .into_iter()
        .enumerate()
        .filter(|&(i, j)| i < rows && j < cols && !forbidden[i][j])
        .collect())
}

/// Minimum-cost perfect matching on a square matrix; returns the column of
/// each row. Shortest augmenting paths with dual potentials.
fn hungarian(a: &[Vec<f64>]) -> Vec<usize> {
    let n = a.len();
    // 1-based arrays; index 0 is the virtual source.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
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
            for j in 0..=n {
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
    for j in 1..=n {
        if p[j] != 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}
