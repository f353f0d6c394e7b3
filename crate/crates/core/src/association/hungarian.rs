//! Rectangular minimum-cost assignment (Hungarian method with potentials,
//! shortest augmenting paths, O(n²·m) for n ≤ m).

use nalgebra::DMatrix;

/// Minimum-cost assignment over a rectangular matrix. Every row is assigned
/// when `rows <= cols`, otherwise every column. Returns `(row, col)` pairs in
/// increasing row order.
///
/// Ties are resolved deterministically: rows are inserted in index order and
/// the first column attaining a minimum slack is taken.
pub fn solve(costs: &DMatrix<f64>) -> Vec<(usize, usize)> {
    let (rows, cols) = costs.shape();
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    if rows <= cols {
        solve_wide(rows, cols, |r, c| costs[(r, c)])
    } else {
        let mut pairs: Vec<(usize, usize)> = solve_wide(cols, rows, |r, c| costs[(c, r)])
            .into_iter()
            .map(|(c, r)| (r, c))
            .collect();
        pairs.sort_unstable();
        pairs
    }
}

fn solve_wide(n: usize, m: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<(usize, usize)> {
    // 1-based bookkeeping; index 0 is the virtual root column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[col0] = true;
            let i0 = owner[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let slack = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if slack < minv[j] {
                    minv[j] = slack;
                    way[j] = col0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    col1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col0];
            owner[col0] = owner[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }

    let mut pairs: Vec<(usize, usize)> = (1..=m)
        .filter(|&j| owner[j] != 0)
        .map(|j| (owner[j] - 1, j - 1))
        .collect();
    pairs.sort_unstable();
    pairs
}
