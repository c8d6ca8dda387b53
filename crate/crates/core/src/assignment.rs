//! Maximum-weight bipartite assignment (Hungarian algorithm, potentials form).

/// Solves the rectangular maximum-weight assignment problem on an
/// `rows x cols` integer weight matrix. The matrix is padded with zeros to
/// square, so unmatched rows or columns contribute nothing.
///
/// Returns the optimal total weight and, for every row, the matched column
/// (`None` when the row was matched to a padding column).
pub fn max_weight_assignment(weights: &[Vec<i64>]) -> (i64, Vec<Option<usize>>) {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return (0, vec![None; rows]);
    }
    let n = rows.max(cols);
    let max_w = weights.iter().flatten().copied().max().unwrap_or(0).max(0);
    // Minimization cost; padded cells cost `max_w` (weight 0).
    let cost = |i: usize, j: usize| -> i64 {
        if i < rows && j < cols {
            max_w - weights[i][j]
        } else {
            max_w
        }
    };

    // 1-based arrays; index 0 is the virtual column used by the augmenting search.
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![i64::MAX; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
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

    let mut row_to_col = vec![None; rows];
    let mut total = 0i64;
    for j in 1..=n {
        let i = p[j];
        if i >= 1 && i - 1 < rows && j - 1 < cols {
            row_to_col[i - 1] = Some(j - 1);
            total += weights[i - 1][j - 1];
        }
    }
    (total, row_to_col)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(weights: &[Vec<i64>]) -> i64 {
        let rows = weights.len();
        let cols = weights[0].len();
        fn go(r: usize, rows: usize, cols: usize, used: &mut Vec<bool>, w: &[Vec<i64>]) -> i64 {
            if r == rows {
                return 0;
            }
            // row r may stay unmatched
            let mut best = go(r + 1, rows, cols, used, w);
            for c in 0..cols {
                if !used[c] {
                    used[c] = true;
                    best = best.max(w[r][c] + go(r + 1, rows, cols, used, w));
                    used[c] = false;
                }
            }
            best
        }
        go(0, rows, cols, &mut vec![false; cols], weights)
    }

    #[test]
    fn square_example() {
        let w = vec![vec![7, 5, 11], vec![5, 4, 1], vec![9, 3, 2]];
        let (total, m) = max_weight_assignment(&w);
        assert_eq!(total, 24);
        assert_eq!(m, vec![Some(2), Some(1), Some(0)]);
    }

    #[test]
    fn rectangular_leaves_rows_unmatched() {
        let w = vec![vec![3], vec![5], vec![1]];
        let (total, m) = max_weight_assignment(&w);
        assert_eq!(total, 5);
        assert_eq!(m, vec![None, Some(0), None]);
    }

    proptest! {
        #[test]
        fn matches_brute_force(rows in 1usize..6, cols in 1usize..6, seed in proptest::collection::vec(0i64..20, 36)) {
            let w: Vec<Vec<i64>> = (0..rows).map(|i| (0..cols).map(|j| seed[i * 6 + j]).collect()).collect();
            let (total, m) = max_weight_assignment(&w);
            prop_assert_eq!(total, brute_force(&w));
            let recomputed: i64 = m.iter().enumerate().filter_map(|(i, c)| c.map(|c| w[i][c])).sum();
            prop_assert_eq!(recomputed, total);
        }
    }
}
