//! Optimal assignment (Kuhn-Munkres with row/column potentials).

/// Minimum-cost perfect assignment on a square cost matrix. Returns
/// `col_of_row`. Ties resolve toward lower indices.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    debug_assert!(cost.iter().all(|r| r.len() == n));
    // 1-based potentials; index 0 is the virtual root.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of_col[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
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
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of_row = vec![0usize; n];
    for j in 1..=n {
        col_of_row[row_of_col[j] - 1] = j - 1;
    }
    col_of_row
}

/// Maximum-weight assignment of rows (UEs) to columns (steps) on a rate
/// matrix, solved as a minimum-cost problem on `C_max - C`. Returns
/// `row_of_col`, i.e. the UE decoded at each step.
pub fn max_weight_assignment(c: &[Vec<f64>]) -> Vec<usize> {
    let c_max = c.iter().flatten().cloned().fold(f64::NEG_INFINITY, f64::max);
    let cost: Vec<Vec<f64>> = c.iter().map(|r| r.iter().map(|&x| c_max - x).collect()).collect();
    let col_of_row = min_cost_assignment(&cost);
    let mut row_of_col = vec![0usize; c.len()];
    for (r, &col) in col_of_row.iter().enumerate() {
        row_of_col[col] = r;
    }
    row_of_col
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_dominant() {
        let c = vec![vec![10.0, 1.0], vec![1.0, 10.0]];
        assert_eq!(max_weight_assignment(&c), vec![0, 1]);
    }

    #[test]
    fn anti_diagonal() {
        let cost = vec![vec![5.0, 1.0, 9.0], vec![1.0, 9.0, 9.0], vec![9.0, 9.0, 1.0]];
        assert_eq!(min_cost_assignment(&cost), vec![1, 0, 2]);
    }

    #[test]
    fn single() {
        assert_eq!(max_weight_assignment(&[vec![3.0]]), vec![0]);
        assert!(min_cost_assignment(&[]).is_empty());
    }
}
