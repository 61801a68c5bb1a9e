//! Shortest-augmenting-path Hungarian method for square assignment problems
//! with forbidden cells.

/// Optimal assignment of a square assignment problem and its dual.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `row_to_col[i]` is the column assigned to row `i`.
    pub row_to_col: Vec<usize>,
    /// `u[i] + v[j] <= cost[i][j]` on allowed cells, equality on the
    /// assignment.
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Minimizes `sum cost[i][row_to_col[i]]`. `None` cells are forbidden.
/// Returns `None` when no perfect matching avoids the forbidden cells.
pub fn solve_min(cost: &[Vec<Option<f64>>]) -> Option<Assignment> {
    let n = cost.len();
    if n == 0 {
        return Some(Assignment {
            row_to_col: Vec::new(),
            u: Vec::new(),
            v: Vec::new(),
        });
    }
    // 1-based arrays with a dummy column 0, as in the classical formulation.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                if let Some(c) = cost[i0 - 1][j - 1] {
                    let cur = c - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if delta == f64::INFINITY {
                return None;
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
    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        row_to_col[p[j] - 1] = j - 1;
    }
    Some(Assignment {
        row_to_col,
        u: u[1..].to_vec(),
        v: v[1..].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn small_assignment() {
        let c = vec![
            vec![Some(4.0), Some(1.0), Some(3.0)],
            vec![Some(2.0), Some(0.0), Some(5.0)],
            vec![Some(3.0), Some(2.0), Some(2.0)],
        ];
        let a = solve_min(&c).unwrap();
        let total: f64 = a.row_to_col.iter().enumerate().map(|(i, &j)| c[i][j].unwrap()).sum();
        assert_eq!(total, 5.0);
        for i in 0..3 {
            for j in 0..3 {
                assert!(a.u[i] + a.v[j] <= c[i][j].unwrap() + 1e-12);
            }
            assert!((a.u[i] + a.v[a.row_to_col[i]] - c[i][a.row_to_col[i]].unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn forbidden_cells() {
        let c = vec![vec![Some(0.0), None], vec![None, Some(7.0)]];
        assert_eq!(solve_min(&c).unwrap().row_to_col, vec![0, 1]);
        let blocked = vec![vec![Some(0.0), Some(1.0)], vec![None, None]];
        assert!(solve_min(&blocked).is_none());
        let hall = vec![vec![Some(0.0), None], vec![Some(1.0), None]];
        assert!(solve_min(&hall).is_none());
    }
}
