//! Dense linear sum assignment by shortest augmenting paths
//! (Jonker–Volgenant with Crouse's rectangular formulation).

use crate::error::{Error, Result};

/// Minimum-cost perfect matching of a square `n × n` row-major cost matrix.
/// Returns `col_for_row`.
pub fn solve(cost: &[f64], n: usize) -> Result<Vec<usize>> {
    if cost.len() != n * n {
        return Err(Error::SizeMismatch(format!("cost has {} entries, expected {}", cost.len(), n * n)));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::NumericalBreakdown("non-finite assignment cost".into()));
    }
    const NONE: usize = usize::MAX;
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut shortest = vec![f64::INFINITY; n];
    let mut path = vec![NONE; n];
    let mut col4row = vec![NONE; n];
    let mut row4col = vec![NONE; n];
    let mut sr = vec![false; n];
    let mut sc = vec![false; n];
    let mut remaining = vec![0usize; n];

    for cur_row in 0..n {
        // Dijkstra-like search for the shortest augmenting path from cur_row.
        let mut min_val = 0.0;
        let mut num_remaining = n;
        for (it, r) in remaining.iter_mut().enumerate() {
            *r = n - it - 1;
        }
        sr.fill(false);
        sc.fill(false);
        shortest.fill(f64::INFINITY);
        let mut i = cur_row;
        let sink = loop {
            let mut index = NONE;
            let mut lowest = f64::INFINITY;
            sr[i] = true;
            for it in 0..num_remaining {
                let j = remaining[it];
                let r = min_val + cost[i * n + j] - u[i] - v[j];
                if r < shortest[j] {
                    path[j] = i;
                    shortest[j] = r;
                }
                if shortest[j] < lowest || (shortest[j] == lowest && row4col[j] == NONE) {
                    lowest = shortest[j];
                    index = it;
                }
            }
            min_val = lowest;
            if index == NONE || min_val == f64::INFINITY {
                return Err(Error::NumericalBreakdown("assignment problem is infeasible".into()));
            }
            let j = remaining[index];
            sc[j] = true;
            num_remaining -= 1;
            remaining[index] = remaining[num_remaining];
            if row4col[j] == NONE {
                break j;
            }
            i = row4col[j];
        };

        // Dual update.
        u[cur_row] += min_val;
        for r in 0..n {
            if sr[r] && r != cur_row {
                u[r] += min_val - shortest[col4row[r]];
            }
        }
        for c in 0..n {
            if sc[c] {
                v[c] -= min_val - shortest[c];
            }
        }

        // Augment along the path.
        let mut j = sink;
        loop {
            let r = path[j];
            row4col[j] = r;
            std::mem::swap(&mut col4row[r], &mut j);
            if r == cur_row {
                break;
            }
        }
    }
    Ok(col4row)
}

/// Total cost of an assignment, summed in row order.
pub fn assignment_cost(cost: &[f64], n: usize, col_for_row: &[usize]) -> f64 {
    (0..n).map(|i| cost[i * n + col_for_row[i]]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_known_problem() {
        // Classic 3×3 instance with optimum 5 (0→1, 1→0, 2→2).
        let c = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let a = solve(&c, 3).unwrap();
        assert_eq!(assignment_cost(&c, 3, &a), 5.0);
    }

    #[test]
    fn identity_is_optimal_for_diagonal_zero() {
        let n = 4;
        let c: Vec<f64> = (0..n * n).map(|k| if k / n == k % n { 0.0 } else { 1.0 }).collect();
        assert_eq!(solve(&c, n).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn empty_problem() {
        assert!(solve(&[], 0).unwrap().is_empty());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(solve(&[1.0, 2.0], 2).is_err());
        assert!(solve(&[f64::NAN], 1).is_err());
    }
}
