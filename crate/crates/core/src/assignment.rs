//! Exact minimum-cost perfect matching on square cost matrices.

use crate::error::{Error, Result};

/// Largest problem accepted by [`min_cost_assignment`].
pub const MAX_ASSIGNMENT_SIZE: usize = 512;

/// Solves the assignment problem for a row-major `n × n` cost matrix.
///
/// Returns `perm` with row `i` matched to column `perm[i]`, and the total
/// cost. Among all optimal matchings the lexicographically smallest `perm` is
/// returned.
pub fn min_cost_assignment(cost: &[f64], n: usize) -> Result<(Vec<usize>, f64)> {
    if n > MAX_ASSIGNMENT_SIZE {
        return Err(Error::AssignmentBudgetExceeded { size: n, max: MAX_ASSIGNMENT_SIZE });
    }
    if cost.len() != n * n {
        return Err(Error::DimensionMismatch(format!("{} costs for a {n}×{n} problem", cost.len())));
    }
    if let Some(i) = cost.iter().position(|c| !c.is_finite()) {
        return Err(Error::NonFinite { index: i });
    }
    if n == 0 {
        return Ok((Vec::new(), 0.0));
    }
    let (u, v, perm) = hungarian(cost, n);
    let scale = cost.iter().fold(1.0f64, |a, c| a.max(c.abs()));
    let tol = 1e-9 * scale;
    let tight = |i: usize, j: usize| cost[i * n + j] - u[i] - v[j] <= tol;
    let perm = lexicographic_tight_matching(n, perm, tight);
    let total = perm.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
    Ok((perm, total))
}

/// Shortest augmenting path Hungarian method with row/column potentials.
/// Returns the potentials and an optimal matching; every matched edge is
/// tight and every reduced cost is non-negative.
fn hungarian(cost: &[f64], n: usize) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let inf = f64::INFINITY;
    // 1-based internally; index 0 is the virtual root.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut col_owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        col_owner[0] = row;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
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
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0usize; n];
    for j in 1..=n {
        perm[col_owner[j] - 1] = j - 1;
    }
    (u[1..].to_vec(), v[1..].to_vec(), perm)
}

/// Lexicographically smallest perfect matching using only tight edges,
/// starting from a known tight perfect matching `perm`.
fn lexicographic_tight_matching(n: usize, mut perm: Vec<usize>, tight: impl Fn(usize, usize) -> bool) -> Vec<usize> {
    let mut owner = vec![0usize; n];
    for (i, &j) in perm.iter().enumerate() {
        owner[j] = i;
    }
    for i in 0..n {
        for j in 0..n {
            if j == perm[i] {
                break;
            }
            // columns of earlier rows are fixed
            if owner[j] < i || !tight(i, j) {
                continue;
            }
            // Give column j to row i. Its current owner k must reach the
            // column i releases through an alternating path over rows > i.
            let k = owner[j];
            let freed = perm[i];
            let mut visited = vec![false; n];
            visited[j] = true;
            let mut path = Vec::new();
            if augment(k, freed, i, &perm, &owner, &tight, &mut visited, &mut path) {
                for &(r, c) in path.iter().rev() {
                    perm[r] = c;
                    owner[c] = r;
                }
                perm[i] = j;
                owner[j] = i;
                break;
            }
        }
    }
    perm
}

/// Depth-first search for a tight alternating path from `row` to `target`,
/// using only rows after `fixed`. On success `path` holds the new
/// `(row, column)` assignments.
#[allow(clippy::too_many_arguments)]
fn augment(
    row: usize,
    target: usize,
    fixed: usize,
    perm: &[usize],
    owner: &[usize],
    tight: &impl Fn(usize, usize) -> bool,
    visited: &mut [bool],
    path: &mut Vec<(usize, usize)>,
) -> bool {
    let n = perm.len();
    for c in 0..n {
        if visited[c] || !tight(row, c) {
            continue;
        }
        visited[c] = true;
        if c == target {
            path.push((row, c));
            return true;
        }
        let next = owner[c];
        if next <= fixed {
            continue;
        }
        if augment(next, target, fixed, perm, owner, tight, visited, path) {
            path.push((row, c));
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(cost: &[f64], n: usize) -> (Vec<usize>, f64) {
        fn rec(i: usize, n: usize, cost: &[f64], cur: &mut Vec<usize>, used: &mut [bool], best: &mut (Vec<usize>, f64)) {
            if i == n {
                let c: f64 = cur.iter().enumerate().map(|(r, &j)| cost[r * n + j]).sum();
                if c < best.1 - 1e-12 {
                    *best = (cur.clone(), c);
                }
                return;
            }
            for j in 0..n {
                if !used[j] {
                    used[j] = true;
                    cur.push(j);
                    rec(i + 1, n, cost, cur, used, best);
                    cur.pop();
                    used[j] = false;
                }
            }
        }
        let mut best = (Vec::new(), f64::INFINITY);
        rec(0, n, cost, &mut Vec::new(), &mut vec![false; n], &mut best);
        best
    }

    #[test]
    fn small_cases() {
        assert_eq!(min_cost_assignment(&[3.0], 1).unwrap(), (vec![0], 3.0));
        assert_eq!(min_cost_assignment(&[0.0, 5.0, 5.0, 0.0], 2).unwrap(), (vec![0, 1], 0.0));
        assert_eq!(min_cost_assignment(&[5.0, 0.0, 0.0, 5.0], 2).unwrap(), (vec![1, 0], 0.0));
        assert_eq!(min_cost_assignment(&[1.0; 9], 3).unwrap().0, vec![0, 1, 2]);
    }

    #[test]
    fn ties_resolve_to_smallest_permutation() {
        // rows 0 and 1 are interchangeable; the optimum is reachable as
        // [2,0,1] or [0,2,1] only through tight edges.
        let cost = [
            1.0, 9.0, 1.0, //
            1.0, 9.0, 1.0, //
            9.0, 0.0, 9.0,
        ];
        let (perm, total) = min_cost_assignment(&cost, 3).unwrap();
        assert_eq!(perm, vec![0, 2, 1]);
        assert_eq!(total, 2.0);
    }

    #[test]
    fn matches_brute_force_with_many_ties() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = rng.gen_range(1..=6);
            let cost: Vec<f64> = (0..n * n).map(|_| rng.gen_range(0..4) as f64).collect();
            assert_eq!(min_cost_assignment(&cost, n).unwrap(), brute(&cost, n));
        }
    }

    #[test]
    fn budget_is_enforced() {
        let n = MAX_ASSIGNMENT_SIZE + 1;
        assert!(matches!(
            min_cost_assignment(&vec![0.0; n * n], n),
            Err(Error::AssignmentBudgetExceeded { size, max: MAX_ASSIGNMENT_SIZE }) if size == n
        ));
    }
}
