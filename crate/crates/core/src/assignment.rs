//! The permutation side: exact quotient distance by enumeration, and an exact
//! linear assignment solver reused as the vertex oracle over the Birkhoff
//! polytope (its extreme points are exactly the permutation matrices).
//!
//! Enumeration is lexicographic with the first-found maximum retained, so ties
//! resolve to the lexicographically smallest permutation and results do not
//! depend on scheduling. The default cap keeps the exact oracle interactive:
//! 9! permutations with an O(n^2) objective is about 3e7 flops.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kahan::{self, KahanSum};
use crate::matrices::{GaugeMatrix, Permutation};

/// Largest n for which full permutation enumeration is attempted by default.
pub const DEFAULT_ENUMERATION_CAP: usize = 9;

/// Advance `arr` to its lexicographic successor; false when already last.
fn next_permutation(arr: &mut [usize]) -> bool {
    if arr.len() < 2 {
        return false;
    }
    let mut i = arr.len() - 1;
    while i > 0 && arr[i - 1] >= arr[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = arr.len() - 1;
    while arr[j] <= arr[i - 1] {
        j -= 1;
    }
    arr.swap(i - 1, j);
    arr[i..].reverse();
    true
}

/// Visit all permutations of {0..n-1} in lexicographic order.
pub(crate) fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    let mut arr: Vec<usize> = (0..n).collect();
    loop {
        f(&arr);
        if !next_permutation(&mut arr) {
            break;
        }
    }
}

/// Correlation of two gauges under a relabeling:
/// `sum_{i,j} f_ij * g[sigma(i)][sigma(j)]` (unnormalized).
pub fn perm_correlation(f: &GaugeMatrix, g: &GaugeMatrix, sigma: &Permutation) -> Result<f64> {
    let n = f.n();
    if g.n() != n {
        return Err(Error::DimensionMismatch(n, g.n()));
    }
    if sigma.n() != n {
        return Err(Error::DimensionMismatch(n, sigma.n()));
    }
    Ok(correlation_raw(f, g, sigma.as_slice()))
}

fn correlation_raw(f: &GaugeMatrix, g: &GaugeMatrix, map: &[usize]) -> f64 {
    let mut acc = KahanSum::new();
    for i in 0..map.len() {
        for j in 0..map.len() {
            acc.add(f.entry(i, j) * g.entry(map[i], map[j]));
        }
    }
    acc.value()
}

/// Exact maximum of [`perm_correlation`] over all n! permutations.
///
/// Ties break to the lexicographically smallest permutation. Errors when n
/// exceeds `cap`.
pub fn max_perm_correlation(
    f: &GaugeMatrix,
    g: &GaugeMatrix,
    cap: usize,
) -> Result<(f64, Permutation)> {
    let n = f.n();
    if g.n() != n {
        return Err(Error::DimensionMismatch(n, g.n()));
    }
    if n > cap {
        return Err(Error::EnumerationCap { n, cap });
    }
    let mut best = f64::NEG_INFINITY;
    let mut best_map: Vec<usize> = (0..n).collect();
    for_each_permutation(n, |map| {
        let v = correlation_raw(f, g, map);
        if v > best {
            best = v;
            best_map.copy_from_slice(map);
        }
    });
    Ok((best, Permutation::from_zero_based(best_map)?))
}

/// Quotient distance `min_sigma |f - sigma*g|` via the expansion
/// `|f - sigma*g|^2 = |f|^2 + |g|^2 - (2/n^2) sum f_ij g[sigma(i)][sigma(j)]`,
/// together with an optimal permutation.
pub fn quotient_distance(
    f: &GaugeMatrix,
    g: &GaugeMatrix,
    cap: usize,
) -> Result<(f64, Permutation)> {
    let (corr, sigma) = max_perm_correlation(f, g, cap)?;
    let n = f.n() as f64;
    let sq = f.l2_norm_sq() + g.l2_norm_sq() - 2.0 / (n * n) * corr;
    Ok((sq.max(0.0).sqrt(), sigma))
}

/// Quotient distance computed directly as `min_sigma |f - sigma*g|`, without
/// the expansion identity. Kept as the independent route for cross-checks.
pub fn quotient_distance_direct(
    f: &GaugeMatrix,
    g: &GaugeMatrix,
    cap: usize,
) -> Result<(f64, Permutation)> {
    let n = f.n();
    if g.n() != n {
        return Err(Error::DimensionMismatch(n, g.n()));
    }
    if n > cap {
        return Err(Error::EnumerationCap { n, cap });
    }
    let mut best = f64::INFINITY;
    let mut best_map: Vec<usize> = (0..n).collect();
    for_each_permutation(n, |map| {
        let mut acc = KahanSum::new();
        for i in 0..n {
            for j in 0..n {
                let d = f.entry(i, j) - g.entry(map[i], map[j]);
                acc.add(d * d);
            }
        }
        let v = acc.value();
        if v < best {
            best = v;
            best_map.copy_from_slice(map);
        }
    });
    let nn = (n * n) as f64;
    Ok((
        (best / nn).max(0.0).sqrt(),
        Permutation::from_zero_based(best_map)?,
    ))
}

/// Exact maximum-weight perfect assignment on a square cost matrix: returns a
/// permutation maximizing `sum_i c[i][sigma(i)]` and the value. Shortest
/// augmenting path with potentials, O(n^3); entries must be finite.
pub fn linear_assignment_max(c: &DMatrix<f64>) -> (Permutation, f64) {
    assert_eq!(c.nrows(), c.ncols(), "cost matrix must be square");
    assert!(
        c.iter().all(|x| x.is_finite()),
        "cost entries must be finite"
    );
    let n = c.nrows();
    if n == 0 {
        return (Permutation::identity(0), 0.0);
    }
    let neg = c.map(|x| -x);
    let row_to_col = solve_min(&neg);
    let sigma = Permutation::from_zero_based(row_to_col).expect("solver returns a bijection");
    let value = kahan::sum((0..n).map(|i| c[(i, sigma.apply(i))]));
    (sigma, value)
}

/// Minimum-cost perfect assignment; returns row -> column.
fn solve_min(a: &DMatrix<f64>) -> Vec<usize> {
    const NONE: usize = usize::MAX;
    let n = a.nrows();
    let mut u = vec![0.0f64; n]; // row potentials
    let mut v = vec![0.0f64; n + 1]; // column potentials, slot n is the virtual start column
    let mut matched_row: Vec<usize> = vec![NONE; n + 1]; // column -> row
    for i in 0..n {
        matched_row[n] = i;
        let mut j0 = n;
        let mut min_to = vec![f64::INFINITY; n + 1];
        let mut prev = vec![n; n + 1];
        let mut used = vec![false; n + 1];
        // grow the alternating tree until a free column is reached
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = n;
            for j in 0..n {
                if !used[j] {
                    let reduced = a[(i0, j)] - u[i0] - v[j];
                    if reduced < min_to[j] {
                        min_to[j] = reduced;
                        prev[j] = j0;
                    }
                    if min_to[j] < delta {
                        delta = min_to[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == NONE {
                break;
            }
        }
        // augment along the recorded path
        while j0 != n {
            let j1 = prev[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
        }
    }
    let mut row_to_col = vec![NONE; n];
    for (j, &i) in matched_row.iter().enumerate().take(n) {
        row_to_col[i] = j;
    }
    row_to_col
}
