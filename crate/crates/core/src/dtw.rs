//! Dynamic time warping of scalar series.
//!
//! Symmetric step pattern (match, insertion, deletion) with squared
//! differences as the local cost. Backtracking prefers the diagonal step on
//! ties, then the step that advances the reference, then the query.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DtwAlignment {
    /// Sum of local costs along the optimal path.
    pub distance: f64,
    /// `(reference index, query index)` pairs from `(0, 0)` to the last cells.
    pub path: Vec<(usize, usize)>,
    /// The query resampled onto the reference index: entry `i` averages the
    /// query values matched to reference index `i`.
    pub warped: Vec<f64>,
}

/// Cumulative cost matrix, row-major `reference.len() x query.len()`.
fn cumulative_costs(reference: &[f64], query: &[f64]) -> Vec<f64> {
    let (n, m) = (reference.len(), query.len());
    let mut acc = vec![f64::INFINITY; n * m];
    for i in 0..n {
        for j in 0..m {
            let d = reference[i] - query[j];
            let local = d * d;
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let diag = if i > 0 && j > 0 {
                    acc[(i - 1) * m + j - 1]
                } else {
                    f64::INFINITY
                };
                let up = if i > 0 {
                    acc[(i - 1) * m + j]
                } else {
                    f64::INFINITY
                };
                let left = if j > 0 {
                    acc[i * m + j - 1]
                } else {
                    f64::INFINITY
                };
                diag.min(up).min(left)
            };
            acc[i * m + j] = local + best;
        }
    }
    acc
}

/// DTW distance only.
pub fn dtw_distance(reference: &[f64], query: &[f64]) -> f64 {
    if reference.is_empty() || query.is_empty() {
        return if reference.is_empty() && query.is_empty() {
            0.0
        } else {
            f64::INFINITY
        };
    }
    *cumulative_costs(reference, query)
        .last()
        .expect("non-empty grid")
}

/// Aligns `query` onto `reference`. Returns `None` if either series is empty.
pub fn dtw_align(reference: &[f64], query: &[f64]) -> Option<DtwAlignment> {
    if reference.is_empty() || query.is_empty() {
        return None;
    }
    let (n, m) = (reference.len(), query.len());
    let acc = cumulative_costs(reference, query);
    let at = |i: usize, j: usize| acc[i * m + j];

    let mut path = vec![(n - 1, m - 1)];
    let (mut i, mut j) = (n - 1, m - 1);
    while i > 0 || j > 0 {
        (i, j) = if i == 0 {
            (0, j - 1)
        } else if j == 0 {
            (i - 1, 0)
        } else {
            let diag = at(i - 1, j - 1);
            let up = at(i - 1, j);
            let left = at(i, j - 1);
            if diag <= up && diag <= left {
                (i - 1, j - 1)
            } else if up <= left {
                (i - 1, j)
            } else {
                (i, j - 1)
            }
        };
        path.push((i, j));
    }
    path.reverse();

    let mut sums = vec![0.0; n];
    let mut counts = vec![0usize; n];
    for &(ri, qj) in &path {
        sums[ri] += query[qj];
        counts[ri] += 1;
    }
    let warped = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .collect();

    Some(DtwAlignment {
        distance: at(n - 1, m - 1),
        path,
        warped,
    })
}
