//! Score normalization and deterministic ordering.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Min-max normalize into [0, 1].
///
/// A constant vector maps to all ones: one is the neutral factor of the
/// multiplicative score fusion, so a degenerate pathway cancels out instead
/// of zeroing every priority.
pub fn min_max_normalize(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !scores.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &x in scores {
        min = min.min(x);
        max = max.max(x);
    }
    if min == max {
        return Ok(alloc::vec![1.0; scores.len()]);
    }
    let span = max - min;
    Ok(scores.iter().map(|&x| (x - min) / span).collect())
}

/// Indices sorted by score descending; ties broken by ascending original
/// index. Deterministic across runs and thread counts.
pub fn stable_argsort_desc(scores: &[f64]) -> Result<Vec<usize>> {
    if !scores.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // Stable sort on descending score keeps equal scores in ascending
    // index order because the input enumeration is ascending. partial_cmp
    // cannot fail here (finiteness checked above) and treats -0.0 == 0.0,
    // so signed zeros count as ties.
    order.sort_by(|&i, &j| scores[j].partial_cmp(&scores[i]).expect("finite scores"));
    Ok(order)
}
