//! Stage II: conditional context sampling and coverage diagnostics.
//!
//! The scan stage grows the anchor set by repeatedly taking the token whose
//! minimum cosine distance to the anchors is largest (farthest-point
//! sampling with the focus set as fixed initial centers). A brute-force
//! oracle for the optimal covering radius supports verifying the greedy
//! 2-approximation bound on small instances.

use alloc::vec::Vec;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::geometry::cosine_from_parts;
use crate::index_set::IndexSet;
use crate::matrix::TokenMatrix;

/// Subset-enumeration cap for the exhaustive oracle.
pub const ORACLE_COMBINATION_LIMIT: u128 = 1_000_000;

/// Distance recorded for a seed pick made with no anchors at all (only
/// reachable with an empty focus set): the diameter of the cosine metric.
const SEED_GAIN: f64 = 2.0;

/// Output of conditional context sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    /// The selected scan tokens, ascending.
    pub scan_set: IndexSet,
    /// The same tokens in the order they were picked.
    pub selection_order: Vec<usize>,
    /// Max-min distance achieved at each pick; non-increasing.
    pub gain_sequence: Vec<f64>,
}

/// Coverage radius of a selection, optionally paired with the exhaustive
/// optimum for bound checks on small instances.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub radius: f64,
    pub optimal_radius: Option<f64>,
}

impl CoverageReport {
    /// Whether `radius <= 2 * optimal + 1e-12`. `None` when no optimum is
    /// attached.
    pub fn bound_holds(&self) -> Option<bool> {
        self.optimal_radius.map(|opt| self.radius <= 2.0 * opt + 1e-12)
    }
}

/// Cached row norms so pairwise cosine distances cost one dot product.
struct Norms(Vec<f64>);

impl Norms {
    fn of(tokens: &TokenMatrix) -> Self {
        Self(tokens.iter_rows().map(crate::geometry::norm_unchecked).collect())
    }

    fn distance(&self, tokens: &TokenMatrix, i: usize, j: usize) -> f64 {
        let dot = crate::geometry::dot_unchecked(tokens.row(i), tokens.row(j));
        1.0 - cosine_from_parts(dot, self.0[i], self.0[j])
    }
}

/// Minimum cosine distance from token `i` to any anchor.
pub fn min_distance_to_set(i: usize, anchors: &IndexSet, tokens: &TokenMatrix) -> Result<f64> {
    if anchors.is_empty() {
        return Err(Error::EmptyAnchorSet);
    }
    let n = tokens.rows();
    if i >= n {
        return Err(Error::IndexOutOfBounds { index: i, len: n });
    }
    if let Some(&last) = anchors.as_slice().last() {
        if last >= n {
            return Err(Error::IndexOutOfBounds { index: last, len: n });
        }
    }
    let norms = Norms::of(tokens);
    Ok(anchors.iter().map(|j| norms.distance(tokens, i, j)).fold(f64::INFINITY, f64::min))
}

/// Greedy farthest-point selection of `k_s` tokens conditioned on `focus`.
///
/// A per-token running minimum distance to the anchor set is maintained and
/// refreshed against only the newest anchor each round, so the total cost is
/// O((|F| + k_s) * N * d). Ties in the argmax go to the smaller index. With
/// an empty focus set the first pick is seeded with token 0 (the tie-rule
/// argmax over an empty anchor set) and consumes one of the `k_s` picks.
pub fn conditional_context_sampling(
    tokens: &TokenMatrix,
    focus: &IndexSet,
    k_s: usize,
) -> Result<ScanResult> {
    let n = tokens.rows();
    if let Some(&last) = focus.as_slice().last() {
        if last >= n {
            return Err(Error::IndexOutOfBounds { index: last, len: n });
        }
    }
    let available = n - focus.len();
    if k_s > available {
        return Err(Error::BudgetTooLarge { requested: k_s, available });
    }

    let mut selection_order = Vec::with_capacity(k_s);
    let mut gain_sequence = Vec::with_capacity(k_s);
    if k_s == 0 {
        return Ok(ScanResult {
            scan_set: IndexSet::empty(),
            selection_order,
            gain_sequence,
        });
    }

    let norms = Norms::of(tokens);
    let mut in_anchor_set = alloc::vec![false; n];
    for j in focus.iter() {
        in_anchor_set[j] = true;
    }

    // Running min distance to the current anchor set.
    let mut min_dist = alloc::vec![f64::INFINITY; n];
    let mut remaining = k_s;

    let mut seed_anchor = None;
    if focus.is_empty() {
        seed_anchor = Some(0);
    } else {
        for i in 0..n {
            if in_anchor_set[i] {
                min_dist[i] = 0.0;
                continue;
            }
            let mut best = f64::INFINITY;
            for j in focus.iter() {
                best = best.min(norms.distance(tokens, i, j));
            }
            min_dist[i] = best;
        }
    }

    if let Some(seed) = seed_anchor {
        in_anchor_set[seed] = true;
        selection_order.push(seed);
        gain_sequence.push(SEED_GAIN);
        for i in 0..n {
            if !in_anchor_set[i] {
                min_dist[i] = norms.distance(tokens, i, seed);
            }
        }
        min_dist[seed] = 0.0;
        remaining -= 1;
    }

    for _ in 0..remaining {
        let mut best_idx = usize::MAX;
        let mut best_gain = f64::NEG_INFINITY;
        for i in 0..n {
            if !in_anchor_set[i] && min_dist[i] > best_gain {
                best_gain = min_dist[i];
                best_idx = i;
            }
        }
        debug_assert!(best_idx != usize::MAX, "k_s bounded by available tokens");

        in_anchor_set[best_idx] = true;
        selection_order.push(best_idx);
        gain_sequence.push(best_gain);

        for i in 0..n {
            if !in_anchor_set[i] {
                min_dist[i] = min_dist[i].min(norms.distance(tokens, i, best_idx));
            }
        }
        min_dist[best_idx] = 0.0;
    }

    Ok(ScanResult {
        scan_set: IndexSet::new(selection_order.clone(), n)?,
        selection_order,
        gain_sequence,
    })
}

/// Worst-case distance from any token to the selected set:
/// `max_v min_{u in selected} (1 - cos(v, u))`.
pub fn coverage_radius(tokens: &TokenMatrix, selected: &IndexSet) -> Result<f64> {
    if selected.is_empty() {
        return Err(Error::EmptySelection);
    }
    let n = tokens.rows();
    if let Some(&last) = selected.as_slice().last() {
        if last >= n {
            return Err(Error::IndexOutOfBounds { index: last, len: n });
        }
    }
    let norms = Norms::of(tokens);
    let mut radius: f64 = 0.0;
    for v in 0..n {
        if selected.contains(v) {
            continue;
        }
        let mut nearest = f64::INFINITY;
        for u in selected.iter() {
            nearest = nearest.min(norms.distance(tokens, v, u));
        }
        radius = radius.max(nearest);
    }
    Ok(radius)
}

fn binomial_saturating(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Exact optimal covering radius over every size-`k_s` extension of `focus`,
/// by exhaustive subset enumeration. The full pairwise distance matrix is
/// materialized here, so this is restricted to small instances:
/// C(N - |F|, k_s) must not exceed [`ORACLE_COMBINATION_LIMIT`].
pub fn optimal_covering_radius(
    tokens: &TokenMatrix,
    focus: &IndexSet,
    k_s: usize,
) -> Result<f64> {
    let n = tokens.rows();
    if let Some(&last) = focus.as_slice().last() {
        if last >= n {
            return Err(Error::IndexOutOfBounds { index: last, len: n });
        }
    }
    let available = n - focus.len();
    if k_s > available {
        return Err(Error::BudgetTooLarge { requested: k_s, available });
    }
    if focus.is_empty() && k_s == 0 {
        return Err(Error::EmptySelection);
    }
    let combinations = binomial_saturating(available, k_s);
    if combinations > ORACLE_COMBINATION_LIMIT {
        return Err(Error::OracleTooLarge { combinations, limit: ORACLE_COMBINATION_LIMIT });
    }

    let norms = Norms::of(tokens);
    let mut dist = alloc::vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = norms.distance(tokens, i, j);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }

    // Distance to the fixed focus centers is shared by every candidate.
    let focus_dist: Vec<f64> = (0..n)
        .map(|v| {
            focus
                .iter()
                .map(|u| dist[v * n + u])
                .fold(f64::INFINITY, f64::min)
        })
        .collect();

    let candidates: Vec<usize> = focus.complement(n).as_slice().to_vec();
    let mut best = f64::INFINITY;
    for subset in candidates.iter().copied().combinations(k_s) {
        let mut radius: f64 = 0.0;
        for v in 0..n {
            let mut nearest = focus_dist[v];
            for &u in &subset {
                nearest = nearest.min(dist[v * n + u]);
            }
            radius = radius.max(nearest);
            if radius >= best {
                break;
            }
        }
        best = best.min(radius);
    }
    Ok(best)
}
