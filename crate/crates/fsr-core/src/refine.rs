//! Stage III: absorb discarded tokens into their nearest scan anchors.
//!
//! Each discarded token is assigned to the scan anchor it is most similar
//! to; the top-M assignments (M = floor(kappa * |S|)) are merged into their
//! anchors by a running priority-weighted average. Focus tokens are never
//! touched.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{cosine_from_parts, dot_unchecked, norm_unchecked};
use crate::index_set::IndexSet;
use crate::matrix::TokenMatrix;

/// One discarded token mapped to its nearest scan anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct RefineAssignment {
    pub discarded_index: usize,
    pub anchor_index: usize,
    /// Cosine similarity between the discarded token and the anchor.
    pub similarity: f64,
}

/// Refined anchor embeddings with their accumulated weights.
///
/// Row `j` of `vectors` corresponds to the `j`-th scan index in ascending
/// order. `weights[j]` starts at the anchor's priority and accumulates the
/// priorities of every absorbed member; `member_lists[j]` records which
/// discarded tokens were merged in (for observability only).
#[derive(Debug, Clone, PartialEq)]
pub struct RefinedTokens {
    vectors: Vec<f64>,
    dim: usize,
    pub weights: Vec<f64>,
    pub member_lists: Vec<Vec<usize>>,
}

impl RefinedTokens {
    pub fn anchor_count(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Refined embedding of the `j`-th anchor (ascending scan order).
    pub fn vector(&self, j: usize) -> &[f64] {
        &self.vectors[j * self.dim..(j + 1) * self.dim]
    }
}

/// Map every discarded token to the scan anchor with the highest cosine
/// similarity; ties go to the smaller anchor index.
pub fn assign_nearest_anchor(
    discarded: &IndexSet,
    scan: &IndexSet,
    tokens: &TokenMatrix,
) -> Result<Vec<RefineAssignment>> {
    if scan.is_empty() {
        return Err(Error::EmptyScanSet);
    }
    let n = tokens.rows();
    for set in [discarded, scan] {
        if let Some(&last) = set.as_slice().last() {
            if last >= n {
                return Err(Error::IndexOutOfBounds { index: last, len: n });
            }
        }
    }

    let anchor_norms: Vec<f64> =
        scan.iter().map(|j| norm_unchecked(tokens.row(j))).collect();

    let mut assignments = Vec::with_capacity(discarded.len());
    for i in discarded.iter() {
        let row = tokens.row(i);
        let row_norm = norm_unchecked(row);
        let mut best_anchor = usize::MAX;
        let mut best_sim = f64::NEG_INFINITY;
        for (slot, j) in scan.iter().enumerate() {
            let sim = cosine_from_parts(dot_unchecked(row, tokens.row(j)), row_norm, anchor_norms[slot]);
            // strict > keeps the first (smallest) anchor index on ties
            if sim > best_sim {
                best_sim = sim;
                best_anchor = j;
            }
        }
        assignments.push(RefineAssignment {
            discarded_index: i,
            anchor_index: best_anchor,
            similarity: best_sim,
        });
    }
    Ok(assignments)
}

/// Keep the M = min(floor(kappa * scan_size), |D|) assignments with the
/// highest similarity to their assigned anchors; ties go to the smaller
/// discarded index. Returns the retained discarded indices, ascending.
pub fn select_top_m(
    assignments: &[RefineAssignment],
    kappa: f64,
    scan_size: usize,
) -> Result<IndexSet> {
    if !kappa.is_finite() || kappa < 0.0 {
        return Err(Error::InvalidConfig("kappa must be finite and >= 0"));
    }
    let budget = libm::floor(kappa * scan_size as f64);
    let m = if budget >= assignments.len() as f64 {
        assignments.len()
    } else {
        budget as usize
    };

    let mut order: Vec<usize> = (0..assignments.len()).collect();
    order.sort_by(|&a, &b| {
        assignments[b]
            .similarity
            .partial_cmp(&assignments[a].similarity)
            .expect("similarities are finite")
            .then(assignments[a].discarded_index.cmp(&assignments[b].discarded_index))
    });

    let top: Vec<usize> = order[..m].iter().map(|&k| assignments[k].discarded_index).collect();
    Ok(IndexSet::from_distinct(top))
}

/// One step of the running weighted average:
/// `v <- (w * v + w_new * v_new) / (w + w_new)`, then `w <- w + w_new`.
/// A zero combined weight leaves the vector unchanged.
pub fn running_merge_step(vector: &mut [f64], weight: &mut f64, member: &[f64], member_weight: f64) {
    let total = *weight + member_weight;
    if total == 0.0 {
        return;
    }
    for (v, &m) in vector.iter_mut().zip(member) {
        *v = (*weight * *v + member_weight * m) / total;
    }
    *weight = total;
}

/// Merge the retained discarded tokens into their anchors with running
/// priority-weighted averages, applied in ascending discarded-index order.
///
/// Weights start at each anchor's priority; the result per anchor equals the
/// closed-form weighted mean of the anchor and its absorbed members. Anchor
/// groups whose total weight is zero keep the original anchor vector.
pub fn weighted_merge(
    scan: &IndexSet,
    d_top: &IndexSet,
    assignments: &[RefineAssignment],
    phi: &[f64],
    tokens: &TokenMatrix,
) -> Result<RefinedTokens> {
    if scan.is_empty() {
        return Err(Error::EmptyScanSet);
    }
    let n = tokens.rows();
    if phi.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: phi.len() });
    }
    let d = tokens.cols();

    let anchor_slot = |j: usize| -> Result<usize> {
        scan.as_slice()
            .binary_search(&j)
            .map_err(|_| Error::IndexOutOfBounds { index: j, len: n })
    };

    let mut vectors = Vec::with_capacity(scan.len() * d);
    let mut weights = Vec::with_capacity(scan.len());
    for j in scan.iter() {
        vectors.extend_from_slice(tokens.row(j));
        weights.push(phi[j]);
    }
    let mut member_lists: Vec<Vec<usize>> = alloc::vec![Vec::new(); scan.len()];

    let mut assignment_of = alloc::vec![usize::MAX; n];
    for (k, a) in assignments.iter().enumerate() {
        if a.discarded_index >= n {
            return Err(Error::IndexOutOfBounds { index: a.discarded_index, len: n });
        }
        assignment_of[a.discarded_index] = k;
    }

    // d_top is ascending, fixing the merge application order.
    for i in d_top.iter() {
        let k = assignment_of.get(i).copied().unwrap_or(usize::MAX);
        if k == usize::MAX {
            return Err(Error::IndexOutOfBounds { index: i, len: n });
        }
        let assignment = &assignments[k];
        let slot = anchor_slot(assignment.anchor_index)?;
        let (vector, weight) = (
            &mut vectors[slot * d..(slot + 1) * d],
            &mut weights[slot],
        );
        running_merge_step(vector, weight, tokens.row(i), phi[i]);
        member_lists[slot].push(i);
    }

    Ok(RefinedTokens { vectors, dim: d, weights, member_lists })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn assignment_prefers_collinear_anchor() {
        // tokens: 0 = discarded near [1,0]; 1, 2 = anchors
        let tokens =
            TokenMatrix::new(3, 2, vec![1.0, 0.01, 1.0, 0.0, 0.0, 1.0]).unwrap();
        let discarded = IndexSet::new(vec![0], 3).unwrap();
        let scan = IndexSet::new(vec![1, 2], 3).unwrap();
        let got = assign_nearest_anchor(&discarded, &scan, &tokens).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].anchor_index, 1);
        assert!(got[0].similarity > 0.999);
    }

    #[test]
    fn assignment_singleton_anchor_takes_all() {
        let tokens = TokenMatrix::new(3, 2, vec![1.0, 0.0, 0.0, 1.0, -1.0, 0.0]).unwrap();
        let discarded = IndexSet::new(vec![1, 2], 3).unwrap();
        let scan = IndexSet::new(vec![0], 3).unwrap();
        let got = assign_nearest_anchor(&discarded, &scan, &tokens).unwrap();
        assert!(got.iter().all(|a| a.anchor_index == 0));
    }

    #[test]
    fn assignment_tie_takes_smaller_anchor_index() {
        // discarded token at 45 degrees between two unit anchors
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let tokens = TokenMatrix::new(3, 2, vec![s, s, 1.0, 0.0, 0.0, 1.0]).unwrap();
        let discarded = IndexSet::new(vec![0], 3).unwrap();
        let scan = IndexSet::new(vec![1, 2], 3).unwrap();
        let got = assign_nearest_anchor(&discarded, &scan, &tokens).unwrap();
        assert_eq!(got[0].anchor_index, 1);
    }

    #[test]
    fn assignment_requires_scan() {
        let tokens = TokenMatrix::new(1, 1, vec![1.0]).unwrap();
        let discarded = IndexSet::new(vec![0], 1).unwrap();
        assert_eq!(
            assign_nearest_anchor(&discarded, &IndexSet::empty(), &tokens),
            Err(Error::EmptyScanSet)
        );
    }

    fn mock_assignments(sims: &[(usize, f64)]) -> Vec<RefineAssignment> {
        sims.iter()
            .map(|&(i, s)| RefineAssignment { discarded_index: i, anchor_index: 0, similarity: s })
            .collect()
    }

    #[test]
    fn top_m_examples() {
        let a = mock_assignments(&[
            (0, 0.9), (1, 0.1), (2, 0.8), (3, 0.2), (4, 0.7),
            (5, 0.3), (6, 0.6), (7, 0.4), (8, 0.5), (9, 0.0),
        ]);
        // kappa=1, |S|=4, |D|=10 -> M = 4
        let top = select_top_m(&a, 1.0, 4).unwrap();
        assert_eq!(top.as_slice(), &[0, 2, 4, 6]);
        // kappa=0 disables refinement
        assert!(select_top_m(&a, 0.0, 4).unwrap().is_empty());
        // kappa=5 caps at |D|
        assert_eq!(select_top_m(&a, 5.0, 4).unwrap().len(), 10);
    }

    #[test]
    fn top_m_tie_takes_smaller_discarded_index() {
        let a = mock_assignments(&[(3, 0.5), (1, 0.5), (2, 0.9)]);
        let top = select_top_m(&a, 2.0, 1).unwrap();
        assert_eq!(top.as_slice(), &[1, 2]);
    }

    #[test]
    fn merge_equal_weight_midpoint() {
        let tokens = TokenMatrix::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let scan = IndexSet::new(vec![0], 2).unwrap();
        let d_top = IndexSet::new(vec![1], 2).unwrap();
        let assignments = vec![RefineAssignment {
            discarded_index: 1,
            anchor_index: 0,
            similarity: 0.0,
        }];
        let phi = vec![0.5, 0.5];
        let refined = weighted_merge(&scan, &d_top, &assignments, &phi, &tokens).unwrap();
        assert_eq!(refined.vector(0), &[0.5, 0.5]);
        assert_eq!(refined.weights, vec![1.0]);
        assert_eq!(refined.member_lists, vec![vec![1]]);
    }

    #[test]
    fn merge_without_members_is_identity() {
        let tokens = TokenMatrix::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let scan = IndexSet::new(vec![0], 2).unwrap();
        let refined =
            weighted_merge(&scan, &IndexSet::empty(), &[], &[0.7, 0.2], &tokens).unwrap();
        assert_eq!(refined.vector(0), tokens.row(0));
        assert_eq!(refined.weights, vec![0.7]);
        assert!(refined.member_lists[0].is_empty());
    }

    #[test]
    fn merge_zero_total_weight_keeps_anchor() {
        let tokens = TokenMatrix::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let scan = IndexSet::new(vec![0], 2).unwrap();
        let d_top = IndexSet::new(vec![1], 2).unwrap();
        let assignments = vec![RefineAssignment {
            discarded_index: 1,
            anchor_index: 0,
            similarity: 0.0,
        }];
        let refined = weighted_merge(&scan, &d_top, &assignments, &[0.0, 0.0], &tokens).unwrap();
        assert_eq!(refined.vector(0), &[1.0, 0.0]);
        assert_eq!(refined.weights, vec![0.0]);
    }

    #[test]
    fn merge_matches_closed_form() {
        // three members with assorted weights against the closed-form mean
        let tokens = TokenMatrix::new(4, 2, vec![
            1.0, 0.0,
            0.0, 1.0,
            2.0, 2.0,
            -1.0, 3.0,
        ])
        .unwrap();
        let scan = IndexSet::new(vec![0], 4).unwrap();
        let d_top = IndexSet::new(vec![1, 2, 3], 4).unwrap();
        let assignments: Vec<_> = [1, 2, 3]
            .iter()
            .map(|&i| RefineAssignment { discarded_index: i, anchor_index: 0, similarity: 0.5 })
            .collect();
        let phi = vec![0.9, 0.3, 0.0, 0.6];
        let refined = weighted_merge(&scan, &d_top, &assignments, &phi, &tokens).unwrap();

        let total = 0.9 + 0.3 + 0.0 + 0.6;
        let expected = [
            (0.9 * 1.0 + 0.3 * 0.0 + 0.0 * 2.0 - 0.6 * 1.0) / total,
            (0.9 * 0.0 + 0.3 * 1.0 + 0.0 * 2.0 + 0.6 * 3.0) / total,
        ];
        for (got, want) in refined.vector(0).iter().zip(expected) {
            assert!((got - want).abs() < 1e-9);
        }
        assert!((refined.weights[0] - total).abs() < 1e-12);
    }
}
