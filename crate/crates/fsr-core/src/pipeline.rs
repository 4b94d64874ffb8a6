//! End-to-end orchestration: focus, scan, refine under one budget.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::config::PruneConfig;
use crate::error::Result;
use crate::focus::{compute_priorities, select_focus, AttentionInput, QueryEmbedding};
use crate::index_set::IndexSet;
use crate::matrix::TokenMatrix;
use crate::refine::{assign_nearest_anchor, select_top_m, weighted_merge};
use crate::scan::{conditional_context_sampling, coverage_radius};

/// Which stage a kept token came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    /// Kept verbatim by the focus stage.
    Focus,
    /// Selected by the scan stage; its vector may have been refined.
    Scan,
}

/// Summary numbers for one prune call.
#[derive(Debug, Clone, PartialEq)]
pub struct PruneStats {
    pub k_f: usize,
    pub k_s: usize,
    /// Number of discarded tokens merged into scan anchors.
    pub m: usize,
    /// Worst-case cosine distance from any token to the kept set, measured
    /// on the original embeddings. `None` when stats are disabled.
    pub coverage_radius: Option<f64>,
    /// Fraction of total priority mass carried by the kept tokens
    /// (1 when the total mass is zero: nothing to lose).
    pub retained_priority_mass: f64,
}

/// The pruned token set with full provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct PruneResult {
    /// Kept token indices, ascending original order.
    pub kept_indices: IndexSet,
    /// One row per kept index, same order. Focus rows are bit-identical to
    /// the input; scan rows carry refined embeddings.
    pub kept_vectors: TokenMatrix,
    /// Stage of origin per kept token.
    pub origins: Vec<Origin>,
    /// Accumulated priority weight per kept token.
    pub weights: Vec<f64>,
    /// Fused priority of every input token (length N).
    pub phi: Vec<f64>,
    /// Max-min distance achieved at each scan pick.
    pub gain_sequence: Vec<f64>,
    pub stats: PruneStats,
}

impl PruneResult {
    /// Number of input tokens the result was computed from.
    pub fn token_count(&self) -> usize {
        self.phi.len()
    }
}

fn retained_mass(phi: &[f64], kept: &IndexSet) -> f64 {
    let total: f64 = phi.iter().sum();
    if total == 0.0 {
        return 1.0;
    }
    let kept_mass: f64 = kept.iter().map(|i| phi[i]).sum();
    kept_mass / total
}

/// Select and refine exactly `min(K, N)` tokens.
///
/// `budget_k >= N` is a passthrough: every token is kept verbatim and no
/// scanning or refinement happens. Otherwise the focus stage fixes `K_F`
/// tokens, conditional context sampling adds `K_S = K - K_F` anchors, and
/// the refine stage merges the most anchor-similar discarded tokens into
/// those anchors. Output rows are in ascending original index order.
pub fn prune(
    tokens: &TokenMatrix,
    attn: &AttentionInput,
    query: Option<&QueryEmbedding>,
    config: &PruneConfig,
) -> Result<PruneResult> {
    config.validate()?;
    let n = tokens.rows();

    if config.budget_k >= n {
        let phi = compute_priorities(tokens, attn, query, config)?;
        let kept_indices = IndexSet::new((0..n).collect(), n)?;
        let weights = phi.clone();
        return Ok(PruneResult {
            kept_indices,
            kept_vectors: tokens.clone(),
            origins: alloc::vec![Origin::Focus; n],
            weights,
            phi,
            gain_sequence: Vec::new(),
            stats: PruneStats {
                k_f: n,
                k_s: 0,
                m: 0,
                coverage_radius: config.compute_stats.then_some(0.0),
                retained_priority_mass: 1.0,
            },
        });
    }

    let focus = select_focus(tokens, attn, query, config)?;
    let k_f = focus.k_f;
    let k_s = config.budget_k - k_f;

    let scan = if k_s > 0 {
        Some(conditional_context_sampling(tokens, &focus.focus_set, k_s)?)
    } else {
        None
    };

    let scan_set = scan.as_ref().map(|s| s.scan_set.clone()).unwrap_or_else(IndexSet::empty);
    let kept_indices = focus.focus_set.union_disjoint(&scan_set)?;
    let discarded = kept_indices.complement(n);

    let refined = match &scan {
        Some(_) if !discarded.is_empty() => {
            let assignments = assign_nearest_anchor(&discarded, &scan_set, tokens)?;
            let d_top = select_top_m(&assignments, config.kappa, scan_set.len())?;
            if d_top.is_empty() {
                None
            } else {
                Some((
                    d_top.len(),
                    weighted_merge(&scan_set, &d_top, &assignments, &focus.phi, tokens)?,
                ))
            }
        }
        _ => None,
    };

    let d = tokens.cols();
    let mut kept_data = Vec::with_capacity(kept_indices.len() * d);
    let mut origins = Vec::with_capacity(kept_indices.len());
    let mut weights = Vec::with_capacity(kept_indices.len());
    for i in kept_indices.iter() {
        if focus.focus_set.contains(i) {
            kept_data.extend_from_slice(tokens.row(i));
            origins.push(Origin::Focus);
            weights.push(focus.phi[i]);
        } else {
            let slot = scan_set
                .as_slice()
                .binary_search(&i)
                .expect("kept index is focus or scan");
            match &refined {
                Some((_, r)) => {
                    kept_data.extend_from_slice(r.vector(slot));
                    weights.push(r.weights[slot]);
                }
                None => {
                    kept_data.extend_from_slice(tokens.row(i));
                    weights.push(focus.phi[i]);
                }
            }
            origins.push(Origin::Scan);
        }
    }
    let kept_vectors = TokenMatrix::new(kept_indices.len(), d, kept_data)?;

    let stats = PruneStats {
        k_f,
        k_s,
        m: refined.as_ref().map_or(0, |(m, _)| *m),
        coverage_radius: if config.compute_stats {
            Some(coverage_radius(tokens, &kept_indices)?)
        } else {
            None
        },
        retained_priority_mass: retained_mass(&focus.phi, &kept_indices),
    };

    Ok(PruneResult {
        kept_indices,
        kept_vectors,
        origins,
        weights,
        phi: focus.phi,
        gain_sequence: scan.map(|s| s.gain_sequence).unwrap_or_default(),
        stats,
    })
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    // floor-rank on a pre-sorted slice; summary only, no interpolation
    let rank = (q * (sorted.len() - 1) as f64) as usize;
    sorted[rank]
}

/// Human-readable per-stage breakdown of a prune result.
pub fn explain(result: &PruneResult) -> String {
    let n = result.token_count();
    let k = result.kept_indices.len();
    let stats = &result.stats;

    let mut sorted_phi = result.phi.clone();
    sorted_phi.sort_by(|a, b| a.partial_cmp(b).expect("phi is finite"));
    let mass: f64 = result.phi.iter().sum();
    let mean = mass / n as f64;

    let mut out = String::new();
    out.push_str("prune report\n");
    out.push_str(&format!("  kept {k} of {n} tokens\n"));
    out.push_str(&format!(
        "  budget identity: K_F ({}) + K_S ({}) = K ({})\n",
        stats.k_f,
        stats.k_s,
        stats.k_f + stats.k_s
    ));
    out.push_str(&format!(
        "  phi: min={:.6} p25={:.6} median={:.6} p75={:.6} max={:.6} mean={:.6} Z={:.6}\n",
        percentile(&sorted_phi, 0.0),
        percentile(&sorted_phi, 0.25),
        percentile(&sorted_phi, 0.5),
        percentile(&sorted_phi, 0.75),
        percentile(&sorted_phi, 1.0),
        mean,
        mass,
    ));
    out.push_str(&format!(
        "  focus: {} tokens, retained priority mass {:.6}\n",
        stats.k_f, stats.retained_priority_mass
    ));
    if stats.k_s == 0 {
        out.push_str("  scan: skipped\n");
    } else {
        let first = result.gain_sequence.first().copied().unwrap_or(0.0);
        let last = result.gain_sequence.last().copied().unwrap_or(0.0);
        out.push_str(&format!(
            "  scan: {} anchors, gain {:.6} -> {:.6}\n",
            stats.k_s, first, last
        ));
    }
    if stats.m == 0 {
        out.push_str("  refine: skipped\n");
    } else {
        out.push_str(&format!(
            "  refine: merged {} of {} discarded tokens\n",
            stats.m,
            n - k
        ));
    }
    match stats.coverage_radius {
        Some(r) => out.push_str(&format!("  coverage radius: {r:.6}\n")),
        None => out.push_str("  coverage radius: not computed\n"),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn small_instance() -> (TokenMatrix, AttentionInput, QueryEmbedding) {
        let tokens = TokenMatrix::new(
            6,
            2,
            vec![
                1.0, 0.0, // salient cluster
                0.98, 0.2,
                0.95, -0.3,
                -1.0, 0.0, // background cluster
                -0.97, 0.25,
                -0.99, -0.1,
            ],
        )
        .unwrap();
        let attn = AttentionInput::cls(1, 6, vec![0.3, 0.25, 0.25, 0.07, 0.07, 0.06]).unwrap();
        let query = QueryEmbedding::new(vec![1.0, 0.0]).unwrap();
        (tokens, attn, query)
    }

    #[test]
    fn passthrough_keeps_everything() {
        let (tokens, attn, query) = small_instance();
        let config = PruneConfig::new(6);
        let result = prune(&tokens, &attn, Some(&query), &config).unwrap();
        assert_eq!(result.kept_indices.len(), 6);
        assert_eq!(result.kept_vectors, tokens);
        assert_eq!(result.stats.coverage_radius, Some(0.0));
        assert_eq!(result.stats.retained_priority_mass, 1.0);

        // a budget beyond N behaves the same, not as an error
        let config = PruneConfig::new(100);
        let result = prune(&tokens, &attn, Some(&query), &config).unwrap();
        assert_eq!(result.kept_indices.len(), 6);
    }

    #[test]
    fn degenerate_budget_keeps_top_priority_token() {
        let (tokens, attn, query) = small_instance();
        let config = PruneConfig::new(1);
        let result = prune(&tokens, &attn, Some(&query), &config).unwrap();
        assert_eq!(result.kept_indices.len(), 1);
        // token 0 is both most salient and collinear with the query
        assert_eq!(result.kept_indices.as_slice(), &[0]);
        assert_eq!(result.origins, vec![Origin::Focus]);
        assert_eq!(result.stats.k_f, 1);
        assert_eq!(result.stats.k_s, 0);
    }

    #[test]
    fn two_cluster_instance_covers_background() {
        let (tokens, attn, query) = small_instance();
        let config = PruneConfig::new(4);
        let result = prune(&tokens, &attn, Some(&query), &config).unwrap();

        assert_eq!(result.kept_indices.len(), 4);
        assert_eq!(result.stats.k_f + result.stats.k_s, 4);
        // focus tokens all come from the salient cluster
        for (slot, i) in result.kept_indices.iter().enumerate() {
            if result.origins[slot] == Origin::Focus {
                assert!(i < 3, "focus token {i} outside the salient cluster");
            }
        }
        // at least one scan token covers the background cluster
        let background_covered = result
            .kept_indices
            .iter()
            .zip(&result.origins)
            .any(|(i, &o)| o == Origin::Scan && i >= 3);
        assert!(background_covered);
        // focus rows are bit-identical to the input rows
        for (slot, i) in result.kept_indices.iter().enumerate() {
            if result.origins[slot] == Origin::Focus {
                let kept: Vec<u64> = result.kept_vectors.row(slot).iter().map(|x| x.to_bits()).collect();
                let orig: Vec<u64> = tokens.row(i).iter().map(|x| x.to_bits()).collect();
                assert_eq!(kept, orig);
            }
        }
    }

    #[test]
    fn kappa_zero_skips_refinement() {
        let (tokens, attn, query) = small_instance();
        let mut config = PruneConfig::new(4);
        config.kappa = 0.0;
        let result = prune(&tokens, &attn, Some(&query), &config).unwrap();
        assert_eq!(result.stats.m, 0);
        // scan rows are verbatim token rows when nothing was merged
        for (slot, i) in result.kept_indices.iter().enumerate() {
            if result.origins[slot] == Origin::Scan {
                assert_eq!(result.kept_vectors.row(slot), tokens.row(i));
            }
        }
    }

    #[test]
    fn stats_flag_disables_coverage() {
        let (tokens, attn, query) = small_instance();
        let mut config = PruneConfig::new(4);
        config.compute_stats = false;
        let result = prune(&tokens, &attn, Some(&query), &config).unwrap();
        assert_eq!(result.stats.coverage_radius, None);
    }

    #[test]
    fn explain_reports_budget_identity() {
        let (tokens, attn, query) = small_instance();
        let config = PruneConfig::new(4);
        let result = prune(&tokens, &attn, Some(&query), &config).unwrap();
        let report = explain(&result);
        assert!(report.contains(&format!(
            "K_F ({}) + K_S ({}) = K (4)",
            result.stats.k_f, result.stats.k_s
        )));
        assert!(report.contains("coverage radius"));

        let config = PruneConfig::new(1);
        let result = prune(&tokens, &attn, Some(&query), &config).unwrap();
        assert!(explain(&result).contains("scan: skipped"));
    }
}
