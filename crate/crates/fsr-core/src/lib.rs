//! Training-free token pruning with a three-stage focus/scan/refine design.
//!
//! Given an N x d matrix of token embeddings, attention statistics, an
//! optional query embedding, and a budget K, the pipeline selects exactly
//! `min(K, N)` tokens:
//!
//! 1. **Focus** fuses attention saliency with query relevance into a
//!    priority score per token and keeps the top tokens until a configurable
//!    fraction of the total priority mass is covered.
//! 2. **Scan** fills the remaining budget with complementary anchors by
//!    greedy farthest-point sampling in cosine distance, conditioned on the
//!    focus set as fixed centers.
//! 3. **Refine** merges the most anchor-similar discarded tokens into the
//!    scan anchors with running priority-weighted averages, leaving focus
//!    tokens untouched.
//!
//! The crate is `no_std` (with `alloc`); everything is a pure function of
//! its inputs and deterministic across runs and thread counts. File IO, the
//! CLI, and benchmark harnesses live in the companion `fsr-cli` crate.
//!
//! ```
//! use fsr_core::{prune, AttentionInput, PruneConfig, QueryEmbedding, TokenMatrix};
//!
//! let tokens = TokenMatrix::new(3, 2, vec![1.0, 0.0, 0.9, 0.1, -1.0, 0.0]).unwrap();
//! let attn = AttentionInput::cls(1, 3, vec![0.6, 0.3, 0.1]).unwrap();
//! let query = QueryEmbedding::new(vec![1.0, 0.0]).unwrap();
//! let result = prune(&tokens, &attn, Some(&query), &PruneConfig::new(2)).unwrap();
//! assert_eq!(result.kept_indices.len(), 2);
//! ```

#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod config;
mod error;
mod focus;
mod geometry;
mod index_set;
mod matrix;
mod pipeline;
mod refine;
mod scan;
mod score;
mod synth;

pub use config::{PruneConfig, RelevanceMode, SaliencyMode};
pub use error::{Error, Result};
pub use focus::{
    compute_priorities, compute_relevance, compute_saliency_cls, compute_saliency_selfattn,
    dynamic_focus_budget, fuse_normalized, fuse_priorities, select_focus, AttentionInput,
    FocusResult, QueryEmbedding,
};
pub use geometry::{cosine_distance, cosine_similarity};
pub use index_set::IndexSet;
pub use matrix::TokenMatrix;
pub use pipeline::{explain, prune, Origin, PruneResult, PruneStats};
pub use refine::{
    assign_nearest_anchor, running_merge_step, select_top_m, weighted_merge, RefineAssignment,
    RefinedTokens,
};
pub use scan::{
    conditional_context_sampling, coverage_radius, min_distance_to_set, optimal_covering_radius,
    CoverageReport, ScanResult, ORACLE_COMBINATION_LIMIT,
};
pub use score::{min_max_normalize, stable_argsort_desc};
pub use synth::{
    baseline_fps_only, baseline_topk_attention, evaluate, evaluate_indices, generate_scene,
    QualityMetrics, SceneParams, SyntheticScene,
};
