//! Stage I: dual-pathway priority scoring and dynamic focus selection.
//!
//! Saliency comes from attention statistics, relevance from cosine
//! similarity to a query embedding. Both are min-max normalized and fused
//! multiplicatively; the focus set keeps the top-priority tokens until a
//! `rho` fraction of the total priority mass is covered.

use alloc::vec::Vec;

use crate::config::{PruneConfig, RelevanceMode, SaliencyMode};
use crate::error::{Error, Result};
use crate::geometry::cosine_similarity_unchecked;
use crate::index_set::IndexSet;
use crate::matrix::TokenMatrix;
use crate::score::{min_max_normalize, stable_argsort_desc};

/// Attention statistics for one image, in one of two layouts.
///
/// Variants are non-exhaustive so construction goes through the validating
/// [`AttentionInput::cls`] and [`AttentionInput::self_attention`].
#[derive(Debug, Clone, PartialEq)]
pub enum AttentionInput {
    /// Per-head [CLS]-to-token attention rows, H x N row-major.
    /// `rows[h * tokens + i]` is head `h`'s attention from [CLS] to token `i`.
    #[non_exhaustive]
    Cls { heads: usize, tokens: usize, rows: Vec<f64> },
    /// Head-aggregated N x N self-attention map, row-major.
    /// `matrix[j * tokens + i]` is the attention token `j` pays to token `i`.
    #[non_exhaustive]
    SelfAttention { tokens: usize, matrix: Vec<f64> },
}

impl AttentionInput {
    /// [CLS] attention rows for `heads` heads over `tokens` tokens.
    /// Entries must be non-negative and finite; rows need not sum to one.
    pub fn cls(heads: usize, tokens: usize, rows: Vec<f64>) -> Result<Self> {
        if heads == 0 || tokens == 0 {
            return Err(Error::EmptyInput);
        }
        let expected = heads * tokens;
        if rows.len() != expected {
            return Err(Error::DimensionMismatch { expected, actual: rows.len() });
        }
        validate_attention_entries(&rows)?;
        Ok(Self::Cls { heads, tokens, rows })
    }

    /// Square self-attention map over `tokens` tokens.
    pub fn self_attention(tokens: usize, matrix: Vec<f64>) -> Result<Self> {
        if tokens == 0 {
            return Err(Error::EmptyInput);
        }
        let expected = tokens * tokens;
        if matrix.len() != expected {
            return Err(Error::NotSquare { rows: matrix.len() / tokens.max(1), cols: tokens });
        }
        validate_attention_entries(&matrix)?;
        Ok(Self::SelfAttention { tokens, matrix })
    }

    /// Number of tokens this attention input covers.
    pub fn token_count(&self) -> usize {
        match self {
            Self::Cls { tokens, .. } | Self::SelfAttention { tokens, .. } => *tokens,
        }
    }

    /// The saliency mode this input supports.
    pub fn mode(&self) -> SaliencyMode {
        match self {
            Self::Cls { .. } => SaliencyMode::ClsAttention,
            Self::SelfAttention { .. } => SaliencyMode::SelfAttentionAggregate,
        }
    }
}

fn validate_attention_entries(values: &[f64]) -> Result<()> {
    for &x in values {
        if !x.is_finite() {
            return Err(Error::NonFinite);
        }
        if x < 0.0 {
            return Err(Error::NegativeAttention);
        }
    }
    Ok(())
}

/// Encoded text query, in the same feature space as the tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryEmbedding {
    vector: Vec<f64>,
}

impl QueryEmbedding {
    pub fn new(vector: Vec<f64>) -> Result<Self> {
        if vector.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !vector.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { vector })
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.vector
    }
}

/// Output of the focus stage.
#[derive(Debug, Clone, PartialEq)]
pub struct FocusResult {
    /// Fused priority per token, reused downstream as merge weights.
    pub phi: Vec<f64>,
    /// Token indices sorted by priority descending (ties ascending).
    pub permutation: Vec<usize>,
    /// Dynamic focus budget after capping at the total budget.
    pub k_f: usize,
    /// The first `k_f` tokens of `permutation`, re-stored ascending.
    pub focus_set: IndexSet,
}

/// Mean over heads of the [CLS] attention to each token.
pub fn compute_saliency_cls(attn: &AttentionInput) -> Result<Vec<f64>> {
    let AttentionInput::Cls { heads, tokens, rows } = attn else {
        return Err(Error::AttentionModeMismatch);
    };
    let mut saliency = alloc::vec![0.0; *tokens];
    for h in 0..*heads {
        let row = &rows[h * tokens..(h + 1) * tokens];
        for (s, &a) in saliency.iter_mut().zip(row) {
            *s += a;
        }
    }
    let scale = 1.0 / *heads as f64;
    for s in &mut saliency {
        *s *= scale;
    }
    Ok(saliency)
}

/// Column mean of the self-attention map: the attention each token receives,
/// averaged over all source tokens.
pub fn compute_saliency_selfattn(attn: &AttentionInput) -> Result<Vec<f64>> {
    let AttentionInput::SelfAttention { tokens, matrix } = attn else {
        return Err(Error::AttentionModeMismatch);
    };
    let n = *tokens;
    let mut saliency = alloc::vec![0.0; n];
    for row in matrix.chunks_exact(n) {
        for (s, &a) in saliency.iter_mut().zip(row) {
            *s += a;
        }
    }
    let scale = 1.0 / n as f64;
    for s in &mut saliency {
        *s *= scale;
    }
    Ok(saliency)
}

/// Cosine similarity of every token to the query embedding.
pub fn compute_relevance(tokens: &TokenMatrix, query: &QueryEmbedding) -> Result<Vec<f64>> {
    if query.dim() != tokens.cols() {
        return Err(Error::DimensionMismatch { expected: tokens.cols(), actual: query.dim() });
    }
    let q = query.as_slice();
    Ok(tokens.iter_rows().map(|row| cosine_similarity_unchecked(row, q)).collect())
}

/// Multiplicative fusion of already-normalized pathway scores:
/// `phi_i = r_hat_i^alpha * s_hat_i^beta`, with the IEEE convention
/// `0^0 = 1` so a zero exponent disables that pathway entirely.
///
/// `r_hat = None` stands for a disabled relevance pathway (factor 1).
pub fn fuse_normalized(
    r_hat: Option<&[f64]>,
    s_hat: &[f64],
    alpha: f64,
    beta: f64,
) -> Result<Vec<f64>> {
    if alpha < 0.0 || beta < 0.0 || !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::InvalidConfig("exponents must be finite and >= 0"));
    }
    if let Some(r) = r_hat {
        if r.len() != s_hat.len() {
            return Err(Error::DimensionMismatch { expected: s_hat.len(), actual: r.len() });
        }
    }
    let phi = s_hat
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let r_term = match r_hat {
                Some(r) => libm::pow(r[i], alpha),
                None => 1.0,
            };
            r_term * libm::pow(s, beta)
        })
        .collect();
    Ok(phi)
}

/// Min-max normalize both raw pathway scores, then fuse them.
pub fn fuse_priorities(
    r_raw: Option<&[f64]>,
    s_raw: &[f64],
    alpha: f64,
    beta: f64,
) -> Result<Vec<f64>> {
    let s_hat = min_max_normalize(s_raw)?;
    match r_raw {
        Some(r) => {
            let r_hat = min_max_normalize(r)?;
            fuse_normalized(Some(&r_hat), &s_hat, alpha, beta)
        }
        None => fuse_normalized(None, &s_hat, alpha, beta),
    }
}

/// Smallest k such that the top-k priorities cover a `rho` fraction of the
/// total mass, capped at `budget_k`.
///
/// The total mass Z is accumulated in descending-priority order, the same
/// order as the prefix sums, so `rho = 1` always lands on the full prefix.
/// If Z is zero the focus degenerates to the single tie-rule-first token.
pub fn dynamic_focus_budget(phi: &[f64], rho: f64, budget_k: usize) -> Result<usize> {
    if phi.is_empty() {
        return Err(Error::EmptyInput);
    }
    if budget_k == 0 {
        return Err(Error::InvalidConfig("budget_k must be >= 1"));
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidConfig("rho must be in [0, 1]"));
    }
    for &p in phi {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidConfig("phi must be non-negative and finite"));
        }
    }
    let order = stable_argsort_desc(phi)?;
    let mut mass = 0.0;
    for &i in &order {
        mass += phi[i];
    }
    let uncapped = if mass == 0.0 {
        1
    } else {
        let threshold = rho * mass;
        let mut prefix = 0.0;
        let mut k = phi.len();
        for (rank, &i) in order.iter().enumerate() {
            prefix += phi[i];
            if prefix >= threshold {
                k = rank + 1;
                break;
            }
        }
        k
    };
    Ok(uncapped.min(budget_k))
}

/// Compute the fused priority of every token: saliency, optional relevance,
/// min-max normalization, multiplicative fusion.
pub fn compute_priorities(
    tokens: &TokenMatrix,
    attn: &AttentionInput,
    query: Option<&QueryEmbedding>,
    config: &PruneConfig,
) -> Result<Vec<f64>> {
    let n = tokens.rows();
    if attn.token_count() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: attn.token_count() });
    }
    if attn.mode() != config.saliency_mode {
        return Err(Error::AttentionModeMismatch);
    }

    let saliency = match config.saliency_mode {
        SaliencyMode::ClsAttention => compute_saliency_cls(attn)?,
        SaliencyMode::SelfAttentionAggregate => compute_saliency_selfattn(attn)?,
    };

    let relevance = match config.relevance_mode {
        RelevanceMode::Query => {
            let q = query.ok_or(Error::MissingQuery)?;
            if !q.as_slice().iter().any(|&x| x != 0.0) {
                return Err(Error::ZeroNormQuery);
            }
            Some(compute_relevance(tokens, q)?)
        }
        RelevanceMode::None => None,
    };

    fuse_priorities(relevance.as_deref(), &saliency, config.alpha, config.beta)
}

/// Run the full focus stage: saliency, relevance, fusion, dynamic budget.
///
/// The budget is capped at N, so callers may pass `budget_k > N` (the
/// pipeline resolves that case as a passthrough before getting here).
pub fn select_focus(
    tokens: &TokenMatrix,
    attn: &AttentionInput,
    query: Option<&QueryEmbedding>,
    config: &PruneConfig,
) -> Result<FocusResult> {
    config.validate()?;
    let n = tokens.rows();
    let phi = compute_priorities(tokens, attn, query, config)?;
    let k_f = dynamic_focus_budget(&phi, config.rho, config.budget_k.min(n))?;
    let permutation = stable_argsort_desc(&phi)?;
    let focus_set = IndexSet::new(permutation[..k_f].to_vec(), n)?;

    Ok(FocusResult { phi, permutation, k_f, focus_set })
}
