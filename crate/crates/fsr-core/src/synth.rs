//! Synthetic clustered scenes and simplified baselines for desk-scale
//! evaluation of the local/global trade-off.
//!
//! Scenes plant Gaussian clusters around unit-sphere centers, synthesize a
//! [CLS] attention row as a softmax over each token's similarity to the
//! salient centers, and align the query with the first salient center.
//! Everything is a pure function of the parameters and the seed.

use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::PruneConfig;
use crate::error::{Error, Result};
use crate::focus::{compute_priorities, compute_saliency_cls, AttentionInput, QueryEmbedding};
use crate::index_set::IndexSet;
use crate::matrix::TokenMatrix;
use crate::pipeline::PruneResult;
use crate::scan::{conditional_context_sampling, coverage_radius};
use crate::score::stable_argsort_desc;

/// Parameters of a synthetic scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneParams {
    pub n_clusters: usize,
    pub tokens_per_cluster: usize,
    pub d: usize,
    /// Fraction of clusters marked salient; at least one cluster always is.
    pub salient_fraction: f64,
    /// Standard deviation of the Gaussian noise around each center.
    pub noise_sigma: f64,
    pub seed: u64,
    /// Softmax temperature of the synthesized attention; lower values
    /// concentrate the attention mass on the salient clusters.
    pub attention_temperature: f64,
}

impl SceneParams {
    pub fn new(
        n_clusters: usize,
        tokens_per_cluster: usize,
        d: usize,
        salient_fraction: f64,
        noise_sigma: f64,
        seed: u64,
    ) -> Self {
        Self {
            n_clusters,
            tokens_per_cluster,
            d,
            salient_fraction,
            noise_sigma,
            seed,
            attention_temperature: 0.05,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_clusters == 0 || self.tokens_per_cluster == 0 || self.d == 0 {
            return Err(Error::InvalidConfig("scene counts must be >= 1"));
        }
        if !(self.salient_fraction > 0.0 && self.salient_fraction <= 1.0) {
            return Err(Error::InvalidConfig("salient_fraction must be in (0, 1]"));
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(Error::InvalidConfig("noise_sigma must be finite and >= 0"));
        }
        if !self.attention_temperature.is_finite() || self.attention_temperature <= 0.0 {
            return Err(Error::InvalidConfig("attention_temperature must be > 0"));
        }
        Ok(())
    }
}

/// A generated scene with its planted structure.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub tokens: TokenMatrix,
    pub attn: AttentionInput,
    pub query: QueryEmbedding,
    /// Cluster label of each token.
    pub cluster_labels: Vec<usize>,
    /// Ids of the clusters the attention concentrates on.
    pub salient_clusters: Vec<usize>,
    pub seed: u64,
}

impl SyntheticScene {
    pub fn token_count(&self) -> usize {
        self.tokens.rows()
    }
}

/// Quality metrics of a selection against a scene's planted structure.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityMetrics {
    pub coverage_radius: f64,
    /// Share of total default-config priority mass carried by the kept set.
    pub retained_priority_mass: f64,
    /// Fraction of planted clusters with at least one kept token.
    pub cluster_recall: f64,
    /// (K_F, K_S) when evaluating a full prune result; `None` for bare
    /// index selections.
    pub focus_scan_split: Option<(usize, usize)>,
}

fn sample_unit_vector(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let norm = libm::sqrt(v.iter().map(|x| x * x).sum());
    if norm < 1e-12 {
        v[0] = 1.0;
        return v;
    }
    for x in &mut v {
        *x /= norm;
    }
    v
}

/// Generate a clustered scene. Deterministic in `(params, seed)`.
pub fn generate_scene(params: &SceneParams) -> Result<SyntheticScene> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let c = params.n_clusters;
    let m = params.tokens_per_cluster;
    let d = params.d;
    let n = c * m;

    let centers: Vec<Vec<f64>> = (0..c).map(|_| sample_unit_vector(&mut rng, d)).collect();

    let n_salient = {
        let want = libm::round(params.salient_fraction * c as f64) as usize;
        want.clamp(1, c)
    };
    // centers are i.i.d., so the first n_salient clusters are an unbiased
    // salient choice
    let salient_clusters: Vec<usize> = (0..n_salient).collect();

    let mut data = Vec::with_capacity(n * d);
    let mut cluster_labels = Vec::with_capacity(n);
    for (label, center) in centers.iter().enumerate() {
        for _ in 0..m {
            for &coord in center {
                let noise: f64 = rng.sample(StandardNormal);
                data.push(coord + params.noise_sigma * noise);
            }
            cluster_labels.push(label);
        }
    }
    let tokens = TokenMatrix::new(n, d, data)?;

    // attention: softmax over each token's best similarity to a salient
    // center, sharpened by the temperature
    let logits: Vec<f64> = tokens
        .iter_rows()
        .map(|row| {
            let best = salient_clusters
                .iter()
                .map(|&cid| crate::geometry::cosine_similarity_unchecked(row, &centers[cid]))
                .fold(f64::NEG_INFINITY, f64::max);
            best / params.attention_temperature
        })
        .collect();
    let max_logit = logits.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut attn_row: Vec<f64> = logits.iter().map(|&l| libm::exp(l - max_logit)).collect();
    let mass: f64 = attn_row.iter().sum();
    for a in &mut attn_row {
        *a /= mass;
    }
    let attn = AttentionInput::cls(1, n, attn_row)?;

    let query = QueryEmbedding::new(centers[salient_clusters[0]].clone())?;

    Ok(SyntheticScene {
        tokens,
        attn,
        query,
        cluster_labels,
        salient_clusters,
        seed: params.seed,
    })
}

/// Top-K tokens by saliency alone: no diversity, no refinement.
pub fn baseline_topk_attention(scene: &SyntheticScene, k: usize) -> Result<IndexSet> {
    let n = scene.token_count();
    let saliency = compute_saliency_cls(&scene.attn)?;
    let order = stable_argsort_desc(&saliency)?;
    let k = k.min(n);
    IndexSet::new(order[..k].to_vec(), n)
}

/// Plain farthest-point sampling: `k` picks total, seeded with the
/// tie-rule-first token, cosine distance.
pub fn baseline_fps_only(scene: &SyntheticScene, k: usize) -> Result<IndexSet> {
    let n = scene.token_count();
    let result = conditional_context_sampling(&scene.tokens, &IndexSet::empty(), k.min(n))?;
    Ok(result.scan_set)
}

fn recall(scene: &SyntheticScene, kept: &IndexSet) -> f64 {
    let c = scene.cluster_labels.iter().copied().max().map_or(1, |v| v + 1);
    let mut hit = alloc::vec![false; c];
    for i in kept.iter() {
        hit[scene.cluster_labels[i]] = true;
    }
    hit.iter().filter(|&&h| h).count() as f64 / c as f64
}

fn metrics_for(
    scene: &SyntheticScene,
    kept: &IndexSet,
    split: Option<(usize, usize)>,
) -> Result<QualityMetrics> {
    if kept.is_empty() {
        return Err(Error::EmptySelection);
    }
    let config = PruneConfig::new(kept.len().max(1));
    let phi = compute_priorities(&scene.tokens, &scene.attn, Some(&scene.query), &config)?;
    let total: f64 = phi.iter().sum();
    let kept_mass: f64 = kept.iter().map(|i| phi[i]).sum();
    Ok(QualityMetrics {
        coverage_radius: coverage_radius(&scene.tokens, kept)?,
        retained_priority_mass: if total == 0.0 { 1.0 } else { kept_mass / total },
        cluster_recall: recall(scene, kept),
        focus_scan_split: split,
    })
}

/// Metrics for a bare index selection (baselines).
pub fn evaluate_indices(scene: &SyntheticScene, kept: &IndexSet) -> Result<QualityMetrics> {
    metrics_for(scene, kept, None)
}

/// Metrics for a full prune result, including the focus/scan split.
pub fn evaluate(scene: &SyntheticScene, result: &PruneResult) -> Result<QualityMetrics> {
    metrics_for(
        scene,
        &result.kept_indices,
        Some((result.stats.k_f, result.stats.k_s)),
    )
}
