//! Synthetic quality and throughput sweeps.
//!
//! The quality sweep runs the full pipeline and the two simplified
//! baselines (top-k attention, plain farthest-point sampling) over seeded
//! scenes and emits one CSV row per trial. The throughput grid times prune
//! calls over an (N, d, K) grid and reports medians, plus the time ratios
//! observed when N doubles at fixed d and K.

use std::path::Path;
use std::time::Instant;

use fsr_core::{
    baseline_fps_only, baseline_topk_attention, evaluate, evaluate_indices, generate_scene,
    prune, AttentionInput, PruneConfig, QueryEmbedding, SceneParams, TokenMatrix,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Engine(#[from] fsr_core::Error),
}

/// Scene and budget parameters for the quality sweep.
#[derive(Debug, Clone)]
pub struct QualityConfig {
    pub trials: u64,
    pub clusters: usize,
    pub tokens_per_cluster: usize,
    pub dim: usize,
    pub salient_fraction: f64,
    pub noise_sigma: f64,
    /// Budget as a fraction of N, rounded and clamped to [1, N].
    pub budget_fraction: f64,
    pub seed: u64,
}

impl Default for QualityConfig {
    fn default() -> Self {
        Self {
            trials: 100,
            clusters: 3,
            tokens_per_cluster: 16,
            dim: 32,
            salient_fraction: 0.34,
            noise_sigma: 0.15,
            budget_fraction: 0.25,
            seed: 0,
        }
    }
}

/// One method on one scene.
#[derive(Debug, Clone, Serialize)]
pub struct QualityRow {
    pub seed: u64,
    pub method: &'static str,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub k_f: Option<usize>,
    pub k_s: Option<usize>,
    pub coverage_radius: f64,
    pub retained_priority_mass: f64,
    pub cluster_recall: f64,
    pub micros: u64,
}

/// Per-method means over a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct QualityAggregate {
    pub method: &'static str,
    pub trials: usize,
    pub mean_coverage_radius: f64,
    pub mean_retained_priority_mass: f64,
    pub mean_cluster_recall: f64,
    pub mean_k_f: Option<f64>,
    pub mean_micros: f64,
}

pub const METHODS: [&str; 3] = ["fsr", "topk_attention", "fps_only"];

/// Run every method over `trials` scenes with per-trial seeds
/// `seed + trial`.
pub fn run_quality_sweep(config: &QualityConfig) -> Result<Vec<QualityRow>, BenchError> {
    let mut rows = Vec::with_capacity(config.trials as usize * METHODS.len());
    for trial in 0..config.trials {
        let params = SceneParams::new(
            config.clusters,
            config.tokens_per_cluster,
            config.dim,
            config.salient_fraction,
            config.noise_sigma,
            config.seed + trial,
        );
        let scene = generate_scene(&params)?;
        let n = scene.token_count();
        let k = ((config.budget_fraction * n as f64).round() as usize).clamp(1, n);

        let prune_config = PruneConfig::new(k);
        let start = Instant::now();
        let result = prune(&scene.tokens, &scene.attn, Some(&scene.query), &prune_config)?;
        let fsr_micros = start.elapsed().as_micros() as u64;
        let q = evaluate(&scene, &result)?;
        rows.push(QualityRow {
            seed: params.seed,
            method: "fsr",
            n,
            d: config.dim,
            k,
            k_f: Some(result.stats.k_f),
            k_s: Some(result.stats.k_s),
            coverage_radius: q.coverage_radius,
            retained_priority_mass: q.retained_priority_mass,
            cluster_recall: q.cluster_recall,
            micros: fsr_micros,
        });

        let start = Instant::now();
        let topk = baseline_topk_attention(&scene, k)?;
        let topk_micros = start.elapsed().as_micros() as u64;
        let q = evaluate_indices(&scene, &topk)?;
        rows.push(QualityRow {
            seed: params.seed,
            method: "topk_attention",
            n,
            d: config.dim,
            k,
            k_f: None,
            k_s: None,
            coverage_radius: q.coverage_radius,
            retained_priority_mass: q.retained_priority_mass,
            cluster_recall: q.cluster_recall,
            micros: topk_micros,
        });

        let start = Instant::now();
        let fps = baseline_fps_only(&scene, k)?;
        let fps_micros = start.elapsed().as_micros() as u64;
        let q = evaluate_indices(&scene, &fps)?;
        rows.push(QualityRow {
            seed: params.seed,
            method: "fps_only",
            n,
            d: config.dim,
            k,
            k_f: None,
            k_s: None,
            coverage_radius: q.coverage_radius,
            retained_priority_mass: q.retained_priority_mass,
            cluster_recall: q.cluster_recall,
            micros: fps_micros,
        });
    }
    Ok(rows)
}

/// Mean metrics per method, in [`METHODS`] order.
pub fn aggregate_quality(rows: &[QualityRow]) -> Vec<QualityAggregate> {
    METHODS
        .iter()
        .map(|&method| {
            let subset: Vec<&QualityRow> = rows.iter().filter(|r| r.method == method).collect();
            let count = subset.len().max(1) as f64;
            let mean = |f: &dyn Fn(&QualityRow) -> f64| {
                subset.iter().map(|r| f(r)).sum::<f64>() / count
            };
            let k_f_values: Vec<f64> =
                subset.iter().filter_map(|r| r.k_f.map(|v| v as f64)).collect();
            QualityAggregate {
                method,
                trials: subset.len(),
                mean_coverage_radius: mean(&|r| r.coverage_radius),
                mean_retained_priority_mass: mean(&|r| r.retained_priority_mass),
                mean_cluster_recall: mean(&|r| r.cluster_recall),
                mean_k_f: if k_f_values.is_empty() {
                    None
                } else {
                    Some(k_f_values.iter().sum::<f64>() / k_f_values.len() as f64)
                },
                mean_micros: mean(&|r| r.micros as f64),
            }
        })
        .collect()
}

/// One timed grid point.
#[derive(Debug, Clone, Serialize)]
pub struct ThroughputPoint {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub repeats: u32,
    pub median_micros: u64,
}

/// Observed time ratio when N doubles at fixed (d, K).
#[derive(Debug, Clone, Serialize)]
pub struct ScalingRatio {
    pub d: usize,
    pub k: usize,
    pub n_from: usize,
    pub n_to: usize,
    pub ratio: f64,
}

/// Random non-clustered instance for timing.
pub fn random_instance(
    seed: u64,
    n: usize,
    d: usize,
) -> (TokenMatrix, AttentionInput, QueryEmbedding) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let tokens = TokenMatrix::new(n, d, data).expect("finite random data");
    let attn_row: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let attn = AttentionInput::cls(1, n, attn_row).expect("non-negative attention");
    let mut q: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    if q.iter().all(|&x| x == 0.0) {
        q[0] = 1.0;
    }
    let query = QueryEmbedding::new(q).expect("finite query");
    (tokens, attn, query)
}

fn median_micros(mut samples: Vec<u64>) -> u64 {
    samples.sort_unstable();
    samples[samples.len() / 2]
}

/// Median wall-clock time of a full prune call per (N, d, K) grid point.
/// Budgets larger than N are skipped.
pub fn run_throughput_grid(
    n_list: &[usize],
    d_list: &[usize],
    k_list: &[usize],
    repeats: u32,
    seed: u64,
) -> Result<Vec<ThroughputPoint>, BenchError> {
    let repeats = repeats.max(1);
    let mut points = Vec::new();
    for &d in d_list {
        for &k in k_list {
            for &n in n_list {
                if k > n {
                    continue;
                }
                let (tokens, attn, query) = random_instance(seed ^ hash3(n, d, k), n, d);
                let config = PruneConfig::new(k);
                // warmup
                prune(&tokens, &attn, Some(&query), &config)?;
                let mut samples = Vec::with_capacity(repeats as usize);
                for _ in 0..repeats {
                    let start = Instant::now();
                    let result = prune(&tokens, &attn, Some(&query), &config)?;
                    samples.push(start.elapsed().as_micros() as u64);
                    std::hint::black_box(result);
                }
                points.push(ThroughputPoint {
                    n,
                    d,
                    k,
                    repeats,
                    median_micros: median_micros(samples),
                });
            }
        }
    }
    Ok(points)
}

fn hash3(a: usize, b: usize, c: usize) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for v in [a as u64, b as u64, c as u64] {
        h ^= v;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Ratios for every pair of grid points where N exactly doubles.
pub fn scaling_ratios(points: &[ThroughputPoint]) -> Vec<ScalingRatio> {
    let mut ratios = Vec::new();
    for p in points {
        for q in points {
            if q.d == p.d && q.k == p.k && q.n == 2 * p.n && p.median_micros > 0 {
                ratios.push(ScalingRatio {
                    d: p.d,
                    k: p.k,
                    n_from: p.n,
                    n_to: q.n,
                    ratio: q.median_micros as f64 / p.median_micros as f64,
                });
            }
        }
    }
    ratios
}

/// Everything the bench run produced, for the summary JSON.
#[derive(Debug, Clone, Serialize)]
pub struct BenchSummary {
    pub quality: Vec<QualityAggregate>,
    pub throughput: Vec<ThroughputPoint>,
    pub scaling: Vec<ScalingRatio>,
}

pub fn write_quality_csv(path: impl AsRef<Path>, rows: &[QualityRow]) -> Result<(), BenchError> {
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}
