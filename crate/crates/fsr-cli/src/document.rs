//! JSON result document written by the `prune` subcommand and consumed by
//! `explain`.

use fsr_core::{Origin, PruneConfig, PruneResult, RelevanceMode, SaliencyMode};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum DocumentError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid document: {0}")]
    Invalid(&'static str),
}

/// Echo of the configuration one prune call ran with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub budget_k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
    pub kappa: f64,
    pub saliency_mode: String,
    pub relevance_mode: String,
}

impl ConfigEcho {
    fn from_config(config: &PruneConfig) -> Self {
        Self {
            budget_k: config.budget_k,
            alpha: config.alpha,
            beta: config.beta,
            rho: config.rho,
            kappa: config.kappa,
            saliency_mode: match config.saliency_mode {
                SaliencyMode::ClsAttention => "cls_attention".into(),
                SaliencyMode::SelfAttentionAggregate => "self_attention_aggregate".into(),
            },
            relevance_mode: match config.relevance_mode {
                RelevanceMode::Query => "query".into(),
                RelevanceMode::None => "none".into(),
            },
        }
    }
}

/// Distribution summary of the fused priorities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiSummary {
    pub min: f64,
    pub p25: f64,
    pub median: f64,
    pub p75: f64,
    pub max: f64,
    pub mean: f64,
    pub total_mass: f64,
}

impl PhiSummary {
    fn from_phi(phi: &[f64]) -> Self {
        let mut sorted = phi.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("phi is finite"));
        let rank = |q: f64| sorted[(q * (sorted.len() - 1) as f64) as usize];
        let total: f64 = phi.iter().sum();
        Self {
            min: rank(0.0),
            p25: rank(0.25),
            median: rank(0.5),
            p75: rank(0.75),
            max: rank(1.0),
            mean: total / phi.len() as f64,
            total_mass: total,
        }
    }
}

/// The JSON-shaped prune result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneResultDocument {
    pub kept_indices: Vec<usize>,
    /// "focus" or "scan", parallel to `kept_indices`.
    pub origins: Vec<String>,
    pub k_f: usize,
    pub k_s: usize,
    pub m: usize,
    pub coverage_radius: Option<f64>,
    pub retained_priority_mass: f64,
    pub config: ConfigEcho,
    /// Accumulated priority weight per kept token.
    pub weights: Vec<f64>,
    /// Max-min distance at each scan pick; empty when scanning was skipped.
    pub gain_sequence: Vec<f64>,
    pub phi_summary: PhiSummary,
    /// Relative path of the binary sidecar holding the kept vectors, if one
    /// was written.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub vectors_file: Option<String>,
}

impl PruneResultDocument {
    pub fn from_result(
        result: &PruneResult,
        config: &PruneConfig,
        vectors_file: Option<String>,
    ) -> Self {
        Self {
            kept_indices: result.kept_indices.as_slice().to_vec(),
            origins: result
                .origins
                .iter()
                .map(|o| match o {
                    Origin::Focus => "focus".to_string(),
                    Origin::Scan => "scan".to_string(),
                })
                .collect(),
            k_f: result.stats.k_f,
            k_s: result.stats.k_s,
            m: result.stats.m,
            coverage_radius: result.stats.coverage_radius,
            retained_priority_mass: result.stats.retained_priority_mass,
            config: ConfigEcho::from_config(config),
            weights: result.weights.clone(),
            gain_sequence: result.gain_sequence.clone(),
            phi_summary: PhiSummary::from_phi(&result.phi),
            vectors_file,
        }
    }

    pub fn validate(&self) -> Result<(), DocumentError> {
        if !self.kept_indices.windows(2).all(|w| w[0] < w[1]) {
            return Err(DocumentError::Invalid("kept_indices must be strictly ascending"));
        }
        if self.origins.len() != self.kept_indices.len()
            || self.weights.len() != self.kept_indices.len()
        {
            return Err(DocumentError::Invalid("arrays must have equal length"));
        }
        if self.k_f + self.k_s != self.kept_indices.len() {
            return Err(DocumentError::Invalid("k_f + k_s must equal the kept count"));
        }
        Ok(())
    }

    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document serializes");
        s.push('\n');
        s
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, DocumentError> {
        let doc: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        doc.validate()?;
        Ok(doc)
    }

    /// Text report rendered from the saved fields.
    pub fn render(&self) -> String {
        let k = self.kept_indices.len();
        let mut out = String::new();
        out.push_str("prune result\n");
        out.push_str(&format!(
            "  budget identity: K_F ({}) + K_S ({}) = K ({})\n",
            self.k_f,
            self.k_s,
            self.k_f + self.k_s
        ));
        out.push_str(&format!("  kept {k} tokens: {:?}\n", self.kept_indices));
        let p = &self.phi_summary;
        out.push_str(&format!(
            "  phi: min={:.6} p25={:.6} median={:.6} p75={:.6} max={:.6} mean={:.6} Z={:.6}\n",
            p.min, p.p25, p.median, p.p75, p.max, p.mean, p.total_mass
        ));
        out.push_str(&format!(
            "  retained priority mass: {:.6}\n",
            self.retained_priority_mass
        ));
        if self.k_s == 0 {
            out.push_str("  scan: skipped\n");
        } else {
            let first = self.gain_sequence.first().copied().unwrap_or(0.0);
            let last = self.gain_sequence.last().copied().unwrap_or(0.0);
            out.push_str(&format!(
                "  scan: {} anchors, gain {:.6} -> {:.6}\n",
                self.k_s, first, last
            ));
        }
        if self.m == 0 {
            out.push_str("  refine: skipped\n");
        } else {
            out.push_str(&format!("  refine: merged {} discarded tokens\n", self.m));
        }
        match self.coverage_radius {
            Some(r) => out.push_str(&format!("  coverage radius: {r:.6}\n")),
            None => out.push_str("  coverage radius: not computed\n"),
        }
        let c = &self.config;
        out.push_str(&format!(
            "  config: budget={} alpha={} beta={} rho={} kappa={} saliency={} relevance={}\n",
            c.budget_k, c.alpha, c.beta, c.rho, c.kappa, c.saliency_mode, c.relevance_mode
        ));
        if let Some(f) = &self.vectors_file {
            out.push_str(&format!("  kept vectors: {f}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fsr_core::{prune, AttentionInput, QueryEmbedding, TokenMatrix};

    fn sample_document() -> PruneResultDocument {
        let tokens = TokenMatrix::new(
            6,
            2,
            vec![1.0, 0.0, 0.9, 0.1, 0.95, -0.2, -1.0, 0.0, -0.9, 0.3, -0.95, -0.1],
        )
        .unwrap();
        let attn = AttentionInput::cls(1, 6, vec![0.3, 0.25, 0.25, 0.07, 0.07, 0.06]).unwrap();
        let query = QueryEmbedding::new(vec![1.0, 0.0]).unwrap();
        let config = PruneConfig::new(4);
        let result = prune(&tokens, &attn, Some(&query), &config).unwrap();
        PruneResultDocument::from_result(&result, &config, None)
    }

    #[test]
    fn document_round_trips_through_json() {
        let doc = sample_document();
        doc.validate().unwrap();
        let json = doc.to_json_pretty();
        let back: PruneResultDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(back, doc);
        // identical input -> identical bytes
        assert_eq!(back.to_json_pretty(), json);
    }

    #[test]
    fn render_contains_budget_identity() {
        let doc = sample_document();
        let text = doc.render();
        assert!(text.contains(&format!(
            "K_F ({}) + K_S ({}) = K (4)",
            doc.k_f, doc.k_s
        )));
    }

    #[test]
    fn validation_catches_inconsistencies() {
        let mut doc = sample_document();
        doc.kept_indices.reverse();
        assert!(doc.validate().is_err());

        let mut doc = sample_document();
        doc.origins.pop();
        assert!(doc.validate().is_err());

        let mut doc = sample_document();
        doc.k_f += 1;
        assert!(doc.validate().is_err());
    }
}
