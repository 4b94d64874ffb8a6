//! Pruning configuration.

use crate::error::{Error, Result};

/// Where the saliency signal comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaliencyMode {
    /// Mean over heads of the [CLS]-to-token attention rows.
    ClsAttention,
    /// Column mean of a head-aggregated N x N self-attention map
    /// (attention received by each token).
    SelfAttentionAggregate,
}

/// Whether a text-query relevance pathway is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelevanceMode {
    /// Cosine similarity between each token and a query embedding.
    Query,
    /// No relevance signal; the relevance factor is the constant 1.
    None,
}

/// Knobs for one prune call.
///
/// Defaults: `alpha = 3`, `beta = 1`, `rho = 0.9`, `kappa = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PruneConfig {
    /// Total number of tokens to keep (K).
    pub budget_k: usize,
    /// Exponent on the normalized relevance score.
    pub alpha: f64,
    /// Exponent on the normalized saliency score.
    pub beta: f64,
    /// Fraction of total priority mass the focus set must cover.
    pub rho: f64,
    /// Refine budget multiplier: M = floor(kappa * |S|).
    pub kappa: f64,
    pub saliency_mode: SaliencyMode,
    pub relevance_mode: RelevanceMode,
    /// Compute coverage radius and priority mass in the result stats.
    /// Disable for throughput benchmarks.
    pub compute_stats: bool,
}

impl PruneConfig {
    /// Default configuration for a given budget.
    pub fn new(budget_k: usize) -> Self {
        Self {
            budget_k,
            alpha: 3.0,
            beta: 1.0,
            rho: 0.9,
            kappa: 1.0,
            saliency_mode: SaliencyMode::ClsAttention,
            relevance_mode: RelevanceMode::Query,
            compute_stats: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget_k == 0 {
            return Err(Error::InvalidConfig("budget_k must be >= 1"));
        }
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(Error::InvalidConfig("alpha must be finite and >= 0"));
        }
        if !self.beta.is_finite() || self.beta < 0.0 {
            return Err(Error::InvalidConfig("beta must be finite and >= 0"));
        }
        if !self.rho.is_finite() || !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidConfig("rho must be in [0, 1]"));
        }
        if !self.kappa.is_finite() || self.kappa < 0.0 {
            return Err(Error::InvalidConfig("kappa must be finite and >= 0"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_settings() {
        let c = PruneConfig::new(64);
        assert_eq!(c.budget_k, 64);
        assert_eq!(c.alpha, 3.0);
        assert_eq!(c.beta, 1.0);
        assert_eq!(c.rho, 0.9);
        assert_eq!(c.kappa, 1.0);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn validation_rejects_bad_ranges() {
        let mut c = PruneConfig::new(0);
        assert!(c.validate().is_err());
        c.budget_k = 1;
        c.alpha = -1.0;
        assert!(c.validate().is_err());
        c.alpha = 3.0;
        c.rho = 1.5;
        assert!(c.validate().is_err());
        c.rho = 0.9;
        c.kappa = f64::NAN;
        assert!(c.validate().is_err());
    }
}
