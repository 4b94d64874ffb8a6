//! Cosine similarity and distance over embedding vectors.
//!
//! Zero-norm vectors are defined to have cosine similarity 0 with everything
//! (distance 1): a zero token carries no direction, so it is treated as
//! equidistant from all others instead of propagating NaN.

use crate::error::{Error, Result};

/// Dot product without validation. Callers guarantee equal lengths.
pub(crate) fn dot_unchecked(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

pub(crate) fn norm_unchecked(a: &[f64]) -> f64 {
    libm::sqrt(dot_unchecked(a, a))
}

/// Cosine similarity of pre-validated vectors (finite, equal length).
pub(crate) fn cosine_similarity_unchecked(a: &[f64], b: &[f64]) -> f64 {
    cosine_from_parts(dot_unchecked(a, b), norm_unchecked(a), norm_unchecked(b))
}

/// Cosine from a dot product and the two norms, applying the zero-norm rule.
/// The result is clamped to [-1, 1] so rounding can never push it outside.
pub(crate) fn cosine_from_parts(dot: f64, norm_a: f64, norm_b: f64) -> f64 {
    if norm_a == 0.0 || norm_b == 0.0 {
        0.0
    } else {
        (dot / (norm_a * norm_b)).clamp(-1.0, 1.0)
    }
}

fn validate_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), actual: b.len() });
    }
    if a.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !a.iter().chain(b).all(|x| x.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Cosine similarity in [-1, 1].
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    validate_pair(a, b)?;
    Ok(cosine_similarity_unchecked(a, b))
}

/// Cosine distance `1 - cos(a, b)` in [0, 2].
pub fn cosine_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    Ok(1.0 - cosine_similarity(a, b)?)
}
