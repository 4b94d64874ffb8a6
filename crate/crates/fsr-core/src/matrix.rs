//! Dense row-major token matrix.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// N x d matrix of token embeddings, one row per token.
///
/// Rows keep the original spatial order of the tokens; nothing in this crate
/// permutes them in place. All entries are finite, enforced at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenMatrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl TokenMatrix {
    /// Build a matrix from row-major data. Requires `rows >= 1`, `cols >= 1`,
    /// `data.len() == rows * cols`, and every entry finite.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyInput);
        }
        let expected = rows
            .checked_mul(cols)
            .ok_or(Error::InvalidConfig("matrix dimensions overflow"))?;
        if data.len() != expected {
            return Err(Error::DimensionMismatch { expected, actual: data.len() });
        }
        if !data.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { data, rows, cols })
    }

    /// Number of tokens (rows).
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Embedding dimension (columns).
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row `i` as a slice of length `cols`.
    ///
    /// # Panics
    /// Panics when `i >= rows`; callers validate indices at the boundary.
    pub fn row(&self, i: usize) -> &[f64] {
        let start = i * self.cols;
        &self.data[start..start + self.cols]
    }

    /// The full row-major buffer.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Iterator over rows in original order.
    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }
}
