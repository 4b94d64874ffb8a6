//! Ordered sets of token indices.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A set of distinct token indices stored in ascending order.
///
/// Selection order, where it matters (scan picks), is kept separately; this
/// type is the canonical "which tokens" representation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IndexSet {
    indices: Vec<usize>,
}

impl IndexSet {
    /// Build from arbitrary-order indices. Sorts ascending, errors on
    /// duplicates or on any index `>= n`.
    pub fn new(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        indices.sort_unstable();
        for window in indices.windows(2) {
            if window[0] == window[1] {
                return Err(Error::DuplicateIndex { index: window[0] });
            }
        }
        if let Some(&last) = indices.last() {
            if last >= n {
                return Err(Error::IndexOutOfBounds { index: last, len: n });
            }
        }
        Ok(Self { indices })
    }

    pub fn empty() -> Self {
        Self { indices: Vec::new() }
    }

    /// Internal constructor for indices already known to be distinct.
    pub(crate) fn from_distinct(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        Self { indices }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    /// Indices in `[0, n)` not present in this set, ascending.
    pub fn complement(&self, n: usize) -> Self {
        let mut out = Vec::with_capacity(n - self.indices.len().min(n));
        let mut it = self.indices.iter().copied().peekable();
        for i in 0..n {
            if it.peek() == Some(&i) {
                it.next();
            } else {
                out.push(i);
            }
        }
        Self { indices: out }
    }

    /// Merge with a disjoint set. Errors if the sets overlap.
    pub fn union_disjoint(&self, other: &Self) -> Result<Self> {
        let mut merged = Vec::with_capacity(self.len() + other.len());
        let (mut a, mut b) = (self.indices.iter().peekable(), other.indices.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some(&&x), Some(&&y)) if x == y => return Err(Error::DuplicateIndex { index: x }),
                (Some(&&x), Some(&&y)) => merged.push(if x < y { *a.next().unwrap() } else { *b.next().unwrap() }),
                (Some(_), None) => merged.push(*a.next().unwrap()),
                (None, Some(_)) => merged.push(*b.next().unwrap()),
                (None, None) => break,
            }
        }
        Ok(Self { indices: merged })
    }
}

impl<'a> IntoIterator for &'a IndexSet {
    type Item = usize;
    type IntoIter = core::iter::Copied<core::slice::Iter<'a, usize>>;

    fn into_iter(self) -> Self::IntoIter {
        self.indices.iter().copied()
    }
}
