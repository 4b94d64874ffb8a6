//! Binary tensor file format (`.fsrt`).
//!
//! Layout (little-endian):
//! - magic: 4 bytes `FSRT`
//! - version: u32 = 1
//! - kind: u8 (0 = token matrix, 1 = cls attention H x N,
//!   2 = self attention N x N, 3 = query vector with rows = 1)
//! - rows: u32
//! - cols: u32
//! - payload: rows * cols f32 values, row-major
//!
//! Values are widened to f64 on read; writes narrow back to f32, so
//! write(read(file)) reproduces the file byte for byte.

use std::fs;
use std::path::Path;

use fsr_core::{AttentionInput, QueryEmbedding, TokenMatrix};

pub const MAGIC: [u8; 4] = *b"FSRT";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 17;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic (not an FSRT file)")]
    BadMagic,
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("unknown tensor kind {0}")]
    UnknownKind(u8),
    #[error("size mismatch: expected {expected} bytes, got {actual}")]
    SizeMismatch { expected: u64, actual: u64 },
    #[error("tensor has zero rows or columns")]
    EmptyTensor,
    #[error("tensor value is not finite")]
    NonFinite,
    #[error("value {0} does not fit in an f32 payload")]
    ValueOverflow(f64),
    #[error("dimension {0} does not fit in u32")]
    DimensionOverflow(usize),
    #[error("query tensors must have exactly one row, got {0}")]
    QueryShape(u32),
    #[error("expected a {expected} tensor, found {actual}")]
    WrongKind { expected: &'static str, actual: &'static str },
    #[error("{0}")]
    Engine(#[from] fsr_core::Error),
}

/// Role of the payload, stored in the kind byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorKind {
    TokenMatrix,
    ClsAttention,
    SelfAttention,
    Query,
}

impl TensorKind {
    fn from_byte(b: u8) -> Result<Self, FormatError> {
        match b {
            0 => Ok(Self::TokenMatrix),
            1 => Ok(Self::ClsAttention),
            2 => Ok(Self::SelfAttention),
            3 => Ok(Self::Query),
            other => Err(FormatError::UnknownKind(other)),
        }
    }

    fn byte(self) -> u8 {
        match self {
            Self::TokenMatrix => 0,
            Self::ClsAttention => 1,
            Self::SelfAttention => 2,
            Self::Query => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::TokenMatrix => "token matrix",
            Self::ClsAttention => "cls attention",
            Self::SelfAttention => "self attention",
            Self::Query => "query",
        }
    }
}

/// A decoded tensor, values widened to f64.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub kind: TensorKind,
    pub rows: u32,
    pub cols: u32,
    pub values: Vec<f64>,
}

impl Tensor {
    pub fn new(kind: TensorKind, rows: u32, cols: u32, values: Vec<f64>) -> Result<Self, FormatError> {
        let t = Self { kind, rows, cols, values };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<(), FormatError> {
        if self.rows == 0 || self.cols == 0 {
            return Err(FormatError::EmptyTensor);
        }
        let expected = self.rows as u64 * self.cols as u64;
        if self.values.len() as u64 != expected {
            return Err(FormatError::SizeMismatch {
                expected: expected * 4,
                actual: self.values.len() as u64 * 4,
            });
        }
        if self.kind == TensorKind::Query && self.rows != 1 {
            return Err(FormatError::QueryShape(self.rows));
        }
        for &x in &self.values {
            if !x.is_finite() {
                return Err(FormatError::NonFinite);
            }
        }
        Ok(())
    }

    pub fn from_token_matrix(m: &TokenMatrix) -> Result<Self, FormatError> {
        Self::new(
            TensorKind::TokenMatrix,
            dim_u32(m.rows())?,
            dim_u32(m.cols())?,
            m.data().to_vec(),
        )
    }

    pub fn from_attention(attn: &AttentionInput) -> Result<Self, FormatError> {
        match attn {
            AttentionInput::Cls { heads, tokens, rows, .. } => Self::new(
                TensorKind::ClsAttention,
                dim_u32(*heads)?,
                dim_u32(*tokens)?,
                rows.clone(),
            ),
            AttentionInput::SelfAttention { tokens, matrix, .. } => Self::new(
                TensorKind::SelfAttention,
                dim_u32(*tokens)?,
                dim_u32(*tokens)?,
                matrix.clone(),
            ),
        }
    }

    pub fn from_query(q: &QueryEmbedding) -> Result<Self, FormatError> {
        Self::new(TensorKind::Query, 1, dim_u32(q.dim())?, q.as_slice().to_vec())
    }

    pub fn into_token_matrix(self) -> Result<TokenMatrix, FormatError> {
        if self.kind != TensorKind::TokenMatrix {
            return Err(FormatError::WrongKind {
                expected: TensorKind::TokenMatrix.name(),
                actual: self.kind.name(),
            });
        }
        Ok(TokenMatrix::new(self.rows as usize, self.cols as usize, self.values)?)
    }

    pub fn into_attention(self) -> Result<AttentionInput, FormatError> {
        match self.kind {
            TensorKind::ClsAttention => {
                Ok(AttentionInput::cls(self.rows as usize, self.cols as usize, self.values)?)
            }
            TensorKind::SelfAttention => {
                if self.rows != self.cols {
                    return Err(FormatError::Engine(fsr_core::Error::NotSquare {
                        rows: self.rows as usize,
                        cols: self.cols as usize,
                    }));
                }
                Ok(AttentionInput::self_attention(self.cols as usize, self.values)?)
            }
            other => Err(FormatError::WrongKind { expected: "attention", actual: other.name() }),
        }
    }

    pub fn into_query(self) -> Result<QueryEmbedding, FormatError> {
        if self.kind != TensorKind::Query {
            return Err(FormatError::WrongKind {
                expected: TensorKind::Query.name(),
                actual: self.kind.name(),
            });
        }
        Ok(QueryEmbedding::new(self.values)?)
    }
}

fn dim_u32(d: usize) -> Result<u32, FormatError> {
    u32::try_from(d).map_err(|_| FormatError::DimensionOverflow(d))
}

/// Serialize to the on-disk byte layout.
pub fn encode(tensor: &Tensor) -> Result<Vec<u8>, FormatError> {
    tensor.validate()?;
    let count = tensor.values.len();
    let mut out = Vec::with_capacity(HEADER_LEN + count * 4);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(tensor.kind.byte());
    out.extend_from_slice(&tensor.rows.to_le_bytes());
    out.extend_from_slice(&tensor.cols.to_le_bytes());
    for &x in &tensor.values {
        let narrowed = x as f32;
        if !narrowed.is_finite() {
            return Err(FormatError::ValueOverflow(x));
        }
        out.extend_from_slice(&narrowed.to_le_bytes());
    }
    Ok(out)
}

/// Parse the on-disk byte layout. Rejects trailing or missing payload bytes.
pub fn decode(bytes: &[u8]) -> Result<Tensor, FormatError> {
    if bytes.len() < HEADER_LEN {
        return Err(if bytes.len() < 4 || bytes[..4] != MAGIC {
            FormatError::BadMagic
        } else {
            FormatError::SizeMismatch { expected: HEADER_LEN as u64, actual: bytes.len() as u64 }
        });
    }
    if bytes[..4] != MAGIC {
        return Err(FormatError::BadMagic);
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let kind = TensorKind::from_byte(bytes[8])?;
    let rows = u32::from_le_bytes(bytes[9..13].try_into().unwrap());
    let cols = u32::from_le_bytes(bytes[13..17].try_into().unwrap());
    if rows == 0 || cols == 0 {
        return Err(FormatError::EmptyTensor);
    }
    let count = rows as u64 * cols as u64;
    // a hostile header can claim up to (2^32 - 1)^2 values; the byte count
    // is compared with checked math so it errors instead of overflowing
    let expected_payload = count.checked_mul(4).ok_or(FormatError::SizeMismatch {
        expected: u64::MAX,
        actual: bytes.len() as u64 - HEADER_LEN as u64,
    })?;
    if bytes.len() as u64 - HEADER_LEN as u64 != expected_payload {
        return Err(FormatError::SizeMismatch {
            expected: expected_payload,
            actual: bytes.len() as u64 - HEADER_LEN as u64,
        });
    }
    let values: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Tensor::new(kind, rows, cols, values)
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor, FormatError> {
    decode(&fs::read(path)?)
}

pub fn write_tensor(path: impl AsRef<Path>, tensor: &Tensor) -> Result<(), FormatError> {
    Ok(fs::write(path, encode(tensor)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn token_tensor() -> Tensor {
        Tensor::new(
            TensorKind::TokenMatrix,
            2,
            3,
            vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        )
        .unwrap()
    }

    #[test]
    fn round_trips_through_bytes() {
        let t = token_tensor();
        let bytes = encode(&t).unwrap();
        let back = decode(&bytes).unwrap();
        assert_eq!(back, t);
        assert_eq!(encode(&back).unwrap(), bytes);
    }

    #[test]
    fn converts_kind_zero_to_token_matrix() {
        let m = decode(&encode(&token_tensor()).unwrap()).unwrap().into_token_matrix().unwrap();
        assert_eq!(m.rows(), 2);
        assert_eq!(m.cols(), 3);
        assert_eq!(m.row(1), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn rejects_bad_magic_and_version() {
        let mut bytes = encode(&token_tensor()).unwrap();
        bytes[0] = b'X';
        assert!(matches!(decode(&bytes), Err(FormatError::BadMagic)));

        let mut bytes = encode(&token_tensor()).unwrap();
        bytes[4] = 9;
        assert!(matches!(decode(&bytes), Err(FormatError::UnsupportedVersion(9))));
    }

    #[test]
    fn rejects_truncated_and_trailing_payload() {
        let bytes = encode(&token_tensor()).unwrap();
        let truncated = &bytes[..bytes.len() - 3];
        assert!(matches!(decode(truncated), Err(FormatError::SizeMismatch { .. })));

        let mut extended = bytes.clone();
        extended.push(0);
        assert!(matches!(decode(&extended), Err(FormatError::SizeMismatch { .. })));
    }

    #[test]
    fn rejects_hostile_dimension_header() {
        let mut bytes = encode(&token_tensor()).unwrap();
        bytes[9..13].copy_from_slice(&u32::MAX.to_le_bytes());
        bytes[13..17].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(matches!(decode(&bytes), Err(FormatError::SizeMismatch { .. })));
    }

    #[test]
    fn rejects_unknown_kind_and_query_shape() {
        let mut bytes = encode(&token_tensor()).unwrap();
        bytes[8] = 7;
        assert!(matches!(decode(&bytes), Err(FormatError::UnknownKind(7))));

        assert!(matches!(
            Tensor::new(TensorKind::Query, 2, 3, vec![0.0; 6]),
            Err(FormatError::QueryShape(2))
        ));
    }

    #[test]
    fn rejects_empty_and_overflowing_values() {
        assert!(matches!(
            Tensor::new(TensorKind::TokenMatrix, 0, 3, vec![]),
            Err(FormatError::EmptyTensor)
        ));
        let t = Tensor::new(TensorKind::TokenMatrix, 1, 1, vec![1e300]).unwrap();
        assert!(matches!(encode(&t), Err(FormatError::ValueOverflow(_))));
        assert!(matches!(
            Tensor::new(TensorKind::TokenMatrix, 1, 1, vec![f64::NAN]),
            Err(FormatError::NonFinite)
        ));
    }

    #[test]
    fn attention_conversions_enforce_shape() {
        let sa = Tensor::new(TensorKind::SelfAttention, 2, 3, vec![0.1; 6]).unwrap();
        assert!(sa.into_attention().is_err());

        let cls = Tensor::new(TensorKind::ClsAttention, 2, 3, vec![0.1; 6]).unwrap();
        let attn = cls.into_attention().unwrap();
        assert_eq!(attn.token_count(), 3);

        let q = Tensor::new(TensorKind::Query, 1, 4, vec![0.5; 4]).unwrap();
        assert_eq!(q.into_query().unwrap().dim(), 4);

        let t = token_tensor();
        assert!(matches!(t.into_attention(), Err(FormatError::WrongKind { .. })));
    }

    #[test]
    fn files_round_trip_byte_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.fsrt");
        let t = token_tensor();
        write_tensor(&path, &t).unwrap();
        let bytes_on_disk = std::fs::read(&path).unwrap();
        let back = read_tensor(&path).unwrap();
        write_tensor(&path, &back).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), bytes_on_disk);
    }
}
