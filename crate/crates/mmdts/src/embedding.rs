//! Lag embedding of a scalar series into overlapping vectors
//! y_t = (x_t, x_{t-1}, ..., x_{t-p}).
//!
//! Coordinate order is most-recent-first. The Gaussian kernel is not
//! invariant to reordering coordinates across two differently-ordered
//! embeddings, so the order is part of the contract.

use crate::error::{MmdError, Result};
use std::hash::{Hash, Hasher};

/// An embedded sample: T - p rows of dimension p + 1, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LagSample {
    data: Vec<f64>,
    dim: usize,
    p: usize,
}

impl LagSample {
    /// Build a sample directly from rows (all of equal dimension).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.len())
            .ok_or_else(|| MmdError::EmptyInput("lag sample with no rows".into()))?;
        if dim == 0 {
            return Err(MmdError::EmptyInput("zero-dimensional rows".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(MmdError::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { data, dim, p: dim - 1 })
    }

    pub(crate) fn from_flat(data: Vec<f64>, dim: usize, p: usize) -> Self {
        debug_assert_eq!(data.len() % dim, 0);
        Self { data, dim, p }
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lag(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Concatenate the rows of several samples of equal dimension.
    pub fn concat(parts: &[LagSample]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| MmdError::EmptyInput("no samples to concatenate".into()))?;
        let mut data = Vec::new();
        for part in parts {
            if part.dim != first.dim {
                return Err(MmdError::DimensionMismatch {
                    expected: first.dim,
                    got: part.dim,
                });
            }
            data.extend_from_slice(&part.data);
        }
        Ok(Self {
            data,
            dim: first.dim,
            p: first.p,
        })
    }

    /// Keep only the last `n` rows.
    pub fn tail(&self, n: usize) -> Self {
        let rows = self.rows();
        let keep = n.min(rows);
        Self {
            data: self.data[(rows - keep) * self.dim..].to_vec(),
            dim: self.dim,
            p: self.p,
        }
    }

    /// Content hash used to detect stale Gram caches.
    pub fn sample_id(&self) -> u64 {
        let mut hasher = std::collections::hash_map::DefaultHasher::new();
        self.dim.hash(&mut hasher);
        for v in &self.data {
            v.to_bits().hash(&mut hasher);
        }
        hasher.finish()
    }
}

/// Embed a scalar path with lag order p: row t is (x_t, x_{t-1}, ..., x_{t-p}).
pub fn embed_lags(x: &[f64], p: usize) -> Result<LagSample> {
    if x.is_empty() {
        return Err(MmdError::EmptyInput("cannot embed an empty series".into()));
    }
    if p >= x.len() {
        return Err(MmdError::LagTooLarge { p, len: x.len() });
    }
    let dim = p + 1;
    let rows = x.len() - p;
    let mut data = Vec::with_capacity(rows * dim);
    for t in p..x.len() {
        for j in 0..=p {
            data.push(x[t - j]);
        }
    }
    Ok(LagSample::from_flat(data, dim, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn definition_unrolled() {
        let s = embed_lags(&[1.0, 2.0, 3.0, 4.0], 1).unwrap();
        assert_eq!(s.rows(), 3);
        assert_eq!(s.row(0), &[2.0, 1.0]);
        assert_eq!(s.row(1), &[3.0, 2.0]);
        assert_eq!(s.row(2), &[4.0, 3.0]);
    }

    #[test]
    fn identity_embedding() {
        let x = [0.5, -1.0, 2.0];
        let s = embed_lags(&x, 0).unwrap();
        assert_eq!(s.as_flat(), &x);
    }

    #[test]
    fn row_count() {
        let x: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let s = embed_lags(&x, 40).unwrap();
        assert_eq!(s.rows(), 60);
        assert_eq!(s.dim(), 41);
    }

    #[test]
    fn rejects_lag_at_least_length() {
        assert!(embed_lags(&[1.0, 2.0], 2).is_err());
        assert!(embed_lags(&[], 0).is_err());
    }

    proptest! {
        #[test]
        fn reconstruction_round_trip(
            x in proptest::collection::vec(-1e6f64..1e6, 2..60),
            p_frac in 0.0f64..1.0,
        ) {
            let p = ((x.len() - 1) as f64 * p_frac) as usize;
            let s = embed_lags(&x, p).unwrap();
            // The first row's tail (reversed) is x_1..x_p; column 0 is x_{p+1}..x_T.
            let mut recovered: Vec<f64> = s.row(0)[1..].iter().rev().cloned().collect();
            for i in 0..s.rows() {
                recovered.push(s.row(i)[0]);
            }
            prop_assert_eq!(recovered, x);
        }

        #[test]
        fn overlap_consistency(
            x in proptest::collection::vec(-1e3f64..1e3, 3..40),
        ) {
            let p = 2usize.min(x.len() - 1);
            let s = embed_lags(&x, p).unwrap();
            for t in 0..s.rows().saturating_sub(1) {
                // rows t and t+1 share p coordinates, shifted by one
                prop_assert_eq!(&s.row(t)[..p], &s.row(t + 1)[1..]);
            }
        }
    }
}
