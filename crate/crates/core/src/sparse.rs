//! Canonical sparse vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A vector over `dim` coordinates stored as strictly increasing
/// `(index, value)` pairs with no explicit zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVec {
    dim: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVec {
    pub fn zeros(dim: usize) -> Self {
        SparseVec {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a vector from index/value pairs, checking canonical form.
    pub fn new(dim: usize, indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::InvalidVector(format!(
                "{} indices but {} values",
                indices.len(),
                values.len()
            )));
        }
        for w in indices.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidVector(format!(
                    "indices not strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        if let Some(&last) = indices.last() {
            if last >= dim {
                return Err(Error::InvalidVector(format!(
                    "index {last} out of range for dim {dim}"
                )));
            }
        }
        if let Some(pos) = values.iter().position(|v| *v == 0.0 || !v.is_finite()) {
            return Err(Error::InvalidVector(format!(
                "stored value {} at index {} is zero or non-finite",
                values[pos], indices[pos]
            )));
        }
        Ok(SparseVec {
            dim,
            indices,
            values,
        })
    }

    /// Builds a vector from pairs that are already known to be canonical.
    /// Zeros are dropped.
    pub(crate) fn from_sorted_pairs(dim: usize, pairs: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut out = SparseVec::zeros(dim);
        out.refill_sorted_pairs(dim, pairs);
        out
    }

    /// Replaces the contents with `pairs`, reusing the buffers.
    pub(crate) fn refill_sorted_pairs(&mut self, dim: usize, pairs: impl IntoIterator<Item = (usize, f64)>) {
        let pairs = pairs.into_iter();
        let cap = pairs.size_hint().0;
        self.dim = dim;
        self.indices.resize(cap, 0);
        self.values.resize(cap, 0.0);
        // zeros are overwritten by the next entry instead of skipped, which
        // keeps the loop free of data-dependent branches
        let mut n = 0;
        for (i, v) in pairs {
            debug_assert!(i < dim);
            debug_assert!(n == 0 || self.indices[n - 1] < i);
            if n == self.indices.len() {
                self.indices.push(i);
                self.values.push(v);
            } else {
                self.indices[n] = i;
                self.values[n] = v;
            }
            n += (v != 0.0) as usize;
        }
        self.indices.truncate(n);
        self.values.truncate(n);
    }

    pub fn from_dense(x: &[f64]) -> Self {
        Self::from_sorted_pairs(x.len(), x.iter().copied().enumerate())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_zero(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn get(&self, i: usize) -> f64 {
        match self.indices.binary_search(&i) {
            Ok(p) => self.values[p],
            Err(_) => 0.0,
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dot_dense(&self, x: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * x[i]).sum()
    }

    /// `y += a * self`
    pub fn axpy_into(&self, a: f64, y: &mut [f64]) {
        for (i, v) in self.iter() {
            y[i] += a * v;
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        for (i, v) in self.iter() {
            x[i] = v;
        }
        x
    }

    pub fn scaled(&self, a: f64) -> SparseVec {
        Self::from_sorted_pairs(self.dim, self.iter().map(|(i, v)| (i, a * v)))
    }

    /// Overrides the dimension; fails if a stored index would fall outside.
    pub fn with_dim(mut self, dim: usize) -> Result<Self> {
        if let Some(&last) = self.indices.last() {
            if last >= dim {
                return Err(Error::InvalidVector(format!(
                    "index {last} out of range for dim {dim}"
                )));
            }
        }
        self.dim = dim;
        Ok(self)
    }
}

/// True if two sorted index lists share an element.
pub fn sorted_intersects(a: &[usize], b: &[usize]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

/// Union of sorted index lists, sorted and deduplicated.
pub fn sorted_union<'a>(lists: impl IntoIterator<Item = &'a [usize]>) -> Vec<usize> {
    let mut out: Vec<usize> = lists.into_iter().flatten().copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_canonical() {
        assert!(SparseVec::new(5, vec![1, 1], vec![1.0, 2.0]).is_err());
        assert!(SparseVec::new(5, vec![2, 1], vec![1.0, 2.0]).is_err());
        assert!(SparseVec::new(5, vec![5], vec![1.0]).is_err());
        assert!(SparseVec::new(5, vec![0], vec![0.0]).is_err());
        assert!(SparseVec::new(5, vec![0, 4], vec![1.0, -2.0]).is_ok());
    }

    #[test]
    fn dense_round_trip_drops_zeros() {
        let x = [0.0, 3.0, 0.0, -1.5];
        let s = SparseVec::from_dense(&x);
        assert_eq!(s.indices(), &[1, 3]);
        assert_eq!(s.to_dense(), x.to_vec());
        assert_eq!(s.get(2), 0.0);
        assert_eq!(s.norm_sq(), 11.25);
    }

    #[test]
    fn intersection_merge() {
        assert!(sorted_intersects(&[1, 4, 9], &[2, 9]));
        assert!(!sorted_intersects(&[1, 4], &[2, 5]));
        assert!(!sorted_intersects(&[], &[2]));
        assert_eq!(sorted_union([&[3usize, 5][..], &[1, 3]]), vec![1, 3, 5]);
    }
}
