//! Exponent vectors for monomials `z^Q = z_1^{q_1} ⋯ z_n^{q_n}`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A non-negative exponent vector.
///
/// Ordered by total degree first, then lexicographically, so sorted
/// collections of generators come out as `P^1 < P^2 < ⋯`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zeros(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    /// The unit vector `e_j` (0-based `j`).
    pub fn unit(n: usize, j: usize) -> Self {
        let mut e = vec![0; n];
        e[j] = 1;
        MultiIndex(e)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&q| q == 0)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.len(), other.len());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scaled(&self, k: u32) -> MultiIndex {
        MultiIndex(self.0.iter().map(|a| a * k).collect())
    }

    /// `self - other` if every entry stays non-negative.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        debug_assert_eq!(self.len(), other.len());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    /// Componentwise `self <= other`.
    pub fn divides(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Zero-pads (or truncates) to length `n`.
    pub fn resized(&self, n: usize) -> MultiIndex {
        let mut e = self.0.clone();
        e.resize(n, 0);
        MultiIndex(e)
    }

    /// Support is contained in the first `r` coordinates.
    pub fn supported_in(&self, r: usize) -> bool {
        self.0.iter().skip(r).all(|&q| q == 0)
    }

    pub fn as_i64(&self) -> Vec<i64> {
        self.0.iter().map(|&q| q as i64).collect()
    }

    /// `sum_t k_t * generators[t]`, with `n` the ambient length.
    pub fn combination(k: &[u32], generators: &[MultiIndex], n: usize) -> MultiIndex {
        let mut out = vec![0u32; n];
        for (kt, p) in k.iter().zip(generators) {
            for (o, q) in out.iter_mut().zip(p.entries()) {
                *o += kt * q;
            }
        }
        MultiIndex(out)
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

impl std::ops::Index<usize> for MultiIndex {
    type Output = u32;
    fn index(&self, i: usize) -> &u32 {
        &self.0[i]
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, q) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{q}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// All exponent vectors of length `n` with total degree exactly `d`, in
/// lexicographically decreasing order of the first entry.
pub fn monomials_of_degree(n: usize, d: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut current = vec![0u32; n];
    fn rec(pos: usize, left: u32, current: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        let n = current.len();
        if pos + 1 == n {
            current[pos] = left;
            out.push(MultiIndex(current.clone()));
            return;
        }
        for q in (0..=left).rev() {
            current[pos] = q;
            rec(pos + 1, left - q, current, out);
        }
        current[pos] = 0;
    }
    if n == 0 {
        if d == 0 {
            out.push(MultiIndex(Vec::new()));
        }
        return out;
    }
    rec(0, d, &mut current, &mut out);
    out
}

/// All exponent vectors with `lo <= |Q| <= hi`, sorted in graded order.
pub fn monomials_in_range(n: usize, lo: u32, hi: u32) -> Vec<MultiIndex> {
    let mut out: Vec<MultiIndex> = (lo..=hi).flat_map(|d| monomials_of_degree(n, d)).collect();
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_lex_order() {
        let a = MultiIndex::new(vec![2, 3, 0]);
        let b = MultiIndex::new(vec![0, 2, 5]);
        assert!(a < b);
        let c = MultiIndex::new(vec![0, 5, 0]);
        assert!(c < a);
    }

    #[test]
    fn monomial_counts() {
        assert_eq!(monomials_of_degree(3, 2).len(), 6);
        assert_eq!(monomials_in_range(3, 2, 6).len(), 84 - 4);
        assert_eq!(monomials_of_degree(1, 4), vec![MultiIndex::new(vec![4])]);
    }

    #[test]
    fn checked_sub_rejects_negative() {
        let a = MultiIndex::new(vec![1, 0]);
        assert!(a.checked_sub(&MultiIndex::unit(2, 1)).is_none());
        assert_eq!(
            a.checked_sub(&MultiIndex::unit(2, 0)),
            Some(MultiIndex::zeros(2))
        );
    }
}
