//! Degree sequences and the generator families used by the experiments.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::error::{Error, Result};

/// A validated degree sequence `d_1..d_n` with an even total.
///
/// The cached sums are computed once on construction; the type is immutable
/// afterwards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeSequence {
    degrees: Vec<u32>,
    total: u64,
    sum_d2: u64,
    max_degree: u32,
}

impl DegreeSequence {
    /// Validates signed input, as read from JSON or CSV.
    pub fn validate(degrees: &[i64]) -> Result<Self> {
        let mut out = Vec::with_capacity(degrees.len());
        for (index, &value) in degrees.iter().enumerate() {
            if value < 0 {
                return Err(Error::NegativeDegree { index, value });
            }
            let d = u32::try_from(value).map_err(|_| Error::DegreeOverflow { index, value })?;
            out.push(d);
        }
        Self::new(out)
    }

    pub fn new(degrees: Vec<u32>) -> Result<Self> {
        if degrees.is_empty() {
            return Err(Error::Empty);
        }
        let mut total = 0u64;
        let mut sum_d2 = 0u64;
        let mut max_degree = 0u32;
        for &d in &degrees {
            let d64 = u64::from(d);
            total += d64;
            sum_d2 += d64 * d64.saturating_sub(1);
            max_degree = max_degree.max(d);
        }
        if total % 2 != 0 {
            return Err(Error::OddSum { total });
        }
        Ok(Self {
            degrees,
            total,
            sum_d2,
            max_degree,
        })
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn degree(&self, vertex: usize) -> Result<u32> {
        self.degrees
            .get(vertex)
            .copied()
            .ok_or(Error::VertexOutOfRange {
                vertex,
                n: self.degrees.len(),
            })
    }

    /// Number of vertices `n`.
    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    /// Number of half-edges `N = Σ d_i`.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// `Σ d_i (d_i - 1)`.
    pub fn sum_d2(&self) -> u64 {
        self.sum_d2
    }

    /// `Σ d_i²`.
    pub fn sum_squares(&self) -> u64 {
        self.sum_d2 + self.total
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    /// `Σ d_i² / N`, the quantity whose boundedness decides whether simple
    /// graphs keep positive probability.
    pub fn square_ratio(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.sum_squares() as f64 / self.total as f64
        }
    }

    /// Distinct degree values with their multiplicities, ascending by degree.
    pub fn degree_counts(&self) -> Vec<(u32, u64)> {
        degree_counts(&self.degrees)
    }

    /// Splits vertices until `Σ d_i² ≤ a · N`.
    ///
    /// Each step takes a vertex of current maximum degree (lowest index on
    /// ties), lowers its degree by one and appends a new degree-1 vertex.
    /// `N` is preserved and the maximum degree never grows.
    pub fn split(&self, a: f64) -> Result<Self> {
        if !(a > 1.0) || !a.is_finite() {
            return Err(Error::InvalidParameter("split factor must be finite and > 1"));
        }
        let bound = a * self.total as f64;
        let mut sum_sq = self.sum_squares();
        if sum_sq as f64 <= bound {
            return Ok(self.clone());
        }
        let mut degrees = self.degrees.clone();
        let mut heap: BinaryHeap<(u32, Reverse<usize>)> = degrees
            .iter()
            .enumerate()
            .filter(|(_, &d)| d >= 2)
            .map(|(i, &d)| (d, Reverse(i)))
            .collect();
        while sum_sq as f64 > bound {
            // The all-ones sequence has Σd² = N ≤ a·N, so a vertex with d ≥ 2
            // always remains while the bound is violated.
            let (d, Reverse(i)) = heap.pop().expect("vertex with degree >= 2");
            degrees[i] = d - 1;
            degrees.push(1);
            sum_sq -= 2 * u64::from(d) - 2;
            if d - 1 >= 2 {
                heap.push((d - 1, Reverse(i)));
            }
        }
        Self::new(degrees)
    }
}

pub(crate) fn degree_counts(degrees: &[u32]) -> Vec<(u32, u64)> {
    let mut sorted = degrees.to_vec();
    sorted.sort_unstable();
    let mut out: Vec<(u32, u64)> = Vec::new();
    for d in sorted {
        match out.last_mut() {
            Some((v, c)) if *v == d => *c += 1,
            _ => out.push((d, 1)),
        }
    }
    out
}

/// `n` vertices of degree `d`.
pub fn make_regular(n: usize, d: u32) -> Result<DegreeSequence> {
    if n == 0 {
        return Err(Error::Empty);
    }
    DegreeSequence::new(vec![d; n])
}

/// Two vertices of degree `⌊√N⌋` with the remaining mass as degree-1
/// vertices, so that `λ_12 → 1`.
pub fn make_heavy_pair(total: u64) -> Result<DegreeSequence> {
    if total % 2 != 0 {
        return Err(Error::OddSum { total });
    }
    if total < 4 {
        return Err(Error::TooSmall { total });
    }
    let mut d = isqrt(total);
    while d >= 2 && (2 * d > total || (total - 2 * d) % 2 != 0) {
        d -= 1;
    }
    if d < 2 {
        return Err(Error::TooSmall { total });
    }
    let d32 = u32::try_from(d).map_err(|_| Error::TooSmall { total })?;
    let mut degrees = vec![d32, d32];
    degrees.extend(core::iter::repeat(1).take((total - 2 * d) as usize));
    DegreeSequence::new(degrees)
}

/// `n` vertices of degree one (`n` even).
pub fn make_ones(n: usize) -> Result<DegreeSequence> {
    make_regular(n, 1)
}

/// One hub of degree `hub` with the remaining `N - hub` half-edges on
/// degree-1 vertices.
pub fn make_hub(total: u64, hub: u64) -> Result<DegreeSequence> {
    if total % 2 != 0 {
        return Err(Error::OddSum { total });
    }
    if hub > total || total == 0 {
        return Err(Error::TooSmall { total });
    }
    let hub32 = u32::try_from(hub).map_err(|_| Error::InvalidParameter("hub degree too large"))?;
    let mut degrees = vec![hub32];
    degrees.extend(core::iter::repeat(1).take((total - hub) as usize));
    DegreeSequence::new(degrees)
}

/// A hub sized so that `Σ d_i² / N ≈ ratio`.
pub fn make_heavy_tail(total: u64, ratio: f64) -> Result<DegreeSequence> {
    if !(ratio >= 1.0) {
        return Err(Error::InvalidParameter("square ratio must be >= 1"));
    }
    // hub² + (N - hub) = ratio·N
    let n = total as f64;
    let hub = libm::ceil(libm::sqrt((ratio - 1.0) * n + 0.25) + 0.5) as u64;
    make_hub(total, hub.min(total))
}

/// A block of vertices of degree `⌈N^exponent⌉` carrying about half of the
/// half-edges, padded with degree-1 vertices. For `exponent > 1/2` the ratio
/// `Σ d_i² / N` grows without bound.
pub fn make_power_block(total: u64, exponent: f64) -> Result<DegreeSequence> {
    if total % 2 != 0 {
        return Err(Error::OddSum { total });
    }
    if total < 2 {
        return Err(Error::TooSmall { total });
    }
    if !(exponent > 0.0 && exponent < 1.0) {
        return Err(Error::InvalidParameter("block exponent must lie in (0, 1)"));
    }
    let d = (libm::ceil(libm::pow(total as f64, exponent)) as u64).clamp(1, total);
    let k = (total / (2 * d)).max(1);
    let d32 = u32::try_from(d).map_err(|_| Error::InvalidParameter("block degree too large"))?;
    let mut degrees = vec![d32; k as usize];
    degrees.extend(core::iter::repeat(1).take((total - k * d) as usize));
    DegreeSequence::new(degrees)
}

fn isqrt(x: u64) -> u64 {
    let mut r = libm::sqrt(x as f64) as u64;
    while r * r > x {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= x {
        r += 1;
    }
    r
}

/// Degree sequences `(s_i)` and `(t_j)` of the two sides of a bipartite
/// configuration model, with `Σ s_i = Σ t_j = N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteDegreePair {
    left: Vec<u32>,
    right: Vec<u32>,
    total: u64,
}

impl BipartiteDegreePair {
    pub fn new(left: Vec<u32>, right: Vec<u32>) -> Result<Self> {
        if left.is_empty() || right.is_empty() {
            return Err(Error::Empty);
        }
        let l: u64 = left.iter().map(|&d| u64::from(d)).sum();
        let r: u64 = right.iter().map(|&d| u64::from(d)).sum();
        if l != r {
            return Err(Error::SideMismatch { left: l, right: r });
        }
        Ok(Self {
            left,
            right,
            total: l,
        })
    }

    pub fn validate(left: &[i64], right: &[i64]) -> Result<Self> {
        let conv = |xs: &[i64]| -> Result<Vec<u32>> {
            xs.iter()
                .enumerate()
                .map(|(index, &value)| {
                    if value < 0 {
                        Err(Error::NegativeDegree { index, value })
                    } else {
                        u32::try_from(value).map_err(|_| Error::DegreeOverflow { index, value })
                    }
                })
                .collect()
        };
        Self::new(conv(left)?, conv(right)?)
    }

    /// The unbalanced family `s = (N - ⌊√N⌋, 1, …, 1)`, `t = (2, 1, …, 1)`:
    /// the left hub absorbs both edges of the right degree-2 vertex with
    /// probability tending to one.
    pub fn hub_counterexample(total: u64) -> Result<Self> {
        if total < 4 {
            return Err(Error::TooSmall { total });
        }
        let ones = isqrt(total);
        let hub = u32::try_from(total - ones).map_err(|_| Error::TooSmall { total })?;
        let mut left = vec![hub];
        left.extend(core::iter::repeat(1).take(ones as usize));
        let mut right = vec![2];
        right.extend(core::iter::repeat(1).take((total - 2) as usize));
        Self::new(left, right)
    }

    /// `n_left` vertices of degree `s` against `n_right` of degree `t`.
    pub fn regular(n_left: usize, s: u32, n_right: usize, t: u32) -> Result<Self> {
        Self::new(vec![s; n_left], vec![t; n_right])
    }

    pub fn left(&self) -> &[u32] {
        &self.left
    }

    pub fn right(&self) -> &[u32] {
        &self.right
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn left_counts(&self) -> Vec<(u32, u64)> {
        degree_counts(&self.left)
    }

    pub fn right_counts(&self) -> Vec<(u32, u64)> {
        degree_counts(&self.right)
    }

    /// `(Σ s_i(s_i-1)) (Σ t_j(t_j-1)) / N²`, which stays bounded exactly when
    /// `Σ λ_ij²` does.
    pub fn pair_ratio(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let f = |xs: &[u32]| -> f64 {
            xs.iter()
                .map(|&d| {
                    let d = d as f64;
                    d * (d - 1.0)
                })
                .sum()
        };
        let n = self.total as f64;
        f(&self.left) * f(&self.right) / (n * n)
    }

    /// Tail-sum ratios `Σ_{i ≥ min(t, m)} s_(i) / N` and the mirrored right
    /// side quantity, with both sides sorted in decreasing order and indices
    /// starting at one.
    pub fn tail_ratios(&self, m: usize) -> (f64, f64) {
        let mut s = self.left.clone();
        let mut t = self.right.clone();
        s.sort_unstable_by(|a, b| b.cmp(a));
        t.sort_unstable_by(|a, b| b.cmp(a));
        let n = self.total as f64;
        let tail = |xs: &[u32], start: usize| -> f64 {
            let start = start.max(1);
            xs.iter()
                .skip(start - 1)
                .map(|&d| u64::from(d))
                .sum::<u64>() as f64
        };
        let s_max = s[0] as usize;
        let t_max = t[0] as usize;
        if self.total == 0 {
            return (1.0, 1.0);
        }
        (
            tail(&s, t_max.min(m)) / n,
            tail(&t, s_max.min(m)) / n,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_examples() {
        let ds = DegreeSequence::validate(&[2, 2, 2]).unwrap();
        assert_eq!((ds.total(), ds.sum_d2(), ds.max_degree()), (6, 6, 2));
        let ds = DegreeSequence::validate(&[3, 3, 3, 3]).unwrap();
        assert_eq!((ds.total(), ds.sum_d2()), (12, 24));
        assert_eq!(
            DegreeSequence::validate(&[1, 1, 1]),
            Err(Error::OddSum { total: 3 })
        );
        assert_eq!(
            DegreeSequence::validate(&[2, -1, 1]),
            Err(Error::NegativeDegree { index: 1, value: -1 })
        );
        assert_eq!(DegreeSequence::validate(&[]), Err(Error::Empty));
        // degree-0 vertices are fine
        assert_eq!(DegreeSequence::validate(&[0, 2, 0]).unwrap().total(), 2);
    }

    #[test]
    fn regular_examples() {
        assert_eq!(make_regular(3, 2).unwrap().degrees(), &[2, 2, 2]);
        assert_eq!(make_regular(4, 3).unwrap().degrees(), &[3, 3, 3, 3]);
        assert_eq!(make_regular(3, 3), Err(Error::OddSum { total: 9 }));
        assert_eq!(make_regular(7, 4).unwrap().sum_d2(), 7 * 4 * 3);
    }

    #[test]
    fn heavy_pair_examples() {
        let ds = make_heavy_pair(100).unwrap();
        assert_eq!(&ds.degrees()[..2], &[10, 10]);
        assert_eq!(ds.len(), 82);
        assert_eq!(ds.total(), 100);
        let ds = make_heavy_pair(4).unwrap();
        assert_eq!(ds.degrees(), &[2, 2]);
        let ds = make_heavy_pair(10_000).unwrap();
        assert_eq!(&ds.degrees()[..2], &[100, 100]);
        assert_eq!(make_heavy_pair(2), Err(Error::TooSmall { total: 2 }));
        assert_eq!(make_heavy_pair(7), Err(Error::OddSum { total: 7 }));
    }

    #[test]
    fn split_examples() {
        let base = DegreeSequence::new(vec![2, 2, 2]).unwrap();
        assert_eq!(base.split(2.0).unwrap(), base);

        let base = DegreeSequence::new(vec![4, 1, 1, 1, 1]).unwrap();
        let split = base.split(2.0).unwrap();
        assert_eq!(split.degrees(), &[3, 1, 1, 1, 1, 1]);
        assert_eq!(split.sum_squares(), 14);

        let star = DegreeSequence::new(vec![400]).unwrap();
        let split = star.split(1.5).unwrap();
        assert_eq!(split.total(), 400);
        assert!(split.sum_squares() as f64 <= 1.5 * 400.0);
        assert!(split.max_degree() <= 20);

        assert!(base.split(1.0).is_err());
        assert!(base.split(f64::NAN).is_err());
    }

    #[test]
    fn family_generators() {
        let ds = make_power_block(10_000, 0.6).unwrap();
        assert_eq!(ds.total(), 10_000);
        assert_eq!(ds.max_degree(), 252);
        assert!(ds.square_ratio() > 100.0);

        let ds = make_heavy_tail(2000, 20.0).unwrap();
        assert!((ds.square_ratio() - 20.0).abs() < 0.5, "{}", ds.square_ratio());

        assert_eq!(make_ones(6).unwrap().sum_d2(), 0);
    }

    #[test]
    fn bipartite_pair() {
        assert_eq!(
            BipartiteDegreePair::new(vec![2], vec![1]),
            Err(Error::SideMismatch { left: 2, right: 1 })
        );
        let bp = BipartiteDegreePair::hub_counterexample(10_000).unwrap();
        assert_eq!(bp.left()[0], 9_900);
        let (s_tail, t_tail) = bp.tail_ratios(2);
        assert!((s_tail - 0.01).abs() < 1e-12);
        assert!((t_tail - 0.9998).abs() < 1e-12);
        assert!(bp.pair_ratio() < 10.0);

        let ones = BipartiteDegreePair::regular(5, 1, 5, 1).unwrap();
        assert_eq!(ones.pair_ratio(), 0.0);
        assert_eq!(ones.tail_ratios(1), (1.0, 1.0));
    }
}
