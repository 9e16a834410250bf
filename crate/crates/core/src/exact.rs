//! Exact results at small `N`: brute-force enumeration of every pairing and
//! the closed-form finite-`N` expectations of loop and double-edge counts.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::degrees::{BipartiteDegreePair, DegreeSequence};
use crate::error::{Error, Result};
use crate::sampler::Pairing;

/// Default enumeration cap: `N ≤ 16`, i.e. at most 2,027,025 matchings.
pub const DEFAULT_MAX_TOTAL: u64 = 16;
/// Default cap for bipartite enumeration over `N!` bijections.
pub const DEFAULT_MAX_BIPARTITE_TOTAL: u64 = 10;
/// Moment orders recorded by an [`ExactSummary`].
pub const SUMMARY_MOMENTS: usize = 6;

/// `(n - 1)!!` for even `n` (1 for `n = 0`).
pub fn double_factorial_odd(n: u64) -> u64 {
    (1..n).step_by(2).product::<u64>().max(1)
}

/// Exact distribution of `Z` over all equally likely pairings.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSummary {
    pub num_matchings: u64,
    pub simple_count: u64,
    /// `z -> number of pairings with that Z`.
    pub z_counts: BTreeMap<u64, u64>,
    /// `E Z^1..E Z^SUMMARY_MOMENTS`.
    pub moments: Vec<f64>,
}

impl ExactSummary {
    fn from_counts(z_counts: BTreeMap<u64, u64>) -> Self {
        let num_matchings: u64 = z_counts.values().sum();
        let simple_count = z_counts.get(&0).copied().unwrap_or(0);
        let moments = (1..=SUMMARY_MOMENTS as i32)
            .map(|m| {
                let s: f64 = z_counts
                    .iter()
                    .map(|(&z, &c)| c as f64 * libm::pow(z as f64, f64::from(m)))
                    .sum();
                s / num_matchings as f64
            })
            .collect();
        Self {
            num_matchings,
            simple_count,
            z_counts,
            moments,
        }
    }

    pub fn prob_simple(&self) -> f64 {
        self.simple_count as f64 / self.num_matchings as f64
    }

    /// `(z, P(Z = z))` in increasing `z`.
    pub fn z_distribution(&self) -> Vec<(u64, f64)> {
        let total = self.num_matchings as f64;
        self.z_counts
            .iter()
            .map(|(&z, &c)| (z, c as f64 / total))
            .collect()
    }
}

/// Calls `visit` once for every perfect matching of the half-edges of `ds`.
///
/// The lowest unmatched half-edge is joined to each remaining unmatched
/// half-edge in turn, recursively, so each of the `(N-1)!!` matchings is
/// produced exactly once.
pub fn visit_matchings<F: FnMut(&mut Pairing)>(
    ds: &DegreeSequence,
    max_total: u64,
    mut visit: F,
) -> Result<u64> {
    if ds.total() > max_total {
        return Err(Error::TooLarge {
            total: ds.total(),
            max: max_total,
        });
    }
    let mut pairing = Pairing::unpaired(ds);
    let n = pairing.half_edges();
    const FREE: u32 = u32::MAX;
    pairing.partners_mut().fill(FREE);
    let mut leaves = 0u64;
    recurse(&mut pairing, n, &mut visit, &mut leaves);
    Ok(leaves)
}

fn recurse<F: FnMut(&mut Pairing)>(p: &mut Pairing, n: usize, visit: &mut F, leaves: &mut u64) {
    const FREE: u32 = u32::MAX;
    let first = p.partners().iter().position(|&x| x == FREE);
    let Some(a) = first else {
        *leaves += 1;
        visit(p);
        return;
    };
    for b in a + 1..n {
        if p.partners()[b] != FREE {
            continue;
        }
        p.partners_mut()[a] = b as u32;
        p.partners_mut()[b] = a as u32;
        recurse(p, n, visit, leaves);
        p.partners_mut()[a] = FREE;
        p.partners_mut()[b] = FREE;
    }
}

/// Calls `visit` once for every bijection between left and right
/// half-edges (`N!` of them), in Heap's-algorithm order.
pub fn visit_bipartite_matchings<F: FnMut(&mut Pairing)>(
    bp: &BipartiteDegreePair,
    max_total: u64,
    mut visit: F,
) -> Result<u64> {
    if bp.total() > max_total {
        return Err(Error::TooLarge {
            total: bp.total(),
            max: max_total,
        });
    }
    let mut pairing = Pairing::unpaired_bipartite(bp);
    let boundary = pairing.side_boundary().expect("bipartite layout");
    let mut perm: Vec<u32> = (boundary as u32..pairing.half_edges() as u32).collect();
    let assign = |p: &mut Pairing, perm: &[u32]| {
        let partners = p.partners_mut();
        for (h, &r) in perm.iter().enumerate() {
            partners[h] = r;
            partners[r as usize] = h as u32;
        }
    };
    let k = perm.len();
    let mut c = alloc::vec![0usize; k];
    let mut leaves = 1u64;
    assign(&mut pairing, &perm);
    visit(&mut pairing);
    let mut i = 1;
    while i < k {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            assign(&mut pairing, &perm);
            visit(&mut pairing);
            leaves += 1;
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(leaves)
}

/// Exact distribution and moments of `Z` by enumerating all pairings.
pub fn enumerate_exact(ds: &DegreeSequence, max_total: u64) -> Result<ExactSummary> {
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    visit_matchings(ds, max_total, |p| {
        *counts.entry(p.collision_count()).or_insert(0) += 1;
    })?;
    Ok(ExactSummary::from_counts(counts))
}

/// Bipartite analogue of [`enumerate_exact`].
pub fn enumerate_exact_bipartite(bp: &BipartiteDegreePair, max_total: u64) -> Result<ExactSummary> {
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    visit_bipartite_matchings(bp, max_total, |p| {
        *counts.entry(p.collision_count()).or_insert(0) += 1;
    })?;
    Ok(ExactSummary::from_counts(counts))
}

fn falling(x: u64, k: u64) -> f64 {
    (0..k).map(|r| x.saturating_sub(r) as f64).product()
}

/// `E X_i = C(d_i, 2) / (N - 1)`.
pub fn exact_ex_i(ds: &DegreeSequence, i: usize) -> Result<f64> {
    exact_factorial_ex_i(ds, i, 1)
}

/// `E(X_i)_ℓ = (d_i)_{2ℓ} / (2^ℓ (N-1)(N-3)⋯(N-2ℓ+1))`.
pub fn exact_factorial_ex_i(ds: &DegreeSequence, i: usize, ell: u32) -> Result<f64> {
    let d = u64::from(ds.degree(i)?);
    let n = ds.total();
    let ell = u64::from(ell);
    if ell == 0 {
        return Ok(1.0);
    }
    if n < 2 * ell {
        return Err(Error::InvalidParameter("factorial moment order exceeds N/2"));
    }
    let denom: f64 = (1..=ell).map(|k| (n - 2 * k + 1) as f64).product();
    Ok(falling(d, 2 * ell) / (libm::pow(2.0, ell as f64) * denom))
}

/// `E Y_ij = d_i d_j (d_i - 1)(d_j - 1) / (2 (N-1)(N-3))`.
pub fn exact_ey_ij(ds: &DegreeSequence, i: usize, j: usize) -> Result<f64> {
    if i == j {
        return Err(Error::SameVertex(i));
    }
    let a = u64::from(ds.degree(i)?);
    let b = u64::from(ds.degree(j)?);
    let n = ds.total();
    if n < 4 {
        return Err(Error::InvalidParameter("E Y_ij needs N >= 4"));
    }
    Ok(falling(a, 2) * falling(b, 2) / (2.0 * (n - 1) as f64 * (n - 3) as f64))
}

/// `E Z = Σ_i E X_i + Σ_{i<j} E Y_ij`, summed over degree groups.
pub fn exact_ez(ds: &DegreeSequence) -> Result<f64> {
    let n = ds.total();
    if n < 2 {
        return Ok(0.0);
    }
    let groups: Vec<(u32, u64)> = ds
        .degree_counts()
        .into_iter()
        .filter(|&(d, _)| d >= 2)
        .collect();
    let loops: f64 = groups
        .iter()
        .map(|&(d, c)| c as f64 * falling(u64::from(d), 2) / 2.0)
        .sum::<f64>()
        / (n - 1) as f64;
    if n < 4 {
        return Ok(loops);
    }
    let mut pairs = 0.0;
    for (a, &(da, ca)) in groups.iter().enumerate() {
        for &(db, cb) in &groups[a..] {
            let k = if da == db { ca * (ca - 1) / 2 } else { ca * cb };
            pairs += k as f64 * falling(u64::from(da), 2) * falling(u64::from(db), 2);
        }
    }
    Ok(loops + pairs / (2.0 * (n - 1) as f64 * (n - 3) as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn ds(d: &[u32]) -> DegreeSequence {
        DegreeSequence::new(d.to_vec()).unwrap()
    }

    #[test]
    fn double_factorials() {
        assert_eq!(double_factorial_odd(0), 1);
        assert_eq!(double_factorial_odd(2), 1);
        assert_eq!(double_factorial_odd(6), 15);
        assert_eq!(double_factorial_odd(16), 2_027_025);
    }

    #[test]
    fn enumeration_examples() {
        let s = enumerate_exact(&ds(&[1, 1]), 16).unwrap();
        assert_eq!((s.num_matchings, s.prob_simple()), (1, 1.0));

        let s = enumerate_exact(&ds(&[2, 2, 2]), 16).unwrap();
        assert_eq!((s.num_matchings, s.simple_count), (15, 8));

        let s = enumerate_exact(&ds(&[2, 2]), 16).unwrap();
        assert_eq!(s.num_matchings, 3);
        assert_eq!(s.simple_count, 0);
        assert_eq!(s.z_counts, BTreeMap::from([(1, 2), (2, 1)]));
        assert_eq!(s.prob_simple(), 0.0);
        assert_eq!(s.z_distribution(), vec![(1, 2.0 / 3.0), (2, 1.0 / 3.0)]);

        assert_eq!(
            enumerate_exact(&ds(&[18]), 16),
            Err(Error::TooLarge { total: 18, max: 16 })
        );
    }

    #[test]
    fn leaf_counts_are_double_factorials() {
        for d in [vec![1u32, 1], vec![4, 2, 2], vec![3, 3, 2, 2, 1, 1], vec![5, 5, 3, 1, 1, 1]] {
            let seq = ds(&d);
            let leaves = visit_matchings(&seq, 16, |_| {}).unwrap();
            assert_eq!(leaves, double_factorial_odd(seq.total()));
        }
    }

    #[test]
    fn bipartite_leaf_counts() {
        let bp = BipartiteDegreePair::new(vec![2, 1, 1], vec![3, 1]).unwrap();
        let s = enumerate_exact_bipartite(&bp, 10).unwrap();
        assert_eq!(s.num_matchings, 24);
        let bp = BipartiteDegreePair::new(vec![2], vec![2]).unwrap();
        let s = enumerate_exact_bipartite(&bp, 10).unwrap();
        assert_eq!((s.num_matchings, s.simple_count), (2, 0));
        assert_eq!(s.z_counts, BTreeMap::from([(1, 2)]));
    }

    #[test]
    fn closed_form_examples() {
        let tri = ds(&[2, 2, 2]);
        assert!((exact_ex_i(&tri, 0).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(exact_ex_i(&ds(&[1, 3]), 0).unwrap(), 0.0);
        assert!((exact_ex_i(&ds(&[4, 2, 2]), 0).unwrap() - 6.0 / 7.0).abs() < 1e-15);

        let s = ds(&[4, 2, 2]);
        assert!((exact_factorial_ex_i(&s, 0, 1).unwrap() - exact_ex_i(&s, 0).unwrap()).abs() < 1e-15);
        assert_eq!(exact_factorial_ex_i(&s, 1, 2).unwrap(), 0.0);
        assert!((exact_factorial_ex_i(&s, 0, 2).unwrap() - 24.0 / 140.0).abs() < 1e-15);

        assert!((exact_ey_ij(&tri, 0, 1).unwrap() - 2.0 / 15.0).abs() < 1e-15);
        assert_eq!(exact_ey_ij(&ds(&[1, 3, 2]), 0, 1).unwrap(), 0.0);
        assert!((exact_ey_ij(&ds(&[3, 3, 2]), 0, 1).unwrap() - 36.0 / 70.0).abs() < 1e-15);
        assert_eq!(exact_ey_ij(&tri, 1, 1), Err(Error::SameVertex(1)));
    }

    #[test]
    fn ez_matches_enumeration() {
        for d in [vec![2u32, 2, 2], vec![4, 2, 2], vec![3, 3, 2, 2], vec![5, 3, 2, 1, 1]] {
            let seq = ds(&d);
            let s = enumerate_exact(&seq, 16).unwrap();
            let ez = exact_ez(&seq).unwrap();
            assert!((s.moments[0] - ez).abs() < 1e-12, "{d:?}: {} vs {ez}", s.moments[0]);
        }
    }
}
