//! The Poisson surrogate `Ẑ = Σ X̂_i + Σ_{i<j} C(X̂_ij, 2)` with independent
//! `X̂_i ~ Po(λ_i)` and `X̂_ij ~ Po(λ_ij)`, where
//!
//! ```text
//! λ_i  = d_i (d_i - 1) / 2N
//! λ_ij = sqrt(d_i (d_i - 1) d_j (d_j - 1)) / N
//! ```
//!
//! `λ_ij` depends only on the two degree values, so every quantity here is
//! computed over pairs of distinct degree values weighted by how many vertex
//! pairs share them. Bipartite models have no loop terms and range over all
//! left/right pairs.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};

use crate::degrees::{BipartiteDegreePair, DegreeSequence};
use crate::error::{Error, Result};
use crate::moments::{
    cumulants_from_moments, excess_log1p, moments_from_cumulants, pair_collision_moments,
    poisson_tail_two,
};

/// Default maximum moment order for [`SurrogateModel::zhat_moment`].
pub const DEFAULT_MAX_ORDER: usize = 6;

/// `λ_i` for a vertex of degree `d`.
pub fn lambda_loop(d: u32, total: u64) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let d = f64::from(d);
    d * (d - 1.0).max(0.0) / (2.0 * total as f64)
}

/// `λ_ij` for vertices of degrees `a` and `b`.
pub fn lambda_pair(a: u32, b: u32, total: u64) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let f = |d: u32| {
        let d = f64::from(d);
        d * (d - 1.0).max(0.0)
    };
    libm::sqrt(f(a) * f(b)) / total as f64
}

/// One independent family of identical surrogate terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairTerm {
    pub degrees: (u32, u32),
    pub lambda: f64,
    /// Number of vertex pairs sharing this `λ_ij`.
    pub multiplicity: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopTerm {
    pub degree: u32,
    pub lambda: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateModel {
    total: u64,
    loops: Vec<LoopTerm>,
    pairs: Vec<PairTerm>,
    bipartite: bool,
    max_order: usize,
}

impl SurrogateModel {
    pub fn from_degrees(ds: &DegreeSequence) -> Self {
        let total = ds.total();
        let groups: Vec<(u32, u64)> = ds
            .degree_counts()
            .into_iter()
            .filter(|&(d, _)| d >= 2)
            .collect();
        let loops = groups
            .iter()
            .map(|&(degree, count)| LoopTerm {
                degree,
                lambda: lambda_loop(degree, total),
                count,
            })
            .collect();
        let mut pairs = Vec::new();
        for (a, &(da, ca)) in groups.iter().enumerate() {
            for &(db, cb) in &groups[a..] {
                let multiplicity = if da == db {
                    ca * (ca - 1) / 2
                } else {
                    ca * cb
                };
                if multiplicity > 0 {
                    pairs.push(PairTerm {
                        degrees: (da, db),
                        lambda: lambda_pair(da, db, total),
                        multiplicity,
                    });
                }
            }
        }
        Self {
            total,
            loops,
            pairs,
            bipartite: false,
            max_order: DEFAULT_MAX_ORDER,
        }
    }

    pub fn from_bipartite(bp: &BipartiteDegreePair) -> Self {
        let total = bp.total();
        let big = |xs: Vec<(u32, u64)>| -> Vec<(u32, u64)> {
            xs.into_iter().filter(|&(d, _)| d >= 2).collect()
        };
        let left = big(bp.left_counts());
        let right = big(bp.right_counts());
        let mut pairs = Vec::new();
        for &(s, cs) in &left {
            for &(t, ct) in &right {
                pairs.push(PairTerm {
                    degrees: (s, t),
                    lambda: lambda_pair(s, t, total),
                    multiplicity: cs * ct,
                });
            }
        }
        Self {
            total,
            loops: Vec::new(),
            pairs,
            bipartite: true,
            max_order: DEFAULT_MAX_ORDER,
        }
    }

    /// Model over an explicit set of independent terms.
    pub fn from_terms(total: u64, loops: Vec<LoopTerm>, pairs: Vec<PairTerm>, bipartite: bool) -> Self {
        Self {
            total,
            loops,
            pairs,
            bipartite,
            max_order: DEFAULT_MAX_ORDER,
        }
    }

    pub fn with_max_order(mut self, max_order: usize) -> Self {
        self.max_order = max_order;
        self
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_bipartite(&self) -> bool {
        self.bipartite
    }

    /// Loop terms for vertices of degree at least two (empty if bipartite).
    pub fn loop_terms(&self) -> &[LoopTerm] {
        &self.loops
    }

    /// Pair terms for degree-value pairs with both degrees at least two.
    pub fn pair_terms(&self) -> &[PairTerm] {
        &self.pairs
    }

    pub fn sum_lambda_i(&self) -> f64 {
        self.loops.iter().map(|t| t.count as f64 * t.lambda).sum()
    }

    pub fn sum_lambda_ij(&self) -> f64 {
        self.pairs
            .iter()
            .map(|t| t.multiplicity as f64 * t.lambda)
            .sum()
    }

    pub fn sum_lambda_ij_sq(&self) -> f64 {
        self.pairs
            .iter()
            .map(|t| t.multiplicity as f64 * t.lambda * t.lambda)
            .sum()
    }

    /// `log P(Ẑ = 0) = -Σ λ_i - Σ (λ_ij - log(1 + λ_ij))`.
    pub fn log_prob_simple(&self) -> f64 {
        let pairs: f64 = self
            .pairs
            .iter()
            .map(|t| t.multiplicity as f64 * excess_log1p(t.lambda))
            .sum();
        -self.sum_lambda_i() - pairs
    }

    /// `P(Ẑ = 0) = Π e^{-λ_i} Π (1 + λ_ij) e^{-λ_ij}`, the limiting
    /// probability that the configuration-model multigraph is simple.
    pub fn prob_simple(&self) -> f64 {
        libm::exp(self.log_prob_simple())
    }

    /// Cumulants `κ_1..κ_order` of `Ẑ`, summed over independent terms.
    pub fn zhat_cumulants(&self, order: usize) -> Result<Vec<f64>> {
        if order > self.max_order {
            return Err(Error::OrderTooHigh {
                order,
                max: self.max_order,
            });
        }
        // every cumulant of Po(Λ) equals Λ
        let loop_rate = self.sum_lambda_i();
        let mut kappa = alloc::vec![loop_rate; order];
        for t in &self.pairs {
            if t.lambda == 0.0 {
                continue;
            }
            let y = cumulants_from_moments(&pair_collision_moments(t.lambda, order));
            for (k, c) in kappa.iter_mut().zip(y) {
                *k += t.multiplicity as f64 * c;
            }
        }
        Ok(kappa)
    }

    /// `E Ẑ^1..E Ẑ^order`.
    pub fn zhat_moments(&self, order: usize) -> Result<Vec<f64>> {
        Ok(moments_from_cumulants(&self.zhat_cumulants(order)?))
    }

    /// `E Ẑ^order`.
    pub fn zhat_moment(&self, order: usize) -> Result<f64> {
        if order == 0 {
            return Ok(1.0);
        }
        Ok(self.zhat_moments(order)?[order - 1])
    }

    /// One draw of `Ẑ`.
    ///
    /// Loop counts of a degree group are summed into one Poisson draw. For a
    /// group of `K` pairs sharing `λ`, the number of pairs with `X̂ ≥ 2` is
    /// `Binomial(K, P(Po(λ) ≥ 2))` and each such pair then draws `X̂`
    /// conditioned on `X̂ ≥ 2`.
    pub fn sample_zhat<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let mut z = 0u64;
        for t in &self.loops {
            let rate = t.count as f64 * t.lambda;
            if rate > 0.0 {
                z += poisson(rate, rng);
            }
        }
        for t in &self.pairs {
            if t.lambda <= 0.0 {
                continue;
            }
            let q = poisson_tail_two(t.lambda);
            let hits = if q >= 1.0 {
                t.multiplicity
            } else {
                Binomial::new(t.multiplicity, q)
                    .expect("valid binomial")
                    .sample(rng)
            };
            for _ in 0..hits {
                let x = poisson_at_least_two(t.lambda, q, rng);
                z += x * (x - 1) / 2;
            }
        }
        z
    }
}

fn poisson<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> u64 {
    Poisson::new(rate).expect("positive finite rate").sample(rng) as u64
}

/// `X ~ Po(λ)` conditioned on `X ≥ 2`; `q = P(X ≥ 2)`.
fn poisson_at_least_two<R: Rng + ?Sized>(lambda: f64, q: f64, rng: &mut R) -> u64 {
    if q > 0.25 {
        let dist = Poisson::new(lambda).expect("positive finite rate");
        loop {
            let x = dist.sample(rng) as u64;
            if x >= 2 {
                return x;
            }
        }
    }
    let u = rng.random::<f64>() * q;
    let mut k = 2u64;
    let mut p = libm::exp(-lambda) * lambda * lambda / 2.0;
    let mut acc = p;
    while acc < u && k < 10_000 {
        k += 1;
        p *= lambda / k as f64;
        acc += p;
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degrees::{make_heavy_pair, make_regular};
    use crate::rng::seeded;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn lambdas_for_triangle_degrees() {
        let ds = DegreeSequence::new(alloc::vec![2, 2, 2]).unwrap();
        let m = SurrogateModel::from_degrees(&ds);
        assert_eq!(m.loop_terms().len(), 1);
        assert!(close(m.loop_terms()[0].lambda, 1.0 / 6.0, 1e-15));
        assert_eq!(m.pair_terms().len(), 1);
        assert_eq!(m.pair_terms()[0].multiplicity, 3);
        assert!(close(m.pair_terms()[0].lambda, 1.0 / 3.0, 1e-15));
    }

    #[test]
    fn all_ones_has_no_terms() {
        let m = SurrogateModel::from_degrees(&make_regular(10, 1).unwrap());
        assert!(m.loop_terms().is_empty() && m.pair_terms().is_empty());
        assert_eq!(m.prob_simple(), 1.0);
        assert_eq!(m.zhat_moments(4).unwrap(), alloc::vec![0.0; 4]);
        let mut rng = seeded(1);
        assert!((0..100).all(|_| m.sample_zhat(&mut rng) == 0));
    }

    #[test]
    fn regular_pair_sum() {
        let (n, d) = (50usize, 4u32);
        let m = SurrogateModel::from_degrees(&make_regular(n, d).unwrap());
        let expected = f64::from(d - 1) * (n as f64 - 1.0) / 2.0;
        assert!(close(m.sum_lambda_ij(), expected, 1e-13));
        assert!(close(m.pair_terms()[0].lambda, f64::from(d - 1) / n as f64, 1e-15));
    }

    #[test]
    fn prob_simple_examples() {
        let ones = DegreeSequence::new(alloc::vec![1, 1]).unwrap();
        assert_eq!(SurrogateModel::from_degrees(&ones).prob_simple(), 1.0);

        let tri = DegreeSequence::new(alloc::vec![2, 2, 2]).unwrap();
        let expected = 64.0 / 27.0 * (-1.5f64).exp();
        let p = SurrogateModel::from_degrees(&tri).prob_simple();
        assert!(close(p, expected, 1e-12));
        assert!((p - 0.528901).abs() < 1e-6);

        let big = SurrogateModel::from_degrees(&make_regular(100_000, 3).unwrap());
        assert!((big.prob_simple() - (-2.0f64).exp()).abs() < 5e-5);
    }

    #[test]
    fn heavy_pair_lambda() {
        let m = SurrogateModel::from_degrees(&make_heavy_pair(100).unwrap());
        assert!(close(m.pair_terms()[0].lambda, 0.9, 1e-15));
        let m = SurrogateModel::from_degrees(&make_heavy_pair(4).unwrap());
        assert!(close(m.pair_terms()[0].lambda, 0.5, 1e-15));
        let m = SurrogateModel::from_degrees(&make_heavy_pair(10_000).unwrap());
        assert!(close(m.pair_terms()[0].lambda, 0.99, 1e-15));
    }

    #[test]
    fn first_moment_triangle() {
        let tri = DegreeSequence::new(alloc::vec![2, 2, 2]).unwrap();
        let m = SurrogateModel::from_degrees(&tri);
        assert!(close(m.zhat_moment(1).unwrap(), 2.0 / 3.0, 1e-14));
        assert_eq!(
            m.zhat_moment(7),
            Err(Error::OrderTooHigh { order: 7, max: 6 })
        );
        assert!(m.clone().with_max_order(8).zhat_moment(8).is_ok());
    }

    #[test]
    fn bipartite_terms() {
        let bp = BipartiteDegreePair::regular(3, 2, 2, 3).unwrap();
        let m = SurrogateModel::from_bipartite(&bp);
        assert!(m.is_bipartite());
        assert!(m.loop_terms().is_empty());
        assert_eq!(m.pair_terms().len(), 1);
        assert_eq!(m.pair_terms()[0].multiplicity, 6);
        assert!(close(m.pair_terms()[0].lambda, 12f64.sqrt() / 6.0, 1e-15));
        let l = m.pair_terms()[0].lambda;
        let expected = ((1.0 + l) * (-l).exp()).powi(6);
        assert!(close(m.prob_simple(), expected, 1e-12));
        assert!(m.prob_simple() < 1.0);
    }

    #[test]
    fn tiny_lambda_uses_stable_excess() {
        let m = SurrogateModel::from_degrees(&make_regular(1_000_000, 3).unwrap());
        let p = m.prob_simple();
        assert!((p - (-2.0f64 + 1e-6).exp()).abs() < 1e-6);
    }
}
