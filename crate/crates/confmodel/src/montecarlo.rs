//! Replicate-parallel Monte Carlo over pairings and surrogate draws.
//!
//! Replicate `r` of a task always uses stream `r` of the task's generator,
//! and per-worker histograms are merged by addition, so results do not
//! depend on the number of worker threads.

use confmodel_core::rng::{replicate_rng, tag};
use confmodel_core::{BipartiteDegreePair, DegreeSequence, Pairing, SurrogateModel};
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

/// A configuration model to sample from.
#[derive(Debug, Clone, PartialEq)]
pub enum Ensemble {
    General(DegreeSequence),
    Bipartite(BipartiteDegreePair),
}

impl Ensemble {
    pub fn template(&self) -> Pairing {
        match self {
            Ensemble::General(ds) => Pairing::unpaired(ds),
            Ensemble::Bipartite(bp) => Pairing::unpaired_bipartite(bp),
        }
    }

    pub fn resample<R: Rng + ?Sized>(&self, pairing: &mut Pairing, rng: &mut R) {
        match self {
            Ensemble::General(_) => pairing.resample(rng),
            Ensemble::Bipartite(_) => pairing.resample_bipartite(rng),
        }
    }

    pub fn surrogate(&self) -> SurrogateModel {
        match self {
            Ensemble::General(ds) => SurrogateModel::from_degrees(ds),
            Ensemble::Bipartite(bp) => SurrogateModel::from_bipartite(bp),
        }
    }

    pub fn total(&self) -> u64 {
        match self {
            Ensemble::General(ds) => ds.total(),
            Ensemble::Bipartite(bp) => bp.total(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        match self {
            Ensemble::General(ds) => ds.len(),
            Ensemble::Bipartite(bp) => bp.left().len() + bp.right().len(),
        }
    }

    /// `Σ d_i² / N`, averaged over the two sides for bipartite ensembles.
    pub fn square_ratio(&self) -> f64 {
        match self {
            Ensemble::General(ds) => ds.square_ratio(),
            Ensemble::Bipartite(bp) => {
                let sq = |d: &[u32]| d.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>();
                (sq(bp.left()) + sq(bp.right())) / (2.0 * bp.total() as f64)
            }
        }
    }

    pub fn is_bipartite(&self) -> bool {
        matches!(self, Ensemble::Bipartite(_))
    }
}

/// Counts of observed values `0, 1, 2, …`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Histogram {
    counts: Vec<u64>,
}

impl Histogram {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        let mut h = Self { counts };
        h.trim();
        h
    }

    fn trim(&mut self) {
        while self.counts.last() == Some(&0) {
            self.counts.pop();
        }
    }

    pub fn add(&mut self, value: u64) {
        let v = value as usize;
        if v >= self.counts.len() {
            self.counts.resize(v + 1, 0);
        }
        self.counts[v] += 1;
    }

    pub fn merged(mut self, other: Histogram) -> Histogram {
        if other.counts.len() > self.counts.len() {
            self.counts.resize(other.counts.len(), 0);
        }
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn count(&self, value: u64) -> u64 {
        self.counts.get(value as usize).copied().unwrap_or(0)
    }

    pub fn frequency(&self, value: u64) -> f64 {
        self.count(value) as f64 / self.total() as f64
    }

    /// Sample mean of `Z^m`.
    pub fn raw_moment(&self, m: u32) -> f64 {
        let total = self.total() as f64;
        self.counts
            .iter()
            .enumerate()
            .map(|(z, &c)| c as f64 * (z as f64).powi(m as i32))
            .sum::<f64>()
            / total
    }

    /// Standard error of the sample mean of `Z^m`.
    pub fn raw_moment_se(&self, m: u32) -> f64 {
        let n = self.total() as f64;
        let mean = self.raw_moment(m);
        let second = self.raw_moment(2 * m);
        ((second - mean * mean).max(0.0) / n).sqrt()
    }

    /// `½ Σ |p(z) - q(z)|` between the two empirical pmfs.
    pub fn total_variation(&self, other: &Histogram) -> f64 {
        let (na, nb) = (self.total() as f64, other.total() as f64);
        let len = self.counts.len().max(other.counts.len());
        0.5 * (0..len as u64)
            .map(|z| (self.count(z) as f64 / na - other.count(z) as f64 / nb).abs())
            .sum::<f64>()
    }

    /// A multinomial resample of the same size (bootstrap replicate).
    pub fn resample<R: Rng + ?Sized>(&self, rng: &mut R) -> Histogram {
        let mut remaining_n = self.total();
        let mut remaining_mass = remaining_n;
        let mut out = Vec::with_capacity(self.counts.len());
        for &c in &self.counts {
            if remaining_n == 0 || c == 0 {
                out.push(0);
                remaining_mass -= c;
                continue;
            }
            let p = c as f64 / remaining_mass as f64;
            let x = if p >= 1.0 {
                remaining_n
            } else {
                Binomial::new(remaining_n, p).expect("valid binomial").sample(rng)
            };
            out.push(x);
            remaining_n -= x;
            remaining_mass -= c;
        }
        Histogram::from_counts(out)
    }
}

/// Histogram of `Z` over `replicates` independent pairings.
pub fn z_histogram(ensemble: &Ensemble, replicates: u64, seed: u64, task: &str) -> Histogram {
    let task_tag = tag(task);
    (0..replicates)
        .into_par_iter()
        .fold(
            || (ensemble.template(), Histogram::default()),
            |(mut pairing, mut hist), r| {
                let mut rng = replicate_rng(seed, task_tag, r);
                ensemble.resample(&mut pairing, &mut rng);
                hist.add(pairing.collision_count());
                (pairing, hist)
            },
        )
        .map(|(_, h)| h)
        .reduce(Histogram::default, Histogram::merged)
}

/// Histogram of `Ẑ` over `replicates` independent surrogate draws.
pub fn zhat_histogram(model: &SurrogateModel, replicates: u64, seed: u64, task: &str) -> Histogram {
    let task_tag = tag(task);
    (0..replicates)
        .into_par_iter()
        .fold(Histogram::default, |mut hist, r| {
            let mut rng = replicate_rng(seed, task_tag, r);
            hist.add(model.sample_zhat(&mut rng));
            hist
        })
        .reduce(Histogram::default, Histogram::merged)
}

/// Percentile interval of `values` at the given two-sided level.
pub fn percentile_interval(values: &mut [f64], level: f64) -> (f64, f64) {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let alpha = (1.0 - level) / 2.0;
    let idx = |q: f64| ((q * (n - 1) as f64).round() as usize).min(n - 1);
    (values[idx(alpha)], values[idx(1.0 - alpha)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use confmodel_core::rng::seeded;

    #[test]
    fn histogram_moments() {
        let h = Histogram::from_counts(vec![2, 1, 1]);
        assert_eq!(h.total(), 4);
        assert_eq!(h.raw_moment(1), 0.75);
        assert_eq!(h.raw_moment(2), 1.25);
        assert_eq!(h.frequency(0), 0.5);
        let other = Histogram::from_counts(vec![4]);
        assert_eq!(h.total_variation(&other), 0.5);
        assert_eq!(h.total_variation(&h), 0.0);
    }

    #[test]
    fn resample_preserves_size_and_support() {
        let h = Histogram::from_counts(vec![500, 0, 300, 200]);
        let mut rng = seeded(1);
        for _ in 0..20 {
            let r = h.resample(&mut rng);
            assert_eq!(r.total(), 1000);
            assert_eq!(r.count(1), 0);
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let ens = Ensemble::General(DegreeSequence::new(vec![3, 3, 2, 2, 2, 1, 1]).unwrap());
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| z_histogram(&ens, 20_000, 3, "t"));
        let b = four.install(|| z_histogram(&ens, 20_000, 3, "t"));
        assert_eq!(a, b);
    }

    #[test]
    fn percentile_bounds() {
        let mut v: Vec<f64> = (0..101).map(f64::from).collect();
        assert_eq!(percentile_interval(&mut v, 0.9), (5.0, 95.0));
    }
}
