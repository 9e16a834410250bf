//! Uniform half-edge pairings (the configuration model) and the collision
//! statistic `Z = Σ X_i + Σ_{i<j} C(X_ij, 2)`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng;

use crate::degrees::{BipartiteDegreePair, DegreeSequence};
use crate::error::{Error, Result};

/// A perfect matching of half-edges together with the half-edge owners.
///
/// Half-edges of a vertex occupy a contiguous index range, in vertex order.
/// For bipartite pairings the left half-edges come first (`0..N`) and right
/// vertices are numbered after the left ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pairing {
    partner: Vec<u32>,
    owner: Vec<u32>,
    /// `starts[v]..starts[v + 1]` are the half-edges of `v`.
    starts: Vec<u32>,
    left_vertices: Option<usize>,
    scratch: Vec<u32>,
}

impl Pairing {
    fn layout(degrees: impl Iterator<Item = u32>) -> (Vec<u32>, Vec<u32>) {
        let mut owner = Vec::new();
        let mut starts = Vec::new();
        let mut next = 0u32;
        for (v, d) in degrees.enumerate() {
            starts.push(next);
            owner.extend(core::iter::repeat(v as u32).take(d as usize));
            next += d;
        }
        starts.push(next);
        (owner, starts)
    }

    /// Unpaired layout for `ds`; call [`Pairing::resample`] before use.
    pub fn unpaired(ds: &DegreeSequence) -> Self {
        let (owner, starts) = Self::layout(ds.degrees().iter().copied());
        let n = owner.len();
        Self {
            partner: (0..n as u32).collect(),
            owner,
            starts,
            left_vertices: None,
            scratch: Vec::new(),
        }
    }

    /// Unpaired bipartite layout; call [`Pairing::resample_bipartite`].
    pub fn unpaired_bipartite(bp: &BipartiteDegreePair) -> Self {
        let (owner, starts) =
            Self::layout(bp.left().iter().chain(bp.right().iter()).copied());
        let n = owner.len();
        Self {
            partner: (0..n as u32).collect(),
            owner,
            starts,
            left_vertices: Some(bp.left().len()),
            scratch: Vec::new(),
        }
    }

    /// Builds a pairing from an explicit partner map, checking that it is a
    /// fixed-point-free involution (and crosses sides when bipartite).
    pub fn from_partners(template: &Pairing, partner: Vec<u32>) -> Result<Self> {
        let n = template.owner.len();
        if partner.len() != n {
            return Err(Error::InvalidParameter("partner map has the wrong length"));
        }
        for (h, &p) in partner.iter().enumerate() {
            let p = p as usize;
            if p >= n || p == h || partner[p] as usize != h {
                return Err(Error::InvalidParameter("partner map is not a perfect matching"));
            }
        }
        let mut out = template.clone();
        out.partner = partner;
        if let Some(left) = out.left_vertices {
            let boundary = out.starts[left] as usize;
            if (0..boundary).any(|h| (out.partner[h] as usize) < boundary) {
                return Err(Error::InvalidParameter("bipartite pairing joins one side"));
            }
        }
        Ok(out)
    }

    /// Draws a uniform perfect matching in place.
    ///
    /// Position `i` of a working permutation holds an unmatched half-edge; it
    /// is joined to one drawn uniformly from positions `i+1..N`, which is
    /// swapped into `i+1`. Every one of the `(N-1)!!` matchings has the same
    /// probability.
    pub fn resample<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        debug_assert!(self.left_vertices.is_none());
        let n = self.owner.len();
        let perm = &mut self.scratch;
        perm.clear();
        perm.extend(0..n as u32);
        let mut i = 0;
        while i + 1 < n {
            let j = rng.random_range(i + 1..n);
            perm.swap(i + 1, j);
            let (a, b) = (perm[i], perm[i + 1]);
            self.partner[a as usize] = b;
            self.partner[b as usize] = a;
            i += 2;
        }
    }

    /// Draws a uniform bijection between left and right half-edges.
    pub fn resample_bipartite<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let left = self.left_vertices.expect("bipartite layout");
        let boundary = self.starts[left] as usize;
        let n = self.owner.len();
        let perm = &mut self.scratch;
        perm.clear();
        perm.extend(boundary as u32..n as u32);
        for i in (1..perm.len()).rev() {
            let j = rng.random_range(0..=i);
            perm.swap(i, j);
        }
        for (h, &r) in perm.iter().enumerate() {
            self.partner[h] = r;
            self.partner[r as usize] = h as u32;
        }
    }

    pub fn half_edges(&self) -> usize {
        self.owner.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.starts.len() - 1
    }

    /// Number of left-side vertices for bipartite pairings.
    pub fn left_vertices(&self) -> Option<usize> {
        self.left_vertices
    }

    pub fn partner(&self, half_edge: usize) -> usize {
        self.partner[half_edge] as usize
    }

    pub fn owner(&self, half_edge: usize) -> usize {
        self.owner[half_edge] as usize
    }

    pub fn partners(&self) -> &[u32] {
        &self.partner
    }

    pub(crate) fn partners_mut(&mut self) -> &mut [u32] {
        &mut self.partner
    }

    /// Index of the first right-side half-edge, for bipartite layouts.
    pub(crate) fn side_boundary(&self) -> Option<usize> {
        self.left_vertices.map(|l| self.starts[l] as usize)
    }

    /// Edges `(u, v)` with `u ≤ v`, one per matched pair, in half-edge order.
    /// Loops appear as `(u, u)` and parallel edges are repeated.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.partner
            .iter()
            .enumerate()
            .filter(|&(h, &p)| h < p as usize)
            .map(move |(h, &p)| {
                let u = self.owner[h] as usize;
                let v = self.owner[p as usize] as usize;
                (u.min(v), u.max(v))
            })
    }

    /// Vertex degrees of the induced multigraph (a loop counts twice).
    pub fn multigraph_degrees(&self) -> Vec<u32> {
        let mut deg = alloc::vec![0u32; self.vertex_count()];
        for (u, v) in self.edges() {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    /// `Z` without building the sparse maps. Allocation-free after warm-up.
    pub fn collision_count(&mut self) -> u64 {
        const SMALL: usize = 24;
        let mut z = 0u64;
        let nbrs = &mut self.scratch;
        let mut small = [0u32; SMALL];
        for v in 0..self.starts.len() - 1 {
            let (lo, hi) = (self.starts[v] as usize, self.starts[v + 1] as usize);
            if hi - lo < 2 {
                continue;
            }
            let mut loop_ends = 0u64;
            if hi - lo <= SMALL {
                let mut len = 0;
                for h in lo..hi {
                    let w = self.owner[self.partner[h] as usize];
                    loop_ends += u64::from(w as usize == v);
                    let ahead = w as usize > v;
                    let mut same = 0u64;
                    for &x in &small[..len] {
                        same += u64::from(x == w);
                    }
                    z += same * u64::from(ahead);
                    small[len] = w;
                    len += usize::from(ahead);
                }
                z += loop_ends / 2;
                continue;
            }
            nbrs.clear();
            for h in lo..hi {
                let w = self.owner[self.partner[h] as usize];
                if w as usize == v {
                    loop_ends += 1;
                } else if w as usize > v {
                    nbrs.push(w);
                }
            }
            z += loop_ends / 2;
            if nbrs.len() >= 2 {
                nbrs.sort_unstable();
                let mut run = 1u64;
                for k in 1..nbrs.len() {
                    if nbrs[k] == nbrs[k - 1] {
                        run += 1;
                    } else {
                        z += run * (run - 1) / 2;
                        run = 1;
                    }
                }
                z += run * (run - 1) / 2;
            }
        }
        z
    }

    /// Full collision statistics of the induced multigraph.
    pub fn collision_stats(&self) -> CollisionStats {
        let mut loops: BTreeMap<u32, u32> = BTreeMap::new();
        let mut multiplicities: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        for (u, v) in self.edges() {
            if u == v {
                *loops.entry(u as u32).or_insert(0) += 1;
            } else {
                *multiplicities.entry((u as u32, v as u32)).or_insert(0) += 1;
            }
        }
        let loop_total: u64 = loops.values().map(|&x| u64::from(x)).sum();
        let y_total: u64 = multiplicities
            .values()
            .map(|&x| u64::from(x) * u64::from(x.saturating_sub(1)) / 2)
            .sum();
        let z = loop_total + y_total;
        CollisionStats {
            loops,
            multiplicities,
            y_total,
            z,
            simple: z == 0,
        }
    }
}

/// Loop counts `X_i`, edge multiplicities `X_ij` (only pairs with
/// `X_ij ≥ 1` are stored), `Σ Y_ij` and `Z`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollisionStats {
    pub loops: BTreeMap<u32, u32>,
    pub multiplicities: BTreeMap<(u32, u32), u32>,
    pub y_total: u64,
    pub z: u64,
    pub simple: bool,
}

impl CollisionStats {
    pub fn loop_count(&self, vertex: u32) -> u32 {
        self.loops.get(&vertex).copied().unwrap_or(0)
    }

    pub fn multiplicity(&self, u: u32, v: u32) -> u32 {
        let key = (u.min(v), u.max(v));
        self.multiplicities.get(&key).copied().unwrap_or(0)
    }
}

/// One uniform pairing of the half-edges of `ds`.
pub fn sample_pairing<R: Rng + ?Sized>(ds: &DegreeSequence, rng: &mut R) -> Pairing {
    let mut p = Pairing::unpaired(ds);
    p.resample(rng);
    p
}

/// One uniform left/right bijection for a bipartite degree pair.
pub fn sample_bipartite_pairing<R: Rng + ?Sized>(
    bp: &BipartiteDegreePair,
    rng: &mut R,
) -> Pairing {
    let mut p = Pairing::unpaired_bipartite(bp);
    p.resample_bipartite(rng);
    p
}

/// Resamples until the multigraph is simple; returns the pairing and the
/// number of draws used. The induced simple graph is uniform among simple
/// graphs with these degrees.
pub fn rejection_sample_simple<R: Rng + ?Sized>(
    ds: &DegreeSequence,
    rng: &mut R,
    max_tries: u64,
) -> Result<(Pairing, u64)> {
    let mut p = Pairing::unpaired(ds);
    for tries in 1..=max_tries {
        p.resample(rng);
        if p.collision_count() == 0 {
            return Ok((p, tries));
        }
    }
    Err(Error::Exhausted { tries: max_tries })
}

/// `10 · ⌈1 / p⌉`, never below 1000.
pub fn default_max_tries(predicted_prob_simple: f64) -> u64 {
    if !(predicted_prob_simple > 0.0) {
        return u64::MAX;
    }
    let t = libm::ceil(1.0 / predicted_prob_simple);
    if t >= (u64::MAX / 10) as f64 {
        u64::MAX
    } else {
        (10 * t as u64).max(1000)
    }
}
