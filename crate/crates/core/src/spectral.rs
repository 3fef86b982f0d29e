//! Expansion measurements on regular graphs.
//!
//! Everything here is a pure function of an immutable [`Graph`]. The
//! exhaustive routines carry explicit size guards so they never run away.

use std::collections::BinaryHeap;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, VertexSet};
use crate::rng::{derive_seed, CounterRng};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 100_000;
/// Largest vertex count accepted by [`conductance_exact`].
pub const CONDUCTANCE_MAX_N: usize = 24;
/// Enumeration budget shared by the exhaustive routines.
pub const EXHAUSTIVE_LIMIT: u64 = 1 << 24;
/// Default constant in the Phase I imbalance threshold `K * alpha`.
pub const DEFAULT_K: f64 = 20.0;
/// Largest density for which the Phase II contraction factor is defined.
pub const ALPHA_MAX: f64 = 0.3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("graph is disconnected")]
    Disconnected,
    #[error("power iteration did not converge (residual {})", .0.residual)]
    NotConverged(SpectralReport),
    #[error("n = {n} exceeds the exhaustive limit {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("{count} candidate sets exceed the exhaustive budget")]
    TooLargeForExhaustive { count: u64 },
    #[error("{name} = {value} is out of range")]
    OutOfRange { name: &'static str, value: f64 },
}

/// Extreme non-trivial eigenvalues of the transition matrix `P = A/d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub lambda2: f64,
    #[serde(rename = "lambdaN")]
    pub lambda_n: f64,
    #[serde(rename = "lambdaG")]
    pub lambda_g: f64,
    pub iterations: usize,
    pub residual: f64,
}

fn apply_p(g: &Graph, x: &[f64], out: &mut [f64]) {
    let inv_d = 1.0 / g.d() as f64;
    for (v, o) in out.iter_mut().enumerate() {
        *o = g.neighbors(v).iter().map(|&u| x[u as usize]).sum::<f64>() * inv_d;
    }
}

fn center(x: &mut [f64]) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= mean);
}

fn normalize(x: &mut [f64]) -> f64 {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
    norm
}

/// Dominant eigenpair of `x -> a*x + b*Px` on the mean-zero subspace.
/// Converged when successive Rayleigh quotients differ by less than `tol`
/// and the eigen-residual is at most `sqrt(tol)`.
fn power_iterate(g: &Graph, a: f64, b: f64, tol: f64, max_iter: usize) -> (f64, usize, f64, bool) {
    let n = g.n();
    let mut rng = CounterRng::from_seed(0x0005_eed0_fa11);
    let mut x: Vec<f64> = (0..n).map(|_| (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5).collect();
    center(&mut x);
    normalize(&mut x);
    let mut px = vec![0.0; n];
    let mut rho = f64::NAN;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        apply_p(g, &x, &mut px);
        let mut y: Vec<f64> = x.iter().zip(&px).map(|(xi, pi)| a * xi + b * pi).collect();
        let next_rho: f64 = x.iter().zip(&y).map(|(xi, yi)| xi * yi).sum();
        residual = x.iter().zip(&y).map(|(xi, yi)| (yi - next_rho * xi).powi(2)).sum::<f64>().sqrt();
        let delta = (next_rho - rho).abs();
        rho = next_rho;
        if delta < tol && residual <= tol.sqrt() {
            return (rho, it, residual, true);
        }
        center(&mut y);
        if normalize(&mut y) == 0.0 {
            // x was in the kernel of the map; its eigenvalue is 0.
            return (0.0, it, 0.0, true);
        }
        x = y;
    }
    (rho, max_iter, residual, false)
}

/// `lambda2` from the lazy walk `(I + P)/2`, `lambda_n` from `I - P`.
pub fn second_eigenvalue(g: &Graph, tol: f64, max_iter: usize) -> Result<SpectralReport, SpectralError> {
    if !g.is_connected() {
        return Err(SpectralError::Disconnected);
    }
    if g.n() < 2 {
        return Err(SpectralError::OutOfRange { name: "n", value: g.n() as f64 });
    }
    let (mu, it1, r1, ok1) = power_iterate(g, 0.5, 0.5, tol, max_iter);
    let (nu, it2, r2, ok2) = power_iterate(g, 1.0, -1.0, tol, max_iter);
    let lambda2 = (2.0 * mu - 1.0).clamp(-1.0, 1.0);
    let lambda_n = (1.0 - nu).clamp(-1.0, 1.0).min(lambda2);
    let report = SpectralReport {
        lambda2,
        lambda_n,
        lambda_g: lambda2.abs().max(lambda_n.abs()),
        iterations: it1 + it2,
        residual: (2.0 * r1).max(r2),
    };
    if ok1 && ok2 {
        Ok(report)
    } else {
        Err(SpectralError::NotConverged(report))
    }
}

/// `Phi = min_S n E(S, S^c) / (d |S| |S^c|)` over all nonempty proper subsets.
pub fn conductance_exact(g: &Graph) -> Result<f64, SpectralError> {
    let n = g.n();
    if n > CONDUCTANCE_MAX_N {
        return Err(SpectralError::TooLarge { n, limit: CONDUCTANCE_MAX_N });
    }
    if n < 2 {
        return Err(SpectralError::OutOfRange { name: "n", value: n as f64 });
    }
    let d = g.d() as i64;
    let self_slots: Vec<i64> =
        (0..n).map(|v| g.neighbors(v).iter().filter(|&&u| u as usize == v).count() as i64).collect();
    // Gray-code walk; the cut changes by a local amount per toggled vertex.
    let mut mask = 0u32;
    let mut size = 0usize;
    let mut cut = 0i64;
    let mut best = f64::INFINITY;
    for i in 1u32..(1 << n) {
        let v = i.trailing_zeros() as usize;
        let into: i64 = g
            .neighbors(v)
            .iter()
            .filter(|&&u| u as usize != v && mask >> u & 1 == 1)
            .count() as i64;
        if mask >> v & 1 == 0 {
            cut += d - 2 * into - self_slots[v];
            size += 1;
        } else {
            cut -= d - 2 * into - self_slots[v];
            size -= 1;
        }
        mask ^= 1 << v;
        if size > 0 && size < n {
            let phi = (n as f64 * cut as f64) / (d as f64 * size as f64 * (n - size) as f64);
            best = best.min(phi);
        }
    }
    Ok(best)
}

/// Signed mixing error `E(X, Y) - d|X||Y|/n`.
pub fn mixing_deviation(g: &Graph, x: &VertexSet, y: &VertexSet) -> Result<f64, crate::graph::GraphError> {
    let e = g.edge_count_between(x, y)? as f64;
    Ok(e - g.d() as f64 * x.len() as f64 * y.len() as f64 / g.n() as f64)
}

/// Outcome of checking `|E(X,Y) - dXY/n| <= alpha d sqrt(XY)` over many pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    /// Smallest alpha for which every tested pair above alpha's own size floor passes.
    pub alpha_required: f64,
    pub pairs_tested: u64,
    /// `(|X|, |Y|)` of the pair that determines `alpha_required`.
    pub worst_pair: (usize, usize),
    /// Its normalized deviation `|E - dXY/n| / (d sqrt(XY))`.
    pub worst_deviation: f64,
    pub exhaustive: bool,
}

/// Per-|X| maximum normalized deviation, with the witnessing |Y|.
#[derive(Clone)]
struct DeviationTable {
    best: Vec<(f64, usize)>,
    pairs: u64,
}

impl DeviationTable {
    fn new(n: usize) -> Self {
        Self { best: vec![(f64::NEG_INFINITY, 0); n + 1], pairs: 0 }
    }

    #[inline]
    fn record(&mut self, xs: usize, ys: usize, dev: f64) {
        self.pairs += 1;
        if dev > self.best[xs].0 {
            self.best[xs] = (dev, ys);
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.pairs += other.pairs;
        for (a, b) in self.best.iter_mut().zip(other.best) {
            if b.0 > a.0 {
                *a = b;
            }
        }
        self
    }

    /// Resolves the size floor `|X| >= (2/3) alpha c^{3/2} n`: the answer is
    /// `min_s max(M(s), (s-1)/k)` where `M(s)` is the worst deviation over
    /// pairs with `|X| >= s` and `k = (2/3) c^{3/2} n`.
    fn resolve(&self, n: usize, c: f64, exhaustive: bool) -> MixingReport {
        let k = (2.0 / 3.0) * c.powf(1.5) * n as f64;
        let mut suffix = (0.0f64, (0usize, 0usize));
        let mut best = (f64::INFINITY, 0.0, (0, 0));
        for s in (1..self.best.len()).rev() {
            let (dev, ys) = self.best[s];
            if dev > suffix.0 {
                suffix = (dev, (s, ys));
            }
            let alpha = suffix.0.max((s - 1) as f64 / k);
            if alpha <= best.0 {
                best = (alpha, suffix.0, suffix.1);
            }
        }
        MixingReport {
            alpha_required: best.0.max(0.0),
            pairs_tested: self.pairs,
            worst_pair: best.2,
            worst_deviation: best.1,
            exhaustive,
        }
    }
}

fn normalized(d: usize, n: usize, e: f64, xs: usize, ys: usize) -> f64 {
    let (x, y) = (xs as f64, ys as f64);
    (e - d as f64 * x * y / n as f64).abs() / (d as f64 * (x * y).sqrt())
}

fn mixing_exhaustive(g: &Graph, y_min: usize) -> DeviationTable {
    let n = g.n();
    let nbr_masks: Vec<Vec<u32>> = (0..n).map(|v| g.neighbors(v).to_vec()).collect();
    let full = (1u32 << n) - 1;
    (1u32..=full)
        .into_par_iter()
        .filter(|y| y.count_ones() as usize >= y_min && (y.count_ones() as usize) < n)
        .fold(
            || DeviationTable::new(n),
            |mut table, y| {
                let into_y: Vec<u32> = nbr_masks
                    .iter()
                    .map(|list| list.iter().filter(|&&u| y >> u & 1 == 1).count() as u32)
                    .collect();
                let rest = full & !y;
                let ys = y.count_ones() as usize;
                let mut x = rest;
                while x != 0 {
                    let mut e = 0u32;
                    let mut bits = x;
                    while bits != 0 {
                        e += into_y[bits.trailing_zeros() as usize];
                        bits &= bits - 1;
                    }
                    let xs = x.count_ones() as usize;
                    table.record(xs, ys, normalized(g.d(), n, e as f64, xs, ys));
                    x = (x - 1) & rest;
                }
                table
            },
        )
        .reduce(|| DeviationTable::new(n), DeviationTable::merge)
}

const MIXING_CHUNKS: u64 = 64;

fn mixing_sampled(g: &Graph, y_min: usize, budget: u64, seed: u64) -> DeviationTable {
    let n = g.n();
    let sampled = (0..MIXING_CHUNKS)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, chunk]));
            let quota = budget / MIXING_CHUNKS + u64::from(chunk < budget % MIXING_CHUNKS);
            let mut table = DeviationTable::new(n);
            let mut perm: Vec<usize> = (0..n).collect();
            let mut in_y = vec![false; n];
            for _ in 0..quota {
                let ys = rng.random_range(y_min..n);
                let xs = rng.random_range(1..=n - ys);
                let (chosen, _) = perm.partial_shuffle(&mut rng, xs + ys);
                for &v in &chosen[..ys] {
                    in_y[v] = true;
                }
                let e: usize = chosen[ys..]
                    .iter()
                    .map(|&v| g.neighbors(v).iter().filter(|&&u| in_y[u as usize]).count())
                    .sum();
                for &v in &chosen[..ys] {
                    in_y[v] = false;
                }
                table.record(xs, ys, normalized(g.d(), n, e as f64, xs, ys));
            }
            table
        })
        .reduce(|| DeviationTable::new(n), DeviationTable::merge);

    // BFS balls against their complements, every prefix size.
    let roots = n.min(8);
    let structured = (0..roots)
        .map(|i| {
            let root = (derive_seed(&[seed, u64::MAX, i as u64]) % n as u64) as usize;
            let order = g.bfs_order(root);
            let mut table = DeviationTable::new(n);
            let mut inside = vec![false; n];
            let mut cut = 0i64;
            for (s, &v) in order.iter().enumerate() {
                let into = g.neighbors(v).iter().filter(|&&u| inside[u as usize] && u as usize != v).count() as i64;
                let loops = g.neighbors(v).iter().filter(|&&u| u as usize == v).count() as i64;
                cut += g.d() as i64 - 2 * into - loops;
                inside[v] = true;
                let xs = s + 1;
                let ys = n - xs;
                if ys >= y_min && ys > 0 {
                    table.record(xs, ys, normalized(g.d(), n, cut as f64, xs, ys));
                }
            }
            table
        })
        .fold(DeviationTable::new(n), DeviationTable::merge);
    sampled.merge(structured)
}

/// Tests the mixing inequality over disjoint pairs with `|Y| >= cn`.
/// Exhaustive when `3^n <= 2^24`, otherwise `pair_budget` random pairs plus
/// BFS balls against their complements.
pub fn verify_mixing(g: &Graph, c: f64, pair_budget: u64, seed: u64) -> Result<MixingReport, SpectralError> {
    if !(c > 0.0 && c <= 0.5) {
        return Err(SpectralError::OutOfRange { name: "c", value: c });
    }
    let n = g.n();
    let y_min = ((c * n as f64).ceil() as usize).max(1);
    let exhaustive = 3f64.powi(n as i32) <= EXHAUSTIVE_LIMIT as f64;
    let table = if exhaustive { mixing_exhaustive(g, y_min) } else { mixing_sampled(g, y_min, pair_budget, seed) };
    Ok(table.resolve(n, c, exhaustive))
}

/// `alpha = sqrt(24 ln(e/c) / d + (d/n)(160/c))`, the mixing level a random
/// d-regular graph satisfies with high probability for pairs with `|Y| >= cn`.
pub fn alpha_random_regular(n: usize, d: usize, c: f64) -> Result<f64, SpectralError> {
    if !(c > 0.0 && c < 0.5) {
        return Err(SpectralError::OutOfRange { name: "c", value: c });
    }
    let (n, d) = (n as f64, d as f64);
    Ok((24.0 * (std::f64::consts::E / c).ln() / d + d / n * (160.0 / c)).sqrt())
}

/// Per-round Phase II contraction `gamma(alpha) = (1 - 2 alpha)(1 - 3 alpha) / 2`.
pub fn gamma_of_alpha(alpha: f64) -> Result<f64, SpectralError> {
    if !(alpha > 0.0 && alpha <= ALPHA_MAX) {
        return Err(SpectralError::OutOfRange { name: "alpha", value: alpha });
    }
    Ok(0.5 * (1.0 - 2.0 * alpha) * (1.0 - 3.0 * alpha))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensestMode {
    Exhaustive,
    Greedy,
}

/// A dense small set and its density `beta = |E(S)| / (d |S|)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseSet {
    pub set: VertexSet,
    pub beta: f64,
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Orders vertices by greedy growth from `start`: always add the candidate
/// with the most neighbor slots into the set, breaking ties by slots into the
/// set's closed neighborhood, then by `priority`.
pub(crate) fn grow_dense(g: &Graph, start: usize, limit: usize, priority: &[u64]) -> Vec<usize> {
    let n = g.n();
    let limit = limit.min(n);
    let mut in_set = vec![false; n];
    let mut closed = vec![false; n];
    let mut s1 = vec![0u32; n];
    let mut s2 = vec![0u32; n];
    let mut heap: BinaryHeap<(u32, u32, u64, u32)> = BinaryHeap::new();
    let mut order = Vec::with_capacity(limit);
    let mut next_fresh = 0usize;
    let mut pending = Some(start);

    let close = |x: usize, closed: &mut [bool], s2: &mut [u32], heap: &mut BinaryHeap<_>, s1: &[u32], in_set: &[bool]| {
        if !closed[x] {
            closed[x] = true;
            for &w in g.neighbors(x) {
                let w = w as usize;
                s2[w] += 1;
                if !in_set[w] {
                    heap.push((s1[w], s2[w], priority[w], w as u32));
                }
            }
        }
    };

    while order.len() < limit {
        let v = match pending.take() {
            Some(v) => v,
            None => loop {
                match heap.pop() {
                    Some((a, b, _, w)) => {
                        let w = w as usize;
                        if !in_set[w] && s1[w] == a && s2[w] == b {
                            break w;
                        }
                    }
                    None => {
                        while in_set[next_fresh] {
                            next_fresh += 1;
                        }
                        break next_fresh;
                    }
                }
            },
        };
        in_set[v] = true;
        order.push(v);
        for &u in g.neighbors(v) {
            let u = u as usize;
            s1[u] += 1;
            if !in_set[u] {
                heap.push((s1[u], s2[u], priority[u], u as u32));
            }
        }
        close(v, &mut closed, &mut s2, &mut heap, &s1, &in_set);
        for &u in g.neighbors(v) {
            close(u as usize, &mut closed, &mut s2, &mut heap, &s1, &in_set);
        }
    }
    order
}

/// Internal edges of each prefix of `order`.
fn prefix_internal_edges(g: &Graph, order: &[usize]) -> Vec<usize> {
    let mut inside = vec![false; g.n()];
    let mut edges = 0usize;
    let mut twice = 0usize;
    order
        .iter()
        .map(|&v| {
            inside[v] = true;
            // slots from v into the set, counting self-loops twice
            twice += 2 * g.neighbors(v).iter().filter(|&&u| inside[u as usize] && u as usize != v).count()
                + g.neighbors(v).iter().filter(|&&u| u as usize == v).count();
            edges = twice / 2;
            edges
        })
        .collect()
}

/// Slots from `v` into `mask`, excluding `skip`; self-loops count once per loop.
fn gain(g: &Graph, v: usize, mask: &[bool], skip: usize) -> i64 {
    let mut loops = 0;
    let mut into = 0;
    for &u in g.neighbors(v) {
        let u = u as usize;
        if u == v {
            loops += 1;
        } else if u != skip && mask[u] {
            into += 1;
        }
    }
    into + loops / 2
}

const STEEPEST_ROUNDS: usize = 64;

/// Repeatedly swaps the weakest member for the strongest outsider while that helps.
fn steepest_swaps(g: &Graph, mask: &mut [bool], members: &mut [usize], mut internal: usize, rounds: usize) -> usize {
    let n = g.n();
    // slots[v]: neighbor slots of v (self-loops excluded) inside the set
    let mut slots = vec![0i64; n];
    for &v in members.iter() {
        for &u in g.neighbors(v) {
            if u as usize != v {
                slots[u as usize] += 1;
            }
        }
    }
    for _ in 0..rounds {
        let (i, u) = match members.iter().enumerate().min_by_key(|&(_, &u)| (slots[u], u)) {
            Some((i, &u)) => (i, u),
            None => break,
        };
        let w = match (0..n).filter(|&w| !mask[w]).max_by_key(|&w| (slots[w], std::cmp::Reverse(w))) {
            Some(w) => w,
            None => break,
        };
        let lose = gain(g, u, mask, u);
        let win = gain(g, w, mask, u);
        if win <= lose {
            break;
        }
        mask[u] = false;
        mask[w] = true;
        members[i] = w;
        internal = (internal as i64 - lose + win) as usize;
        for &x in g.neighbors(u) {
            if x as usize != u {
                slots[x as usize] -= 1;
            }
        }
        for &x in g.neighbors(w) {
            if x as usize != w {
                slots[x as usize] += 1;
            }
        }
    }
    internal
}

/// Swap refinement at fixed size. Returns the final internal edge count.
pub(crate) fn refine_by_swaps(g: &Graph, mask: &mut [bool], members: &mut [usize], attempts: usize, rng: &mut impl Rng) -> usize {
    let mut internal = {
        let set = VertexSet::from_mask(mask.to_vec());
        g.internal_edge_count(&set)
    };
    if members.is_empty() || members.len() == g.n() {
        return internal;
    }
    internal = steepest_swaps(g, mask, members, internal, STEEPEST_ROUNDS);
    for _ in 0..attempts {
        let i = rng.random_range(0..members.len());
        let u = members[i];
        // candidate: a neighbor of a random member, outside the set
        let anchor = members[rng.random_range(0..members.len())];
        let w = g.neighbors(anchor)[rng.random_range(0..g.d())] as usize;
        if mask[w] {
            continue;
        }
        let lose = gain(g, u, mask, u);
        let win = gain(g, w, mask, u);
        if win > lose {
            mask[u] = false;
            mask[w] = true;
            members[i] = w;
            internal = (internal as i64 - lose + win) as usize;
        }
    }
    internal
}

/// Greedy density profile: `profile[s]` is the best `beta` found over sets of
/// size at most `s` (entry 0 is 0). Each restart grows a set from a random
/// vertex; the densest prefix is then improved by swaps.
pub fn greedy_density_profile(g: &Graph, max_size: usize, restarts: usize, seed: u64) -> (Vec<f64>, DenseSet) {
    let n = g.n();
    let max_size = max_size.min(n).max(1);
    let d = g.d() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut profile = vec![0.0; max_size + 1];
    let mut best = DenseSet { set: VertexSet::empty(n), beta: -1.0 };
    for _ in 0..restarts.max(1) {
        let priority: Vec<u64> = (0..n).map(|_| rng.next_u64()).collect();
        let start = rng.random_range(0..n);
        let order = grow_dense(g, start, max_size, &priority);
        let internal = prefix_internal_edges(g, &order);
        let mut top = (0usize, -1.0f64);
        for (i, &e) in internal.iter().enumerate() {
            let beta = e as f64 / (d * (i + 1) as f64);
            if beta > profile[i + 1] {
                profile[i + 1] = beta;
            }
            if beta > top.1 {
                top = (i + 1, beta);
            }
        }
        let mut members = order[..top.0].to_vec();
        let mut mask = vec![false; n];
        members.iter().for_each(|&v| mask[v] = true);
        let internal = refine_by_swaps(g, &mut mask, &mut members, n, &mut rng);
        let beta = internal as f64 / (d * top.0 as f64);
        if beta > profile[top.0] {
            profile[top.0] = beta;
        }
        if beta > best.beta {
            best = DenseSet { set: VertexSet::from_mask(mask), beta };
        }
    }
    for s in 1..profile.len() {
        profile[s] = profile[s].max(profile[s - 1]);
    }
    (profile, best)
}

fn densest_exhaustive(g: &Graph, max_size: usize) -> DenseSet {
    let n = g.n();
    let d = g.d() as f64;
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut stack = Vec::with_capacity(max_size);
    let mut mask = vec![false; n];

    fn dfs(
        g: &Graph,
        from: usize,
        internal: usize,
        max_size: usize,
        d: f64,
        stack: &mut Vec<usize>,
        mask: &mut [bool],
        best: &mut (f64, Vec<usize>),
    ) {
        for v in from..g.n() {
            let add = gain(g, v, mask, usize::MAX) as usize;
            let e = internal + add;
            mask[v] = true;
            stack.push(v);
            let beta = e as f64 / (d * stack.len() as f64);
            if beta > best.0 {
                *best = (beta, stack.clone());
            }
            if stack.len() < max_size {
                dfs(g, v + 1, e, max_size, d, stack, mask, best);
            }
            stack.pop();
            mask[v] = false;
        }
    }
    dfs(g, 0, 0, max_size, d, &mut stack, &mut mask, &mut best);
    DenseSet { set: VertexSet::new(n, best.1).expect("ids in range"), beta: best.0 }
}

/// The set of size at most `max_size` maximizing `|E(S)| / (d|S|)`.
/// Greedy mode returns a lower bound on the true maximum.
pub fn densest_small_set(g: &Graph, max_size: usize, mode: DensestMode, seed: u64) -> Result<DenseSet, SpectralError> {
    if max_size == 0 {
        return Err(SpectralError::OutOfRange { name: "max_size", value: 0.0 });
    }
    let max_size = max_size.min(g.n());
    match mode {
        DensestMode::Exhaustive => {
            let count: u64 = (1..=max_size as u64).map(|k| binomial(g.n() as u64, k)).fold(0, u64::saturating_add);
            if count > EXHAUSTIVE_LIMIT {
                return Err(SpectralError::TooLargeForExhaustive { count });
            }
            Ok(densest_exhaustive(g, max_size))
        }
        DensestMode::Greedy => Ok(greedy_density_profile(g, max_size, 8, seed).1),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GraphKind {
    RandomRegular,
    Expander { lambda: f64 },
}

/// Thresholds separating the three phases of a two-sample run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseParams {
    /// Phase I ends once `B <= c n`.
    pub c: f64,
    pub alpha: f64,
    pub gamma: f64,
    /// Phase II ends once `B <= omega`.
    pub omega: usize,
    /// `K * alpha`: Phase I guarantees need `nu0` at least this.
    pub nu0_threshold: f64,
    pub k: f64,
}

impl PhaseParams {
    /// Whether the Phase I imbalance condition holds for `nu0`. A threshold at
    /// or above 1 can never be met.
    pub fn phase_one_condition_met(&self, nu0: f64) -> bool {
        self.nu0_threshold < 1.0 && nu0 >= self.nu0_threshold
    }
}

/// `ceil(ln n / ln ln n)`, at least 1.
pub fn omega(n: usize) -> usize {
    let ln = (n as f64).ln();
    let lnln = ln.ln();
    if lnln <= 0.0 {
        return 1;
    }
    ((ln / lnln).ceil() as usize).clamp(1, n.max(1))
}

/// `2 sqrt(d-1) / d`, the typical `lambda_G` of a random d-regular graph.
pub fn friedman_lambda(d: usize) -> f64 {
    2.0 * ((d as f64) - 1.0).max(0.0).sqrt() / d as f64
}

/// Fills in phase thresholds. Expanders use `c = 1/10` and `alpha = lambda`.
/// Random regular graphs take `c = (3/13)(3/5 - lambda)` with the typical
/// `lambda`, or `1/65` for `d >= 600` or when that is not positive.
pub fn phase_params(n: usize, d: usize, kind: GraphKind, c_override: Option<f64>, k: Option<f64>) -> Result<PhaseParams, SpectralError> {
    let k = k.unwrap_or(DEFAULT_K);
    let (c, alpha) = match kind {
        GraphKind::Expander { lambda } => (c_override.unwrap_or(0.1), lambda),
        GraphKind::RandomRegular => {
            let c = c_override.unwrap_or_else(|| {
                let lambda = friedman_lambda(d);
                if d >= 600 || lambda >= 0.6 {
                    1.0 / 65.0
                } else {
                    3.0 / 13.0 * (0.6 - lambda)
                }
            });
            (c, alpha_random_regular(n, d, c)?)
        }
    };
    if !(c > 0.0 && c < 0.5) {
        return Err(SpectralError::OutOfRange { name: "c", value: c });
    }
    let gamma = if alpha <= 0.0 { 0.5 } else { gamma_of_alpha(alpha.min(ALPHA_MAX))? };
    Ok(PhaseParams { c, alpha, gamma, omega: omega(n), nu0_threshold: k * alpha, k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_clustered, gen_complete, gen_cycle, gen_hypercube, gen_random_regular, SimpleMode};

    fn spectrum(g: &Graph) -> SpectralReport {
        second_eigenvalue(g, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap()
    }

    #[test]
    fn closed_form_spectra() {
        let k5 = spectrum(&gen_complete(5).unwrap());
        assert!((k5.lambda2 + 0.25).abs() < 1e-6 && (k5.lambda_n + 0.25).abs() < 1e-6);
        assert!((k5.lambda_g - 0.25).abs() < 1e-6);
        let q4 = spectrum(&gen_hypercube(4).unwrap());
        assert!((q4.lambda2 - 0.5).abs() < 1e-6, "{q4:?}");
        assert!((q4.lambda_n + 1.0).abs() < 1e-6 && (q4.lambda_g - 1.0).abs() < 1e-6);
        let c8 = spectrum(&gen_cycle(8).unwrap());
        assert!((c8.lambda2 - (std::f64::consts::PI / 4.0).cos()).abs() < 1e-6);
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let two_triangles = Graph::from_edges(6, 2, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]).unwrap();
        assert_eq!(second_eigenvalue(&two_triangles, 1e-8, 100), Err(SpectralError::Disconnected));
        assert_eq!(conductance_exact(&two_triangles).unwrap(), 0.0);
    }

    #[test]
    fn exact_conductance_small_graphs() {
        assert!((conductance_exact(&gen_complete(4).unwrap()).unwrap() - 4.0 / 3.0).abs() < 1e-12);
        assert!((conductance_exact(&gen_cycle(6).unwrap()).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        let big = gen_random_regular(26, 3, 1, SimpleMode::AllowMulti).unwrap();
        assert!(matches!(conductance_exact(&big), Err(SpectralError::TooLarge { .. })));
    }

    #[test]
    fn gamma_values() {
        assert!((gamma_of_alpha(0.3).unwrap() - 0.02).abs() < 1e-12);
        assert!((gamma_of_alpha(1.0 / 12.0).unwrap() - 0.3125).abs() < 1e-12);
        assert!((gamma_of_alpha(1e-9).unwrap() - 0.5).abs() < 1e-8);
        assert!(gamma_of_alpha(0.31).is_err());
        assert!(gamma_of_alpha(0.0).is_err());
    }

    #[test]
    fn alpha_formula() {
        let a = alpha_random_regular(10_000, 100, 0.1).unwrap();
        let direct = (24.0 * (10.0f64 * std::f64::consts::E).ln() / 100.0 + 16.0).sqrt();
        assert!((a - direct).abs() < 1e-12);
        assert!((a - 4.0979).abs() < 1e-4);
        // d = sqrt(n): both terms scale as n^-1/2, so alpha * n^1/4 is constant
        let constant = (24.0 * (10.0f64 * std::f64::consts::E).ln() + 1600.0).sqrt();
        for n in [1e4, 1e6, 1e8] {
            let d = (n as f64).sqrt() as usize;
            let ratio = alpha_random_regular(n as usize, d, 0.1).unwrap() / (n as f64).powf(-0.25);
            assert!((ratio / constant - 1.0).abs() < 1e-9);
        }
        // d -> infinity with d = o(n): dominated by sqrt(160 d / (c n))
        let (n, d) = (1usize << 50, 1usize << 30);
        let lead = (160.0 * d as f64 / (0.1 * n as f64)).sqrt();
        assert!((alpha_random_regular(n, d, 0.1).unwrap() / lead - 1.0).abs() < 1e-3);
        assert!(alpha_random_regular(100, 4, 0.5).is_err());
    }

    #[test]
    fn omega_rounds_up() {
        assert_eq!(omega(1_000_000), 6);
        assert_eq!(omega(10_000), 5);
    }

    #[test]
    fn phase_params_kinds() {
        let e = phase_params(1000, 10, GraphKind::Expander { lambda: 0.2 }, None, None).unwrap();
        assert_eq!(e.c, 0.1);
        assert_eq!(e.alpha, 0.2);
        assert!((e.gamma - gamma_of_alpha(0.2).unwrap()).abs() < 1e-15);
        assert!((e.nu0_threshold - 4.0).abs() < 1e-12);
        assert!(!e.phase_one_condition_met(0.9));
        let r = phase_params(1 << 14, 16, GraphKind::RandomRegular, None, Some(0.1)).unwrap();
        let lam = friedman_lambda(16);
        assert!((r.c - 3.0 / 13.0 * (0.6 - lam)).abs() < 1e-15);
        assert_eq!(r.gamma, gamma_of_alpha(0.3).unwrap()); // alpha is vacuous at this size
        let big_d = phase_params(1 << 30, 700, GraphKind::RandomRegular, None, None).unwrap();
        assert_eq!(big_d.c, 1.0 / 65.0);
    }

    #[test]
    fn mixing_on_complete_graph() {
        let n = 7;
        let g = gen_complete(n).unwrap();
        for (x, y) in [(vec![0], vec![1, 2]), (vec![0, 3, 4], vec![1, 2, 6])] {
            let (x, y) = (VertexSet::new(n, x).unwrap(), VertexSet::new(n, y).unwrap());
            let dev = mixing_deviation(&g, &x, &y).unwrap();
            assert!((dev - (x.len() * y.len()) as f64 / n as f64).abs() < 1e-12);
        }
        let report = verify_mixing(&g, 0.25, 0, 0).unwrap();
        assert!(report.exhaustive);
        assert_eq!(report.pairs_tested, (3u64.pow(7) - 2 * 2u64.pow(7) + 1) - pairs_with_small_y(7, 2));
        assert!(report.alpha_required < 1.0);
    }

    /// Ordered disjoint nonempty pairs with |Y| < y_min.
    fn pairs_with_small_y(n: u32, y_min: u32) -> u64 {
        (1..y_min)
            .map(|ys| binomial(n as u64, ys as u64) * (2u64.pow(n - ys) - 1))
            .sum()
    }

    #[test]
    fn mixing_resolution_against_brute_force() {
        let g = gen_hypercube(3).unwrap();
        let c = 0.25;
        let report = verify_mixing(&g, c, 0, 0).unwrap();
        // brute force: smallest alpha on a fine grid passing all pairs above its own floor
        let n = 8usize;
        let mut pairs = Vec::new();
        for code in 0..3u32.pow(8) {
            let (mut x, mut y, mut t) = (vec![], vec![], code);
            for v in 0..n {
                match t % 3 {
                    1 => x.push(v),
                    2 => y.push(v),
                    _ => {}
                }
                t /= 3;
            }
            if x.is_empty() || y.len() < 2 {
                continue;
            }
            let (xs, ys) = (VertexSet::new(n, x).unwrap(), VertexSet::new(n, y).unwrap());
            let dev = mixing_deviation(&g, &xs, &ys).unwrap().abs() / (3.0 * ((xs.len() * ys.len()) as f64).sqrt());
            pairs.push((xs.len(), dev));
        }
        let k = 2.0 / 3.0 * c.powf(1.5) * n as f64;
        let passes = |a: f64| pairs.iter().all(|&(xs, dev)| (xs as f64) < a * k || dev <= a + 1e-12);
        let grid_min = (0..=200_000).map(|i| i as f64 * 1e-5).find(|&a| passes(a)).unwrap();
        assert!((report.alpha_required - grid_min).abs() <= 1e-5 + 1e-9, "{report:?} vs {grid_min}");
        assert_eq!(report.pairs_tested as usize, pairs.len());
    }

    #[test]
    fn sampled_mixing_is_thread_independent() {
        let g = gen_random_regular(40, 4, 3, SimpleMode::RejectSimple).unwrap();
        let a = verify_mixing(&g, 0.2, 5_000, 11).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| verify_mixing(&g, 0.2, 5_000, 11).unwrap());
        assert_eq!(a, b);
        assert!(!a.exhaustive);
    }

    #[test]
    fn densest_examples() {
        let k4 = gen_complete(4).unwrap();
        let best = densest_small_set(&k4, 3, DensestMode::Exhaustive, 0).unwrap();
        assert!((best.beta - 1.0 / 3.0).abs() < 1e-12);
        let c10 = gen_cycle(10).unwrap();
        for s in 1..=6 {
            let best = densest_small_set(&c10, s, DensestMode::Exhaustive, 0).unwrap();
            assert!((best.beta - (s as f64 - 1.0) / (2.0 * s as f64)).abs() < 1e-12);
        }
        let g = gen_clustered(600, 30, 7).unwrap();
        let found = densest_small_set(&g, 6, DensestMode::Greedy, 1).unwrap();
        assert!(found.beta >= 15.0 / 180.0 - 1e-12, "{}", found.beta);
        let big = gen_random_regular(100, 3, 0, SimpleMode::AllowMulti).unwrap();
        assert!(matches!(
            densest_small_set(&big, 10, DensestMode::Exhaustive, 0),
            Err(SpectralError::TooLargeForExhaustive { .. })
        ));
    }

    #[test]
    fn exhaustive_dominates_greedy() {
        for seed in 0..5 {
            let g = gen_random_regular(14, 4, seed, SimpleMode::AllowMulti).unwrap();
            let ex = densest_small_set(&g, 5, DensestMode::Exhaustive, 0).unwrap();
            let gr = densest_small_set(&g, 5, DensestMode::Greedy, seed).unwrap();
            assert!(ex.beta + 1e-12 >= gr.beta);
            assert!(gr.set.len() <= 5 && !gr.set.is_empty());
            assert!((g.internal_edge_count(&gr.set) as f64 / (4.0 * gr.set.len() as f64) - gr.beta).abs() < 1e-12);
        }
    }
}
