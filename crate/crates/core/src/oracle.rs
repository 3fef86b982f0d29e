//! Exact absorption probabilities and completion times.
//!
//! Two chains are provided: the full chain over all `2^n` opinion assignments
//! of a small graph (state index = B bitmask, bit `v` set when `v` holds B),
//! and the lumped chain of the complete graph indexed by the B-count.
//!
//! Some protocols on some graphs never absorb from certain states (e.g. the
//! alternating state of an even cycle flips back and forth forever). Such
//! states get `win_prob_A = 0` and infinite expected rounds; states that
//! absorb with probability below one also get infinite expected rounds.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::graph::{Graph, VertexSet};
use crate::voting::{flip_probability, ProtocolSpec, VotingError};

pub const FULL_MAX_N: usize = 10;
pub const COMPLETE_MAX_N: usize = 10_000;
pub const RESIDUAL_LIMIT: f64 = 1e-9;

// binomial terms below this fraction of the mode are dropped
const LOG_CUTOFF: f64 = -46.0;
const DENSE_LIMIT: usize = 1100;
const REFINE_STEPS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("graph is disconnected")]
    Disconnected,
    #[error("n = {n} exceeds the oracle limit {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("n = {n} is below the minimum {min}")]
    TooSmall { n: usize, min: usize },
    #[error("linear solve residual {residual:e} exceeds {limit:e}")]
    NotConverged { residual: f64, limit: f64 },
    #[error("vertex set over {got} vertices does not match graph with {n}")]
    SizeMismatch { got: usize, n: usize },
    #[error(transparent)]
    Protocol(#[from] VotingError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSolution {
    pub states: usize,
    #[serde(rename = "win_prob_A")]
    pub win_prob_a: Vec<f64>,
    /// Infinite where absorption is not certain (`null` in JSON).
    #[serde(deserialize_with = "null_as_infinity")]
    pub expected_rounds: Vec<f64>,
    pub solver_residual: f64,
}

fn null_as_infinity<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<f64>, D::Error> {
    let raw: Vec<Option<f64>> = Vec::deserialize(de)?;
    Ok(raw.into_iter().map(|x| x.unwrap_or(f64::INFINITY)).collect())
}

/// Win probability of A for single-sample voting, `d(A)/2m`.
pub fn pull_voting_win_prob(g: &Graph, a: &VertexSet) -> Result<f64, OracleError> {
    if a.universe() != g.n() {
        return Err(OracleError::SizeMismatch { got: a.universe(), n: g.n() });
    }
    if !g.is_connected() {
        return Err(OracleError::Disconnected);
    }
    Ok((a.len() * g.d()) as f64 / (2 * g.m()) as f64)
}

/// Single-sample win probability of the synchronous process.
///
/// On a non-bipartite graph this is `d(A)/2m`. On a bipartite regular graph
/// with sides X, Y the two sides exchange opinions every round and the
/// process splits into two independent voter chains, so A wins with
/// probability `(|A∩X|/|X|)·(|A∩Y|/|Y|)`.
pub fn synchronous_single_sample_win_prob(g: &Graph, a: &VertexSet) -> Result<f64, OracleError> {
    let plain = pull_voting_win_prob(g, a)?;
    match g.bipartition() {
        None => Ok(plain),
        Some(side) => {
            let (mut x, mut ax, mut y, mut ay) = (0usize, 0usize, 0usize, 0usize);
            for v in 0..g.n() {
                if side[v] {
                    x += 1;
                    ax += a.contains(v) as usize;
                } else {
                    y += 1;
                    ay += a.contains(v) as usize;
                }
            }
            Ok((ax as f64 / x as f64) * (ay as f64 / y as f64))
        }
    }
}

/// Sparse transition rows plus the two absorbing states.
struct Chain {
    rows: Vec<Vec<(usize, f64)>>,
    all_a: usize,
    all_b: usize,
}

impl Chain {
    /// States that reach absorption with probability one, and states that can reach it at all.
    fn classify(&self) -> (Vec<bool>, Vec<bool>) {
        let s = self.rows.len();
        let mut rev: Vec<Vec<usize>> = vec![Vec::new(); s];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, p) in row {
                if p > 0.0 && j != i {
                    rev[j].push(i);
                }
            }
        }
        let reach = |seeds: &[usize]| {
            let mut seen = vec![false; s];
            let mut stack = seeds.to_vec();
            seeds.iter().for_each(|&x| seen[x] = true);
            while let Some(x) = stack.pop() {
                for &y in &rev[x] {
                    if !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
            seen
        };
        let can_absorb = reach(&[self.all_a, self.all_b]);
        let stuck: Vec<usize> = (0..s).filter(|&i| !can_absorb[i]).collect();
        let may_stick = reach(&stuck);
        let sure = (0..s).map(|i| can_absorb[i] && !may_stick[i]).collect();
        (sure, can_absorb)
    }

    fn solve(&self) -> Result<ChainSolution, OracleError> {
        let s = self.rows.len();
        let (sure, can_absorb) = self.classify();
        // Fixed rows become identity rows with the fixed value as right-hand side.
        let fixed_win = |i: usize| -> Option<f64> {
            if i == self.all_a {
                Some(1.0)
            } else if i == self.all_b || !can_absorb[i] {
                Some(0.0)
            } else {
                None
            }
        };
        let fixed_time = |i: usize| -> Option<f64> {
            if i == self.all_a || i == self.all_b || !sure[i] {
                Some(0.0)
            } else {
                None
            }
        };
        let rhs_win: Vec<f64> = (0..s).map(|i| fixed_win(i).unwrap_or(0.0)).collect();
        let rhs_time: Vec<f64> = (0..s).map(|i| fixed_time(i).unwrap_or(1.0)).collect();
        let win_free: Vec<bool> = (0..s).map(|i| fixed_win(i).is_none()).collect();
        let time_free: Vec<bool> = (0..s).map(|i| fixed_time(i).is_none()).collect();

        let solve_one = |free: &[bool], rhs: &[f64]| -> Vec<f64> {
            if s <= DENSE_LIMIT {
                dense_solve(&self.rows, free, rhs)
            } else {
                banded_solve(&self.rows, free, rhs)
            }
        };
        let win = solve_one(&win_free, &rhs_win);
        let time = solve_one(&time_free, &rhs_time);
        let residual = residual(&self.rows, &win_free, &rhs_win, &win).max(residual(&self.rows, &time_free, &rhs_time, &time));
        if !(residual <= RESIDUAL_LIMIT) {
            return Err(OracleError::NotConverged { residual, limit: RESIDUAL_LIMIT });
        }
        let win_prob_a = win.into_iter().map(|x| x.clamp(0.0, 1.0)).collect();
        let expected_rounds = (0..s)
            .map(|i| if !sure[i] { f64::INFINITY } else { time[i].max(0.0) })
            .collect();
        Ok(ChainSolution { states: s, win_prob_a, expected_rounds, solver_residual: residual })
    }
}

/// Entry `(i, j)` of the system matrix: identity on fixed rows, `I - P` on free rows.
fn system_entries<'a>(rows: &'a [Vec<(usize, f64)>], free: &'a [bool], i: usize) -> impl Iterator<Item = (usize, f64)> + 'a {
    let own = std::iter::once((i, 1.0));
    let off = rows[i].iter().filter(move |_| free[i]).map(|&(j, p)| (j, -p));
    own.chain(off)
}

fn residual(rows: &[Vec<(usize, f64)>], free: &[bool], rhs: &[f64], x: &[f64]) -> f64 {
    (0..rows.len())
        .map(|i| {
            let lhs: f64 = system_entries(rows, free, i).map(|(j, a)| a * x[j]).sum();
            (lhs - rhs[i]).abs()
        })
        .fold(0.0, f64::max)
}

fn dense_solve(rows: &[Vec<(usize, f64)>], free: &[bool], rhs: &[f64]) -> Vec<f64> {
    let s = rows.len();
    let mut m = DMatrix::<f64>::zeros(s, s);
    for i in 0..s {
        for (j, a) in system_entries(rows, free, i) {
            m[(i, j)] += a;
        }
    }
    let b = DVector::from_column_slice(rhs);
    match m.lu().solve(&b) {
        Some(x) => x.iter().copied().collect(),
        None => vec![f64::NAN; s],
    }
}

/// LU factors of a banded, row diagonally dominant system (no pivoting needed).
struct BandedLu {
    s: usize,
    lo: usize,
    up: usize,
    width: usize,
    band: Vec<f64>,
}

impl BandedLu {
    fn factor(rows: &[Vec<(usize, f64)>], free: &[bool]) -> Self {
        let s = rows.len();
        let (mut lo, mut hi) = (0usize, 0usize);
        for (i, row) in rows.iter().enumerate() {
            if !free[i] {
                continue;
            }
            for &(j, _) in row {
                lo = lo.max(i.saturating_sub(j));
                hi = hi.max(j.saturating_sub(i));
            }
        }
        // elimination can fill the upper band up to lo + hi
        let up = lo + hi;
        let width = lo + up + 1;
        let mut lu = Self { s, lo, up, width, band: vec![0.0; s * width] };
        for i in 0..s {
            for (j, a) in system_entries(rows, free, i) {
                let k = lu.at(i, j);
                lu.band[k] += a;
            }
        }
        for k in 0..s {
            let pivot = lu.band[lu.at(k, k)];
            let last = (k + up).min(s - 1);
            for i in k + 1..=(k + lo).min(s - 1) {
                let ik = lu.at(i, k);
                let f = lu.band[ik] / pivot;
                lu.band[ik] = f;
                if f == 0.0 {
                    continue;
                }
                // row_i[k+1..=last] -= f * row_k[k+1..=last]
                let len = last - k;
                let (top, bottom) = lu.band.split_at_mut(i * width);
                let src = &top[k * width + lo + 1..k * width + lo + 1 + len];
                let off = k + 1 + lo - i;
                for (d, &v) in bottom[off..off + len].iter_mut().zip(src) {
                    *d -= f * v;
                }
            }
        }
        lu
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.lo - i)
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let s = self.s;
        let mut x = rhs.to_vec();
        for i in 0..s {
            let first = i.saturating_sub(self.lo);
            let mut acc = x[i];
            for j in first..i {
                acc -= self.band[self.at(i, j)] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..s).rev() {
            let mut acc = x[i];
            for j in i + 1..=(i + self.up).min(s - 1) {
                acc -= self.band[self.at(i, j)] * x[j];
            }
            x[i] = acc / self.band[self.at(i, i)];
        }
        x
    }
}

fn banded_solve(rows: &[Vec<(usize, f64)>], free: &[bool], rhs: &[f64]) -> Vec<f64> {
    let lu = BandedLu::factor(rows, free);
    let mut x = lu.solve(rhs);
    for _ in 0..REFINE_STEPS {
        let r: Vec<f64> = (0..rows.len())
            .map(|i| rhs[i] - system_entries(rows, free, i).map(|(j, a)| a * x[j]).sum::<f64>())
            .collect();
        let dx = lu.solve(&r);
        x.iter_mut().zip(&dx).for_each(|(a, b)| *a += b);
    }
    x
}

/// Exact chain over all `2^n` assignments of a graph with `n <= 10`.
pub fn exact_chain_full(g: &Graph, protocol: &ProtocolSpec) -> Result<ChainSolution, OracleError> {
    let n = g.n();
    if n > FULL_MAX_N {
        return Err(OracleError::TooLarge { n, limit: FULL_MAX_N });
    }
    if n == 0 {
        return Err(OracleError::TooSmall { n, min: 1 });
    }
    protocol.validate(g.d())?;
    let s = 1usize << n;
    let d = g.d();
    let rows: Vec<Vec<(usize, f64)>> = (0..s)
        .into_par_iter()
        .map(|state| {
            let mut dist = vec![0.0; s];
            dist[0] = 1.0;
            // dist is indexed by the set of flipping vertices
            let mut span = 1usize;
            for v in 0..n {
                let own = (state >> v) & 1;
                let other = g.neighbors(v).iter().filter(|&&u| (state >> u) & 1 != own).count();
                let p = flip_probability(protocol, d, other);
                let bit = 1usize << v;
                if p == 0.0 {
                    continue;
                }
                for f in 0..span {
                    if dist[f] != 0.0 && f & !(bit - 1) == 0 {
                        dist[f | bit] = dist[f] * p;
                        dist[f] *= 1.0 - p;
                    }
                }
                span = span.max(bit << 1);
            }
            dist.iter()
                .enumerate()
                .filter(|&(_, &p)| p > 0.0)
                .map(|(f, &p)| (state ^ f, p))
                .collect()
        })
        .collect();
    Chain { rows, all_a: 0, all_b: s - 1 }.solve()
}

/// Truncated `Binomial(trials, p)` pmf as `(offset, weights)`, normalized to sum 1.
///
/// Weights are built outward from the mode by the ratio recurrence with the
/// mode set to 1, so nothing underflows; terms below `e^-46` of the mode are
/// dropped.
fn binomial_pmf(trials: usize, p: f64) -> (usize, Vec<f64>) {
    if p <= 0.0 || trials == 0 {
        return (0, vec![1.0]);
    }
    if p >= 1.0 {
        return (trials, vec![1.0]);
    }
    let cutoff = LOG_CUTOFF.exp();
    let odds = p / (1.0 - p);
    let mode = (((trials + 1) as f64 * p).floor() as usize).min(trials);
    let mut up = vec![1.0];
    let mut w = 1.0;
    for k in mode..trials {
        w *= (trials - k) as f64 / (k + 1) as f64 * odds;
        if w < cutoff {
            break;
        }
        up.push(w);
    }
    let mut down = Vec::new();
    w = 1.0;
    for k in (1..=mode).rev() {
        w *= k as f64 / ((trials - k + 1) as f64 * odds);
        if w < cutoff {
            break;
        }
        down.push(w);
    }
    let lo = mode - down.len();
    down.reverse();
    down.extend(up);
    let total: f64 = down.iter().sum();
    down.iter_mut().for_each(|x| *x /= total);
    (lo, down)
}

/// Lumped chain of the complete graph `K_n`; state `b` is the number of B vertices.
pub fn exact_chain_complete(n: usize, protocol: &ProtocolSpec) -> Result<ChainSolution, OracleError> {
    if n > COMPLETE_MAX_N {
        return Err(OracleError::TooLarge { n, limit: COMPLETE_MAX_N });
    }
    if n < 2 {
        return Err(OracleError::TooSmall { n, min: 2 });
    }
    let d = n - 1;
    protocol.validate(d)?;
    let rows: Vec<Vec<(usize, f64)>> = (0..=n)
        .into_par_iter()
        .map(|b| {
            if b == 0 || b == n {
                return vec![(b, 1.0)];
            }
            // A vertices see b B-slots; B vertices see n - b A-slots
            let (ox, px) = binomial_pmf(n - b, flip_probability(protocol, d, b));
            let (oy, py) = binomial_pmf(b, flip_probability(protocol, d, n - b));
            let base = b + ox - oy - (py.len() - 1);
            let mut row = vec![0.0; px.len() + py.len() - 1];
            for (x, &wx) in px.iter().enumerate() {
                for (y, &wy) in py.iter().enumerate() {
                    row[x + py.len() - 1 - y] += wx * wy;
                }
            }
            row.into_iter()
                .enumerate()
                .filter(|&(_, p)| p > 0.0)
                .map(|(i, p)| (base + i, p))
                .collect()
        })
        .collect();
    Chain { rows, all_a: 0, all_b: n }.solve()
}
