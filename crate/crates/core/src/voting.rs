//! Synchronous k-sample pull voting.
//!
//! In a round every vertex samples neighbor slots and applies its rule to the
//! opinions held at the *start* of the round. New opinions are written to a
//! separate buffer, so evaluation order is irrelevant.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{self, AdversaryError, AdversaryKind, AdversarySpec};
use crate::graph::{Graph, VertexSet};
use crate::rng::{below, CounterRng, RoundRng};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VotingError {
    #[error("without-replacement sampling of {k} slots needs degree >= {k}, got {d}")]
    SamplingInfeasible { k: usize, d: usize },
    #[error("k-majority needs an odd k >= 3, got {0}")]
    BadK(usize),
    #[error("B-count {b} out of range for n = {n}")]
    BadSize { b: usize, n: usize },
    #[error("explicit B set has {got} members over {universe} vertices; expected {b} over {n}")]
    BadSet { b: usize, n: usize, got: usize, universe: usize },
    #[error("state has {state} vertices but the graph has {graph}")]
    SizeMismatch { state: usize, graph: usize },
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Opinion {
    A,
    B,
}

/// Binary opinions with a maintained B-count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpinionState {
    is_b: Vec<bool>,
    count_b: usize,
}

impl OpinionState {
    pub fn all_a(n: usize) -> Self {
        Self { is_b: vec![false; n], count_b: 0 }
    }

    pub fn from_b_mask(is_b: Vec<bool>) -> Self {
        let count_b = is_b.iter().filter(|&&b| b).count();
        Self { is_b, count_b }
    }

    pub fn from_b_set(b: &VertexSet) -> Self {
        Self::from_b_mask(b.mask().to_vec())
    }

    /// Bit v of `bits` set means v holds B (n <= 64).
    pub fn from_bits(n: usize, bits: u64) -> Self {
        Self::from_b_mask((0..n).map(|v| bits >> v & 1 == 1).collect())
    }

    pub fn to_bits(&self) -> u64 {
        self.is_b.iter().enumerate().fold(0, |acc, (v, &b)| acc | (u64::from(b) << v))
    }

    pub fn n(&self) -> usize {
        self.is_b.len()
    }

    pub fn count_a(&self) -> usize {
        self.n() - self.count_b
    }

    pub fn count_b(&self) -> usize {
        self.count_b
    }

    /// `nu = (|A| - |B|) / n`.
    pub fn imbalance(&self) -> f64 {
        (self.count_a() as f64 - self.count_b as f64) / self.n() as f64
    }

    #[inline]
    pub fn is_b(&self, v: usize) -> bool {
        self.is_b[v]
    }

    pub fn opinion(&self, v: usize) -> Opinion {
        if self.is_b[v] {
            Opinion::B
        } else {
            Opinion::A
        }
    }

    pub fn set(&mut self, v: usize, op: Opinion) {
        let b = op == Opinion::B;
        if self.is_b[v] != b {
            self.is_b[v] = b;
            if b {
                self.count_b += 1;
            } else {
                self.count_b -= 1;
            }
        }
    }

    pub fn b_mask(&self) -> &[bool] {
        &self.is_b
    }

    pub fn b_set(&self) -> VertexSet {
        VertexSet::from_mask(self.is_b.clone())
    }

    pub fn a_set(&self) -> VertexSet {
        VertexSet::from_mask(self.is_b.iter().map(|b| !b).collect())
    }

    pub fn consensus(&self) -> Option<Opinion> {
        match self.count_b {
            0 => Some(Opinion::A),
            b if b == self.n() => Some(Opinion::B),
            _ => None,
        }
    }

    /// Number of neighbor slots of `v` holding the opposite opinion.
    #[inline]
    pub fn disagreeing_slots(&self, g: &Graph, v: usize) -> usize {
        let own = self.is_b[v];
        g.neighbors(v).iter().filter(|&&u| self.is_b[u as usize] != own).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum Rule {
    /// Adopt the opinion of one sampled neighbor.
    SingleSample,
    /// Adopt the sampled opinion iff both samples agree.
    TwoSample,
    /// Adopt the majority of `k` samples (k odd).
    KMajority { k: usize },
    /// Adopt the majority over all neighbor slots; keep own opinion on a tie.
    LocalMajority,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    #[default]
    WithReplacement,
    /// Distinct adjacency slots. In a multigraph two slots may name the same vertex.
    WithoutReplacement,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    #[serde(flatten)]
    pub rule: Rule,
    #[serde(default)]
    pub sampling: Sampling,
}

impl ProtocolSpec {
    pub const fn new(rule: Rule, sampling: Sampling) -> Self {
        Self { rule, sampling }
    }

    pub const fn single() -> Self {
        Self::new(Rule::SingleSample, Sampling::WithReplacement)
    }

    pub const fn two_sample() -> Self {
        Self::new(Rule::TwoSample, Sampling::WithReplacement)
    }

    pub fn samples(&self) -> usize {
        match self.rule {
            Rule::SingleSample => 1,
            Rule::TwoSample => 2,
            Rule::KMajority { k } => k,
            Rule::LocalMajority => 0,
        }
    }

    pub fn validate(&self, d: usize) -> Result<(), VotingError> {
        if let Rule::KMajority { k } = self.rule {
            if k < 3 || k % 2 == 0 {
                return Err(VotingError::BadK(k));
            }
        }
        let k = self.samples();
        if self.sampling == Sampling::WithoutReplacement && k > d {
            return Err(VotingError::SamplingInfeasible { k, d });
        }
        if k > 0 && d == 0 {
            return Err(VotingError::SamplingInfeasible { k, d });
        }
        Ok(())
    }

    /// Short label used in output files.
    pub fn label(&self) -> String {
        let rule = match self.rule {
            Rule::SingleSample => "single".to_string(),
            Rule::TwoSample => "two".to_string(),
            Rule::KMajority { k } => format!("{k}-majority"),
            Rule::LocalMajority => "local-majority".to_string(),
        };
        match (self.rule, self.sampling) {
            (Rule::SingleSample | Rule::LocalMajority, _) | (_, Sampling::WithReplacement) => rule,
            (_, Sampling::WithoutReplacement) => format!("{rule}/without"),
        }
    }
}

/// Conversions in one round.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundDelta {
    pub delta_ab: usize,
    pub delta_ba: usize,
}

impl RoundDelta {
    /// Net gain of A.
    pub fn net(&self) -> i64 {
        self.delta_ba as i64 - self.delta_ab as i64
    }
}

fn binomial_coeff(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Probability that a vertex with `other` of its `d` slots holding the
/// opposite opinion switches opinion in one round.
pub fn flip_probability(protocol: &ProtocolSpec, d: usize, other: usize) -> f64 {
    debug_assert!(other <= d, "{other} disagreeing slots out of {d}");
    let (df, of) = (d as f64, other as f64);
    match (protocol.rule, protocol.sampling) {
        (Rule::SingleSample, _) => of / df,
        (Rule::TwoSample, Sampling::WithReplacement) => (of / df).powi(2),
        (Rule::TwoSample, Sampling::WithoutReplacement) => of * (of - 1.0).max(0.0) / (df * (df - 1.0)),
        (Rule::KMajority { k }, Sampling::WithReplacement) => {
            let p = of / df;
            (k.div_ceil(2)..=k)
                .map(|j| binomial_coeff(k, j) * p.powi(j as i32) * (1.0 - p).powi((k - j) as i32))
                .sum()
        }
        (Rule::KMajority { k }, Sampling::WithoutReplacement) => {
            let total = binomial_coeff(d, k);
            (k.div_ceil(2)..=k.min(other))
                .map(|j| binomial_coeff(other, j) * binomial_coeff(d - other, k - j) / total)
                .sum()
        }
        (Rule::LocalMajority, _) => {
            if 2 * other > d {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Scratch space for without-replacement draws.
struct SlotScratch(Vec<u32>);

impl SlotScratch {
    fn new(d: usize) -> Self {
        Self((0..d as u32).collect())
    }

    /// Counts B among `k` distinct slots of `v` by a partial Fisher-Yates
    /// shuffle. The scratch is reset first so the draw depends only on `rng`.
    fn count_b(&mut self, g: &Graph, state: &OpinionState, v: usize, k: usize, rng: &mut CounterRng) -> usize {
        let nbrs = g.neighbors(v);
        let d = nbrs.len();
        for (i, slot) in self.0.iter_mut().enumerate() {
            *slot = i as u32;
        }
        let mut b = 0;
        for i in 0..k {
            let j = i + below(rng, d - i);
            self.0.swap(i, j);
            b += usize::from(state.is_b(nbrs[self.0[i] as usize] as usize));
        }
        b
    }
}

#[inline]
fn sample_is_b(g: &Graph, state: &OpinionState, v: usize, rng: &mut CounterRng) -> bool {
    let nbrs = g.neighbors(v);
    state.is_b(nbrs[below(rng, nbrs.len())] as usize)
}

fn next_is_b(
    g: &Graph,
    state: &OpinionState,
    protocol: &ProtocolSpec,
    v: usize,
    rng: &mut CounterRng,
    scratch: &mut SlotScratch,
) -> bool {
    let own = state.is_b(v);
    match (protocol.rule, protocol.sampling) {
        (Rule::SingleSample, _) => sample_is_b(g, state, v, rng),
        (Rule::TwoSample, Sampling::WithReplacement) => {
            let (x, y) = (sample_is_b(g, state, v, rng), sample_is_b(g, state, v, rng));
            if x == y {
                x
            } else {
                own
            }
        }
        (Rule::TwoSample, Sampling::WithoutReplacement) => {
            let nbrs = g.neighbors(v);
            let d = nbrs.len();
            let i = below(rng, d);
            let mut j = below(rng, d - 1);
            if j >= i {
                j += 1;
            }
            let (x, y) = (state.is_b(nbrs[i] as usize), state.is_b(nbrs[j] as usize));
            if x == y {
                x
            } else {
                own
            }
        }
        (Rule::KMajority { k }, Sampling::WithReplacement) => {
            let b = (0..k).filter(|_| sample_is_b(g, state, v, rng)).count();
            2 * b > k
        }
        (Rule::KMajority { k }, Sampling::WithoutReplacement) => 2 * scratch.count_b(g, state, v, k, rng) > k,
        (Rule::LocalMajority, _) => {
            let b = g.neighbors(v).iter().filter(|&&u| state.is_b(u as usize)).count();
            let d = g.d();
            match (2 * b).cmp(&d) {
                std::cmp::Ordering::Greater => true,
                std::cmp::Ordering::Less => false,
                std::cmp::Ordering::Equal => own,
            }
        }
    }
}

/// One synchronous round. All draws for vertex `v` come from `rng.vertex(v)`.
pub fn step(
    g: &Graph,
    state: &OpinionState,
    protocol: &ProtocolSpec,
    rng: &RoundRng,
) -> Result<(OpinionState, RoundDelta), VotingError> {
    if state.n() != g.n() {
        return Err(VotingError::SizeMismatch { state: state.n(), graph: g.n() });
    }
    protocol.validate(g.d())?;
    let mut scratch = SlotScratch::new(g.d());
    let mut next = Vec::with_capacity(g.n());
    let mut delta = RoundDelta::default();
    for v in 0..g.n() {
        let mut vr = rng.vertex(v);
        let b = next_is_b(g, state, protocol, v, &mut vr, &mut scratch);
        match (state.is_b(v), b) {
            (false, true) => delta.delta_ab += 1,
            (true, false) => delta.delta_ba += 1,
            _ => {}
        }
        next.push(b);
    }
    let next = OpinionState::from_b_mask(next);
    debug_assert_eq!(next.count_a() as i64, state.count_a() as i64 + delta.net());
    Ok((next, delta))
}

/// Exact `(E delta_ab, E delta_ba)` for one round from `state`.
pub fn expected_drift(g: &Graph, state: &OpinionState, protocol: &ProtocolSpec) -> (f64, f64) {
    let mut e_ab = 0.0;
    let mut e_ba = 0.0;
    for v in 0..g.n() {
        let p = flip_probability(protocol, g.d(), state.disagreeing_slots(g, v));
        if state.is_b(v) {
            e_ba += p;
        } else {
            e_ab += p;
        }
    }
    (e_ab, e_ba)
}

/// How the initial B vertices are chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum Placement {
    Random { seed: u64 },
    Explicit(VertexSet),
    Adversarial { spec: AdversarySpec, seed: u64 },
}

pub fn init_state(g: &Graph, b_size: usize, placement: &Placement) -> Result<OpinionState, VotingError> {
    let n = g.n();
    if b_size > n {
        return Err(VotingError::BadSize { b: b_size, n });
    }
    match placement {
        Placement::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let chosen = rand::seq::index::sample(&mut rng, n, b_size);
            let mut mask = vec![false; n];
            chosen.iter().for_each(|v| mask[v] = true);
            Ok(OpinionState::from_b_mask(mask))
        }
        Placement::Explicit(set) => {
            if set.len() != b_size || set.universe() != n {
                return Err(VotingError::BadSet { b: b_size, n, got: set.len(), universe: set.universe() });
            }
            Ok(OpinionState::from_b_set(set))
        }
        Placement::Adversarial { spec, seed } => {
            let mut rng = CounterRng::from_seed(*seed);
            Ok(adversary::place(g, b_size, spec, None, &mut rng)?)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Winner {
    A,
    B,
    Timeout,
}

/// Full history of one run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunRecord {
    pub seed: u64,
    pub n: usize,
    pub b0: usize,
    /// B-count before the first round and after each round.
    pub trajectory: Vec<usize>,
    pub deltas: Vec<RoundDelta>,
    /// Vertices flipped by a corrupting adversary, per round (empty otherwise).
    pub corrupted: Vec<usize>,
    pub rounds: usize,
    pub winner: Winner,
}

impl RunRecord {
    pub fn final_b(&self) -> usize {
        *self.trajectory.last().expect("trajectory holds b0")
    }
}

/// Rounds until consensus or `max_rounds`. Each round: the adversary
/// rearranges, every vertex votes, then a corrupting adversary flips.
/// Runs against a corrupting adversary never stop early.
pub fn run(
    g: &Graph,
    state0: &OpinionState,
    protocol: &ProtocolSpec,
    adversary: &AdversarySpec,
    max_rounds: usize,
    seed: u64,
) -> Result<RunRecord, VotingError> {
    protocol.validate(g.d())?;
    if state0.n() != g.n() {
        return Err(VotingError::SizeMismatch { state: state0.n(), graph: g.n() });
    }
    let persistent = adversary.perturbs_counts();
    let mut state = state0.clone();
    let mut trajectory = vec![state.count_b()];
    let mut deltas = Vec::new();
    let mut corrupted = Vec::new();
    for round in 0..max_rounds as u64 {
        if state.consensus().is_some() && !persistent {
            break;
        }
        let rr = RoundRng::new(seed, round);
        if adversary.kind.redistributes() {
            state = adversary::redistribute(g, &state, adversary, &mut rr.global(0))?;
        }
        let (next, delta) = step(g, &state, protocol, &rr)?;
        state = next;
        if let AdversaryKind::Corrupt { f, policy } = adversary.kind {
            let (next, flipped) = adversary::corrupt(g, &state, f, policy, &mut rr.global(1));
            state = next;
            corrupted.push(flipped);
        }
        deltas.push(delta);
        trajectory.push(state.count_b());
    }
    let winner = match state.consensus() {
        Some(Opinion::A) => Winner::A,
        Some(Opinion::B) => Winner::B,
        None => Winner::Timeout,
    };
    Ok(RunRecord { seed, n: g.n(), b0: state0.count_b(), rounds: deltas.len(), trajectory, deltas, corrupted, winner })
}

/// Default round cap: `50 n` for single-sample, `200 ceil(log2 n)` otherwise,
/// plus `10 d^2` when an adversary is active.
pub fn default_max_rounds(g: &Graph, protocol: &ProtocolSpec, adversary: &AdversarySpec) -> usize {
    let n = g.n();
    let base = match protocol.rule {
        Rule::SingleSample => 50 * n,
        _ => 200 * (usize::BITS - (n.max(2) - 1).leading_zeros()) as usize,
    };
    if adversary.kind == AdversaryKind::None {
        base
    } else {
        base + 10 * g.d() * g.d()
    }
}

/// Convenience: a uniformly random state with exactly `b` B-vertices.
pub fn random_state(n: usize, b: usize, rng: &mut impl Rng) -> OpinionState {
    let mut mask = vec![false; n];
    rand::seq::index::sample(rng, n, b).iter().for_each(|v| mask[v] = true);
    OpinionState::from_b_mask(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_complete, gen_cycle, gen_random_regular, SimpleMode};

    const TWO_WITHOUT: ProtocolSpec = ProtocolSpec::new(Rule::TwoSample, Sampling::WithoutReplacement);

    #[test]
    fn init_state_variants() {
        let g = gen_cycle(8).unwrap();
        let s = init_state(&g, 0, &Placement::Random { seed: 1 }).unwrap();
        assert_eq!(s.consensus(), Some(Opinion::A));
        let s = init_state(&g, 4, &Placement::Random { seed: 1 }).unwrap();
        assert_eq!(s.imbalance(), 0.0);
        let set = VertexSet::new(8, [1, 4, 6]).unwrap();
        let s = init_state(&g, 3, &Placement::Explicit(set.clone())).unwrap();
        assert_eq!(s.imbalance(), 2.0 / 8.0);
        assert!(s.is_b(4) && !s.is_b(0));
        assert!(matches!(init_state(&g, 9, &Placement::Random { seed: 0 }), Err(VotingError::BadSize { .. })));
        assert!(matches!(init_state(&g, 2, &Placement::Explicit(set)), Err(VotingError::BadSet { .. })));
    }

    #[test]
    fn consensus_is_a_fixed_point() {
        let g = gen_random_regular(20, 4, 2, SimpleMode::RejectSimple).unwrap();
        let rules = [Rule::SingleSample, Rule::TwoSample, Rule::KMajority { k: 3 }, Rule::LocalMajority];
        for rule in rules {
            for sampling in [Sampling::WithReplacement, Sampling::WithoutReplacement] {
                let p = ProtocolSpec::new(rule, sampling);
                for state in [OpinionState::all_a(20), OpinionState::from_b_mask(vec![true; 20])] {
                    let (next, delta) = step(&g, &state, &p, &RoundRng::new(5, 0)).unwrap();
                    assert_eq!(next, state);
                    assert_eq!(delta, RoundDelta::default());
                }
            }
        }
    }

    #[test]
    fn alternating_cycle_flips_under_single_sample() {
        let g = gen_cycle(4).unwrap();
        let abab = OpinionState::from_bits(4, 0b1010);
        for seed in 0..10 {
            let (next, delta) = step(&g, &abab, &ProtocolSpec::single(), &RoundRng::new(seed, 0)).unwrap();
            assert_eq!(next.to_bits(), 0b0101);
            assert_eq!((delta.delta_ab, delta.delta_ba), (2, 2));
        }
        let rec = run(&g, &abab, &ProtocolSpec::single(), &AdversarySpec::none(), 10, 3).unwrap();
        assert_eq!(rec.winner, Winner::Timeout);
        assert_eq!(rec.rounds, 10);
    }

    #[test]
    fn triangle_two_sample_conversion_rates() {
        let g = gen_complete(3).unwrap();
        let s = OpinionState::from_bits(3, 0b001);
        let trials = 40_000;
        let mut a_conversions = 0;
        for seed in 0..trials {
            let (next, delta) = step(&g, &s, &ProtocolSpec::two_sample(), &RoundRng::new(seed, 0)).unwrap();
            assert!(!next.is_b(0), "the lone B vertex sees only A");
            assert_eq!(delta.delta_ba, 1);
            a_conversions += delta.delta_ab;
        }
        let rate = a_conversions as f64 / (2 * trials) as f64;
        let se = (0.25f64 * 0.75 / (2 * trials) as f64).sqrt();
        assert!((rate - 0.25).abs() < 4.0 * se, "{rate}");
    }

    #[test]
    fn three_majority_without_replacement_on_k4() {
        let g = gen_complete(4).unwrap();
        let s = OpinionState::from_bits(4, 0b0001);
        let p = ProtocolSpec::new(Rule::KMajority { k: 3 }, Sampling::WithoutReplacement);
        for seed in 0..100 {
            let (_, delta) = step(&g, &s, &p, &RoundRng::new(seed, 0)).unwrap();
            assert_eq!(delta.delta_ab, 0);
        }
        let p5 = ProtocolSpec::new(Rule::KMajority { k: 5 }, Sampling::WithoutReplacement);
        assert_eq!(step(&g, &s, &p5, &RoundRng::new(0, 0)).unwrap_err(), VotingError::SamplingInfeasible { k: 5, d: 3 });
        assert_eq!(ProtocolSpec::new(Rule::KMajority { k: 4 }, Sampling::WithReplacement).validate(10), Err(VotingError::BadK(4)));
    }

    #[test]
    fn drift_examples_on_k4() {
        let g = gen_complete(4).unwrap();
        let s = OpinionState::from_bits(4, 0b0001);
        let (ab, ba) = expected_drift(&g, &s, &ProtocolSpec::two_sample());
        assert!((ba - 1.0).abs() < 1e-15 && (ab - 1.0 / 3.0).abs() < 1e-15);
        let (ab, ba) = expected_drift(&g, &s, &TWO_WITHOUT);
        assert_eq!(ab, 0.0);
        assert!((ba - 1.0).abs() < 1e-15);
    }

    #[test]
    fn flip_probabilities_against_enumeration() {
        // enumerate all ordered k-tuples (with) or k-subsets of slots (without)
        let d = 6;
        for other in 0..=d {
            for k in [1usize, 2, 3, 5] {
                let slots: Vec<bool> = (0..d).map(|i| i < other).collect();
                let mut hits = 0u64;
                let mut total = 0u64;
                for code in 0..(d as u64).pow(k as u32) {
                    let idx: Vec<usize> = (0..k).map(|i| (code / (d as u64).pow(i as u32) % d as u64) as usize).collect();
                    total += 1;
                    let b = idx.iter().filter(|&&i| slots[i]).count();
                    if 2 * b > k {
                        hits += 1;
                    }
                }
                let with = hits as f64 / total as f64;
                let (mut hits, mut total) = (0u64, 0u64);
                for mask in 0u32..(1 << d) {
                    if mask.count_ones() as usize != k {
                        continue;
                    }
                    total += 1;
                    let b = (0..d).filter(|&i| mask >> i & 1 == 1 && slots[i]).count();
                    if 2 * b > k {
                        hits += 1;
                    }
                }
                let without = hits as f64 / total as f64;
                let rule = match k {
                    1 => Rule::SingleSample,
                    2 => continue,
                    k => Rule::KMajority { k },
                };
                let pw = flip_probability(&ProtocolSpec::new(rule, Sampling::WithReplacement), d, other);
                let po = flip_probability(&ProtocolSpec::new(rule, Sampling::WithoutReplacement), d, other);
                assert!((pw - with).abs() < 1e-12, "k={k} other={other}");
                if k > 1 {
                    assert!((po - without).abs() < 1e-12, "k={k} other={other}");
                }
            }
            // two-sample: both samples disagree with own opinion
            let with = (other * other) as f64 / (d * d) as f64;
            let without = (other * other.saturating_sub(1)) as f64 / (d * (d - 1)) as f64;
            assert!((flip_probability(&ProtocolSpec::two_sample(), d, other) - with).abs() < 1e-15);
            assert!((flip_probability(&TWO_WITHOUT, d, other) - without).abs() < 1e-15);
        }
    }

    #[test]
    fn without_replacement_is_bounded_by_ratio() {
        for d in 2..12 {
            for other in 0..=d {
                let w = flip_probability(&ProtocolSpec::two_sample(), d, other);
                let o = flip_probability(&TWO_WITHOUT, d, other);
                assert!(o <= (d as f64 / (d as f64 - 1.0)) * w + 1e-15);
            }
        }
    }

    #[test]
    fn local_majority_is_deterministic() {
        let g = gen_random_regular(30, 4, 5, SimpleMode::RejectSimple).unwrap();
        let s = random_state(30, 12, &mut ChaCha8Rng::seed_from_u64(2));
        let p = ProtocolSpec::new(Rule::LocalMajority, Sampling::WithReplacement);
        let a = run(&g, &s, &p, &AdversarySpec::none(), 20, 1).unwrap();
        let b = run(&g, &s, &p, &AdversarySpec::none(), 20, 999).unwrap();
        assert_eq!(a.trajectory, b.trajectory);
    }

    #[test]
    fn run_conserves_counts_and_is_reproducible() {
        let g = gen_random_regular(64, 6, 8, SimpleMode::RejectSimple).unwrap();
        let s = random_state(64, 20, &mut ChaCha8Rng::seed_from_u64(4));
        let a = run(&g, &s, &ProtocolSpec::two_sample(), &AdversarySpec::none(), 500, 17).unwrap();
        let b = run(&g, &s, &ProtocolSpec::two_sample(), &AdversarySpec::none(), 500, 17).unwrap();
        assert_eq!(a, b);
        for (t, delta) in a.deltas.iter().enumerate() {
            let (before, after) = (a.trajectory[t] as i64, a.trajectory[t + 1] as i64);
            assert_eq!(after, before - delta.net());
            assert!(delta.delta_ab as i64 <= 64 - before && delta.delta_ba as i64 <= before);
        }
        assert_ne!(a.winner, Winner::Timeout);
    }

    #[test]
    fn consensus_start_takes_zero_rounds() {
        let g = gen_complete(5).unwrap();
        let rec = run(&g, &OpinionState::all_a(5), &ProtocolSpec::two_sample(), &AdversarySpec::none(), 10, 0).unwrap();
        assert_eq!((rec.rounds, rec.winner), (0, Winner::A));
    }

    #[test]
    fn default_round_caps() {
        let g = gen_complete(32).unwrap();
        assert_eq!(default_max_rounds(&g, &ProtocolSpec::single(), &AdversarySpec::none()), 1600);
        assert_eq!(default_max_rounds(&g, &ProtocolSpec::two_sample(), &AdversarySpec::none()), 1000);
        let shuffle = AdversarySpec::new(AdversaryKind::Shuffle);
        assert_eq!(default_max_rounds(&g, &ProtocolSpec::two_sample(), &shuffle), 1000 + 10 * 31 * 31);
    }
}
