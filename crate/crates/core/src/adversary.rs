//! Opinion rearrangement and corruption between voting rounds.
//!
//! Redistribution strategies move opinions around without changing how many
//! vertices hold each one. They are concrete heuristics that probe the lower
//! bounds, not worst-case optimal adversaries. Corruption flips up to `f`
//! vertices after a voting step.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;
use crate::spectral::{grow_dense, refine_by_swaps};
use crate::voting::{random_state, Opinion, OpinionState};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AdversaryError {
    #[error("{0}")]
    WrongGraphKind(String),
    #[error("redistribution changed the B-count from {expected} to {got}")]
    CountMismatch { expected: usize, got: usize },
    #[error("corruption is not a redistribution")]
    NotARedistribution,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorruptPolicy {
    /// Flip A vertices to B, those next to B first.
    #[default]
    ToB,
    /// Flip B vertices to A, those next to A first.
    ToA,
    /// Flip majority vertices towards an even split.
    Balance,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AdversaryKind {
    #[default]
    None,
    /// Uniformly random placement of the current counts.
    Shuffle,
    /// Pack B into a dense region grown greedily from the vertex with most B neighbors.
    GreedyCluster,
    /// On `Q_dim`, pack B into the `(dim - codim)`-subcube of lowest ids.
    Subcube { codim: usize },
    /// Spread B as isolated adjacent pairs.
    AdjacentPairs,
    /// Flip up to `f` vertices after every step.
    Corrupt {
        f: usize,
        #[serde(default)]
        policy: CorruptPolicy,
    },
}

impl AdversaryKind {
    /// Whether this kind rearranges opinions before a step.
    pub fn redistributes(&self) -> bool {
        !matches!(self, AdversaryKind::None | AdversaryKind::Corrupt { .. })
    }

    pub fn label(&self) -> String {
        match self {
            AdversaryKind::None => "none".into(),
            AdversaryKind::Shuffle => "shuffle".into(),
            AdversaryKind::GreedyCluster => "greedy-cluster".into(),
            AdversaryKind::Subcube { codim } => format!("subcube:{codim}"),
            AdversaryKind::AdjacentPairs => "adjacent-pairs".into(),
            AdversaryKind::Corrupt { f, policy } => {
                let p = match policy {
                    CorruptPolicy::ToB => "to-b",
                    CorruptPolicy::ToA => "to-a",
                    CorruptPolicy::Balance => "balance",
                };
                format!("corrupt:{f}:{p}")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversarySpec {
    #[serde(flatten)]
    pub kind: AdversaryKind,
    #[serde(default)]
    pub seed: u64,
}

impl AdversarySpec {
    pub const fn new(kind: AdversaryKind) -> Self {
        Self { kind, seed: 0 }
    }

    pub const fn none() -> Self {
        Self::new(AdversaryKind::None)
    }

    /// True when the adversary can change the counts, so consensus is not absorbing.
    pub fn perturbs_counts(&self) -> bool {
        matches!(self.kind, AdversaryKind::Corrupt { f, .. } if f > 0)
    }
}

fn from_members(n: usize, members: impl IntoIterator<Item = usize>) -> OpinionState {
    let mut mask = vec![false; n];
    members.into_iter().for_each(|v| mask[v] = true);
    OpinionState::from_b_mask(mask)
}

fn greedy_cluster(g: &Graph, count: usize, current: Option<&OpinionState>, rng: &mut impl RngCore) -> OpinionState {
    let n = g.n();
    if count == 0 || count == n {
        return from_members(n, 0..count);
    }
    let start = match current {
        Some(state) => {
            let mut best = (0usize, Vec::new());
            for v in 0..n {
                let into = g.neighbors(v).iter().filter(|&&u| state.is_b(u as usize)).count();
                if into > best.0 || best.1.is_empty() {
                    best = (into, vec![v]);
                } else if into == best.0 {
                    best.1.push(v);
                }
            }
            *best.1.choose(rng).expect("n > 0")
        }
        None => rng.random_range(0..n),
    };
    let priority: Vec<u64> = (0..n).map(|_| rng.next_u64()).collect();
    let mut members = grow_dense(g, start, count, &priority);
    let mut mask = vec![false; n];
    members.iter().for_each(|&v| mask[v] = true);
    refine_by_swaps(g, &mut mask, &mut members, n, rng);
    OpinionState::from_b_mask(mask)
}

fn adjacent_pairs(g: &Graph, count: usize, rng: &mut impl RngCore) -> OpinionState {
    let n = g.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut is_b = vec![false; n];
    // `blocked` marks B vertices and their neighbors
    let mut blocked = vec![false; n];
    let mut placed = 0;
    let block = |v: usize, blocked: &mut [bool]| {
        blocked[v] = true;
        g.neighbors(v).iter().for_each(|&u| blocked[u as usize] = true);
    };
    // isolated pairs first, then any adjacent pairs, then singles
    for isolated in [true, false] {
        for &u in &order {
            if count - placed < 2 {
                break;
            }
            if is_b[u] || (isolated && blocked[u]) {
                continue;
            }
            let mut cands: Vec<usize> = g
                .neighbors(u)
                .iter()
                .map(|&w| w as usize)
                .filter(|&w| w != u && !is_b[w])
                .filter(|&w| !isolated || !blocked[w])
                .collect();
            cands.dedup();
            if let Some(&w) = cands.choose(rng) {
                is_b[u] = true;
                is_b[w] = true;
                block(u, &mut blocked);
                block(w, &mut blocked);
                placed += 2;
            }
        }
    }
    for &u in &order {
        if placed == count {
            break;
        }
        if !is_b[u] {
            is_b[u] = true;
            placed += 1;
        }
    }
    OpinionState::from_b_mask(is_b)
}

/// Places `count` B opinions according to `spec`. `current` is the state being
/// rearranged, if any.
pub fn place(
    g: &Graph,
    count: usize,
    spec: &AdversarySpec,
    current: Option<&OpinionState>,
    rng: &mut impl RngCore,
) -> Result<OpinionState, AdversaryError> {
    let n = g.n();
    Ok(match spec.kind {
        AdversaryKind::None => match current {
            Some(state) => state.clone(),
            None => random_state(n, count, rng),
        },
        AdversaryKind::Shuffle => random_state(n, count, rng),
        AdversaryKind::GreedyCluster => greedy_cluster(g, count, current, rng),
        AdversaryKind::Subcube { codim } => {
            let dim = g
                .hypercube_dim()
                .ok_or_else(|| AdversaryError::WrongGraphKind("subcube placement needs a hypercube".into()))?;
            if codim > dim {
                return Err(AdversaryError::WrongGraphKind(format!("codim {codim} exceeds dimension {dim}")));
            }
            // Ids in increasing order run through the subcube with the top
            // `codim` bits clear, then through its neighbors.
            from_members(n, 0..count)
        }
        AdversaryKind::AdjacentPairs => adjacent_pairs(g, count, rng),
        AdversaryKind::Corrupt { .. } => return Err(AdversaryError::NotARedistribution),
    })
}

/// Rearranges `state` without changing its counts.
pub fn redistribute(
    g: &Graph,
    state: &OpinionState,
    spec: &AdversarySpec,
    rng: &mut impl RngCore,
) -> Result<OpinionState, AdversaryError> {
    let next = place(g, state.count_b(), spec, Some(state), rng)?;
    if next.count_b() != state.count_b() {
        return Err(AdversaryError::CountMismatch { expected: state.count_b(), got: next.count_b() });
    }
    Ok(next)
}

/// Flips up to `f` vertices. Returns the new state and the number flipped.
pub fn corrupt(
    g: &Graph,
    state: &OpinionState,
    f: usize,
    policy: CorruptPolicy,
    rng: &mut impl RngCore,
) -> (OpinionState, usize) {
    let (from, budget) = match policy {
        CorruptPolicy::ToB => (Opinion::A, f),
        CorruptPolicy::ToA => (Opinion::B, f),
        CorruptPolicy::Balance => {
            let (a, b) = (state.count_a(), state.count_b());
            let from = if a >= b { Opinion::A } else { Opinion::B };
            (from, f.min(a.abs_diff(b) / 2))
        }
    };
    let to = if from == Opinion::A { Opinion::B } else { Opinion::A };
    // mark `from` vertices with a `to` neighbor, scanning whichever side is smaller
    let n = g.n();
    let count_to = if to == Opinion::B { state.count_b() } else { state.count_a() };
    let mut touches = vec![false; n];
    if count_to <= n - count_to {
        for u in (0..n).filter(|&u| state.opinion(u) == to) {
            g.neighbors(u).iter().for_each(|&v| touches[v as usize] = true);
        }
    } else {
        for v in (0..n).filter(|&v| state.opinion(v) == from) {
            touches[v] = g.neighbors(v).iter().any(|&u| state.opinion(u as usize) == to);
        }
    }
    let mut boundary = Vec::new();
    let mut interior = Vec::new();
    for v in (0..n).filter(|&v| state.opinion(v) == from) {
        if touches[v] {
            boundary.push(v);
        } else {
            interior.push(v);
        }
    }
    boundary.shuffle(rng);
    interior.shuffle(rng);
    let mut next = state.clone();
    let mut flipped = 0;
    for v in boundary.into_iter().chain(interior).take(budget) {
        next.set(v, to);
        flipped += 1;
    }
    (next, flipped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_clustered, gen_hypercube, gen_random_regular, SimpleMode};
    use crate::rng::CounterRng;
    use crate::voting::{flip_probability, ProtocolSpec};
    use proptest::prelude::*;

    fn rng(seed: u64) -> CounterRng {
        CounterRng::from_seed(seed)
    }

    #[test]
    fn none_and_shuffle() {
        let g = gen_random_regular(50, 4, 1, SimpleMode::RejectSimple).unwrap();
        let s = random_state(50, 13, &mut rng(1));
        assert_eq!(redistribute(&g, &s, &AdversarySpec::none(), &mut rng(2)).unwrap(), s);
        let sh = redistribute(&g, &s, &AdversarySpec::new(AdversaryKind::Shuffle), &mut rng(2)).unwrap();
        assert_eq!(sh.imbalance(), s.imbalance());
        assert_ne!(sh, s);
    }

    #[test]
    fn subcube_on_q5() {
        let g = gen_hypercube(5).unwrap();
        let s = random_state(32, 8, &mut rng(3));
        let spec = AdversarySpec::new(AdversaryKind::Subcube { codim: 2 });
        let placed = redistribute(&g, &s, &spec, &mut rng(4)).unwrap();
        let two = ProtocolSpec::two_sample();
        for v in 0..32 {
            if placed.is_b(v) {
                let b_nbrs = g.neighbors(v).iter().filter(|&&u| placed.is_b(u as usize)).count();
                assert_eq!(b_nbrs, 3);
                let p = flip_probability(&two, 5, placed.disagreeing_slots(&g, v));
                assert!((p - 0.16).abs() < 1e-15);
            }
        }
        assert_eq!(g.internal_edge_count(&placed.b_set()), 3 * 4);
    }

    #[test]
    fn subcube_internal_edges() {
        for dim in 2..9 {
            let g = gen_hypercube(dim).unwrap();
            for codim in 0..dim {
                let k = dim - codim;
                let spec = AdversarySpec::new(AdversaryKind::Subcube { codim });
                let s = place(&g, 1 << k, &spec, None, &mut rng(0)).unwrap();
                assert_eq!(g.internal_edge_count(&s.b_set()), k << k >> 1);
            }
        }
    }

    #[test]
    fn subcube_needs_a_hypercube() {
        let g = gen_random_regular(32, 5, 0, SimpleMode::RejectSimple).unwrap();
        let s = random_state(32, 4, &mut rng(0));
        let spec = AdversarySpec::new(AdversaryKind::Subcube { codim: 1 });
        assert!(matches!(redistribute(&g, &s, &spec, &mut rng(0)), Err(AdversaryError::WrongGraphKind(_))));
        let q3 = gen_hypercube(3).unwrap();
        let too_deep = AdversarySpec::new(AdversaryKind::Subcube { codim: 4 });
        assert!(redistribute(&q3, &random_state(8, 2, &mut rng(0)), &too_deep, &mut rng(0)).is_err());
    }

    #[test]
    fn greedy_cluster_beats_shuffles() {
        let graphs = [
            gen_random_regular(200, 6, 1, SimpleMode::Repair).unwrap(),
            gen_hypercube(7).unwrap(),
            gen_clustered(120, 9, 2).unwrap(),
        ];
        for g in &graphs {
            let n = g.n();
            for count in [n / 10, n / 4, n / 2] {
                let s = random_state(n, count, &mut rng(5));
                let greedy = redistribute(g, &s, &AdversarySpec::new(AdversaryKind::GreedyCluster), &mut rng(6)).unwrap();
                assert_eq!(greedy.count_b(), count);
                let mean: f64 = (0..100)
                    .map(|i| {
                        let sh = redistribute(g, &s, &AdversarySpec::new(AdversaryKind::Shuffle), &mut rng(100 + i)).unwrap();
                        g.internal_edge_count(&sh.b_set()) as f64
                    })
                    .sum::<f64>()
                    / 100.0;
                assert!(g.internal_edge_count(&greedy.b_set()) as f64 >= mean);
            }
        }
    }

    #[test]
    fn greedy_cluster_fills_clusters() {
        let g = gen_clustered(120, 8, 4).unwrap();
        for k in 1..=3 {
            let s = random_state(120, 6 * k, &mut rng(k as u64));
            let placed = redistribute(&g, &s, &AdversarySpec::new(AdversaryKind::GreedyCluster), &mut rng(9)).unwrap();
            let beta = g.internal_edge_count(&placed.b_set()) as f64 / (8.0 * 6.0 * k as f64);
            assert!(beta >= 15.0 / 48.0, "k={k} beta={beta}");
        }
    }

    #[test]
    fn adjacent_pairs_are_pairs() {
        let g = gen_random_regular(300, 5, 3, SimpleMode::RejectSimple).unwrap();
        let s = place(&g, 40, &AdversarySpec::new(AdversaryKind::AdjacentPairs), None, &mut rng(1)).unwrap();
        assert_eq!(s.count_b(), 40);
        let b = s.b_set();
        for v in b.iter() {
            assert_eq!(g.degree_into(v, &b), 1, "vertex {v}");
        }
    }

    #[test]
    fn corrupt_edges() {
        let g = gen_random_regular(40, 4, 2, SimpleMode::RejectSimple).unwrap();
        let s = random_state(40, 10, &mut rng(2));
        assert_eq!(corrupt(&g, &s, 0, CorruptPolicy::ToB, &mut rng(0)), (s.clone(), 0));
        let (all_b, flipped) = corrupt(&g, &s, 40, CorruptPolicy::ToB, &mut rng(0));
        assert_eq!((all_b.count_b(), flipped), (40, 30));
        let (bal, flipped) = corrupt(&g, &s, 100, CorruptPolicy::Balance, &mut rng(0));
        assert_eq!((bal.count_b(), flipped), (20, 10));
        // to-b prefers A vertices with a B neighbor
        let (next, _) = corrupt(&g, &s, 3, CorruptPolicy::ToB, &mut rng(7));
        let b = s.b_set();
        for v in 0..40 {
            if next.is_b(v) && !s.is_b(v) {
                assert!(g.degree_into(v, &b) > 0);
            }
        }
        assert!(matches!(
            redistribute(&g, &s, &AdversarySpec::new(AdversaryKind::Corrupt { f: 1, policy: CorruptPolicy::ToA }), &mut rng(0)),
            Err(AdversaryError::NotARedistribution)
        ));
    }

    #[test]
    fn spec_json_shape() {
        let spec: AdversarySpec = serde_json::from_str(r#"{"kind":"subcube","codim":2}"#).unwrap();
        assert_eq!(spec.kind, AdversaryKind::Subcube { codim: 2 });
        let spec: AdversarySpec = serde_json::from_str(r#"{"kind":"corrupt","f":5}"#).unwrap();
        assert_eq!(spec.kind, AdversaryKind::Corrupt { f: 5, policy: CorruptPolicy::ToB });
        let back: AdversarySpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn redistributions_preserve_counts(seed in 0u64..1000, frac in 0.0f64..=1.0, which in 0usize..4) {
            let g = gen_hypercube(6).unwrap();
            let count = (frac * 64.0) as usize;
            let s = random_state(64, count, &mut rng(seed));
            let kind = [AdversaryKind::Shuffle, AdversaryKind::GreedyCluster, AdversaryKind::Subcube { codim: 2 }, AdversaryKind::AdjacentPairs][which];
            let next = redistribute(&g, &s, &AdversarySpec::new(kind), &mut rng(seed ^ 1)).unwrap();
            prop_assert_eq!(next.count_b(), count);
        }

        #[test]
        fn corruption_is_bounded(seed in 0u64..1000, count in 0usize..=64, f in 0usize..80, policy in 0usize..3) {
            let g = gen_hypercube(6).unwrap();
            let s = random_state(64, count, &mut rng(seed));
            let policy = [CorruptPolicy::ToB, CorruptPolicy::ToA, CorruptPolicy::Balance][policy];
            let (next, flipped) = corrupt(&g, &s, f, policy, &mut rng(seed));
            let changed = (0..64).filter(|&v| next.is_b(v) != s.is_b(v)).count();
            prop_assert_eq!(changed, flipped);
            prop_assert!(flipped <= f);
            prop_assert!(next.count_b().abs_diff(s.count_b()) <= f);
        }
    }
}
