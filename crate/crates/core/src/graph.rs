//! Regular undirected (multi)graphs and the generators used by the experiments.
//!
//! Adjacency is stored as a flat `n * d` array of neighbor slots. A parallel
//! edge appears as a repeated slot and a self-loop contributes two slots to
//! its vertex, so every counting query below works with multiplicity.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Attempts allowed before reject-simple sampling gives up.
pub const REJECT_RETRY_CAP: usize = 10_000;
/// Total switching attempts across repair restarts.
pub const REPAIR_ATTEMPT_CAP: usize = 1 << 26;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex {vertex} has degree {degree}, expected {expected}")]
    NonRegular { vertex: usize, degree: usize, expected: usize },
    #[error("vertex id {vertex} out of range for n = {n}")]
    BadVertexId { vertex: usize, n: usize },
    #[error("n*d = {n}*{d} is odd")]
    OddDegreeSum { n: usize, d: usize },
    #[error("degree {d} must be smaller than n = {n}")]
    DegreeTooLarge { n: usize, d: usize },
    #[error("gave up after {attempts} attempts")]
    RetryExhausted { attempts: usize },
    #[error("{what} needs at least {min} vertices, got {n}")]
    TooSmall { what: &'static str, n: usize, min: usize },
    #[error("clustered graph needs n to be a positive multiple of 6, got {n}")]
    BadClusterCount { n: usize },
    #[error("clustered graph needs d >= 6, got {d}")]
    DegreeTooSmall { d: usize },
    #[error("vertex sets overlap")]
    SetsOverlap,
    #[error("malformed graph file: {0}")]
    Parse(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for GraphError {
    fn from(e: std::io::Error) -> Self {
        GraphError::Io(e.to_string())
    }
}

/// How the configuration-model sampler deals with loops and parallel edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimpleMode {
    /// Resample the whole matching until it is simple. Uniform over simple graphs.
    RejectSimple,
    /// Keep the first matching as a multigraph.
    AllowMulti,
    /// Remove defects by random switchings. Not exactly uniform.
    Repair,
}

/// Where a graph came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    pub seed: Option<u64>,
    /// False when the generator is known not to sample uniformly from its family.
    pub uniform: bool,
}

impl Provenance {
    fn fixed(generator: impl Into<String>) -> Self {
        Self { generator: generator.into(), seed: None, uniform: true }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    d: usize,
    adj: Vec<u32>,
    is_simple: bool,
    provenance: Provenance,
}

/// A subset of the vertices of a graph with O(1) membership tests.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexSet {
    mask: Vec<bool>,
    members: Vec<usize>,
}

impl VertexSet {
    pub fn new(n: usize, members: impl IntoIterator<Item = usize>) -> Result<Self, GraphError> {
        let mut mask = vec![false; n];
        let mut list = Vec::new();
        for v in members {
            if v >= n {
                return Err(GraphError::BadVertexId { vertex: v, n });
            }
            if !mask[v] {
                mask[v] = true;
                list.push(v);
            }
        }
        list.sort_unstable();
        Ok(Self { mask, members: list })
    }

    pub fn empty(n: usize) -> Self {
        Self { mask: vec![false; n], members: Vec::new() }
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        let members = mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect();
        Self { mask, members }
    }

    /// Members of `bits` (bit v set means v is a member), for n <= 64.
    pub fn from_bits(n: usize, bits: u64) -> Self {
        Self::from_mask((0..n).map(|v| bits >> v & 1 == 1).collect())
    }

    #[inline]
    pub fn contains(&self, v: usize) -> bool {
        self.mask[v]
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// The size of the ground set.
    pub fn universe(&self) -> usize {
        self.mask.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn complement(&self) -> Self {
        Self::from_mask(self.mask.iter().map(|b| !b).collect())
    }

    pub fn is_disjoint(&self, other: &VertexSet) -> bool {
        self.members.iter().all(|&v| !other.contains(v))
    }
}

impl Graph {
    /// Builds a d-regular graph from an undirected edge list. Repeated pairs
    /// become parallel edges; `(v, v)` is a self-loop counting 2 towards deg(v).
    pub fn from_edges(n: usize, d: usize, edges: &[(usize, usize)]) -> Result<Graph, GraphError> {
        Self::from_edges_with(n, d, edges, Provenance::fixed("edges"))
    }

    fn from_edges_with(
        n: usize,
        d: usize,
        edges: &[(usize, usize)],
        provenance: Provenance,
    ) -> Result<Graph, GraphError> {
        let mut lists: Vec<Vec<u32>> = vec![Vec::with_capacity(d); n];
        for &(u, v) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(GraphError::BadVertexId { vertex: x, n });
                }
            }
            lists[u].push(v as u32);
            lists[v].push(u as u32);
        }
        Self::from_lists(n, d, lists, provenance)
    }

    fn from_lists(
        n: usize,
        d: usize,
        mut lists: Vec<Vec<u32>>,
        provenance: Provenance,
    ) -> Result<Graph, GraphError> {
        let mut adj = Vec::with_capacity(n * d);
        let mut is_simple = true;
        for (v, list) in lists.iter_mut().enumerate() {
            if list.len() != d {
                return Err(GraphError::NonRegular { vertex: v, degree: list.len(), expected: d });
            }
            list.sort_unstable();
            if list.iter().any(|&u| u as usize == v) || list.windows(2).any(|w| w[0] == w[1]) {
                is_simple = false;
            }
            adj.extend_from_slice(list);
        }
        Ok(Graph { n, d, adj, is_simple, provenance })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of edges, `nd/2`.
    pub fn m(&self) -> usize {
        self.n * self.d / 2
    }

    pub fn is_simple(&self) -> bool {
        self.is_simple
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Neighbor slots of `v` in ascending order.
    #[inline]
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adj[v * self.d..(v + 1) * self.d]
    }

    /// Undirected edges, each listed once, with multiplicity.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.m());
        for v in 0..self.n {
            let mut loops = 0;
            for &u in self.neighbors(v) {
                let u = u as usize;
                if u > v {
                    out.push((v, u));
                } else if u == v {
                    loops += 1;
                }
            }
            out.extend(std::iter::repeat_n((v, v), loops / 2));
        }
        out
    }

    /// `d_v^S`: number of neighbor slots of `v` that land in `set`.
    #[inline]
    pub fn degree_into(&self, v: usize, set: &VertexSet) -> usize {
        self.neighbors(v).iter().filter(|&&u| set.contains(u as usize)).count()
    }

    /// `E(X, Y)` for disjoint `X`, `Y`.
    pub fn edge_count_between(&self, x: &VertexSet, y: &VertexSet) -> Result<usize, GraphError> {
        if !x.is_disjoint(y) {
            return Err(GraphError::SetsOverlap);
        }
        let (small, large) = if x.len() <= y.len() { (x, y) } else { (y, x) };
        Ok(small.iter().map(|v| self.degree_into(v, large)).sum())
    }

    /// `|E(S)|`, edges with both endpoints in `S`.
    pub fn internal_edge_count(&self, set: &VertexSet) -> usize {
        set.iter().map(|v| self.degree_into(v, set)).sum::<usize>() / 2
    }

    /// Cut size `E(S, V \ S)`.
    pub fn cut_size(&self, set: &VertexSet) -> usize {
        set.iter().map(|v| self.d - self.degree_into(v, set)).sum()
    }

    pub fn is_connected(&self) -> bool {
        self.n == 0 || self.bfs_order(0).len() == self.n
    }

    /// Vertices reachable from `root`, in BFS order.
    pub fn bfs_order(&self, root: usize) -> Vec<usize> {
        let mut seen = vec![false; self.n];
        let mut order = Vec::new();
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &u in self.neighbors(v) {
                if !seen[u as usize] {
                    seen[u as usize] = true;
                    queue.push_back(u as usize);
                }
            }
        }
        order
    }

    /// A proper 2-colouring if one exists (connected graphs only).
    pub fn bipartition(&self) -> Option<Vec<bool>> {
        if !self.is_connected() {
            return None;
        }
        let mut side: Vec<Option<bool>> = vec![None; self.n];
        let mut queue = VecDeque::new();
        if self.n > 0 {
            side[0] = Some(false);
            queue.push_back(0);
        }
        while let Some(v) = queue.pop_front() {
            let s = side[v].unwrap();
            for &u in self.neighbors(v) {
                match side[u as usize] {
                    None => {
                        side[u as usize] = Some(!s);
                        queue.push_back(u as usize);
                    }
                    Some(t) if t == s => return None,
                    _ => {}
                }
            }
        }
        Some(side.into_iter().map(Option::unwrap).collect())
    }

    pub fn is_bipartite(&self) -> bool {
        self.bipartition().is_some()
    }

    /// If this is the hypercube `Q_dim` under the standard labelling, returns `dim`.
    pub fn hypercube_dim(&self) -> Option<usize> {
        let dim = self.d;
        if dim >= usize::BITS as usize || self.n != 1usize << dim || !self.is_simple {
            return None;
        }
        (0..self.n)
            .all(|v| (0..dim).all(|i| self.neighbors(v).contains(&((v ^ (1 << i)) as u32))))
            .then_some(dim)
    }

    /// Writes the text format: a header `n d is_simple`, then one line per
    /// vertex with its neighbor ids in ascending order.
    pub fn write_text(&self, mut out: impl Write) -> Result<(), GraphError> {
        writeln!(out, "{} {} {}", self.n, self.d, self.is_simple)?;
        let mut line = String::new();
        for v in 0..self.n {
            line.clear();
            for (i, u) in self.neighbors(v).iter().enumerate() {
                if i > 0 {
                    line.push(' ');
                }
                write!(line, "{u}").unwrap();
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).unwrap()
    }

    pub fn read_text(input: impl BufRead) -> Result<Graph, GraphError> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| GraphError::Parse("empty input".into()))??;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let [n, d, simple] = fields[..] else {
            return Err(GraphError::Parse(format!("bad header {header:?}")));
        };
        let parse = |s: &str| s.parse::<usize>().map_err(|e| GraphError::Parse(format!("{s:?}: {e}")));
        let (n, d) = (parse(n)?, parse(d)?);
        let declared_simple = match simple {
            "true" | "1" => true,
            "false" | "0" => false,
            other => return Err(GraphError::Parse(format!("bad is_simple flag {other:?}"))),
        };
        let mut lists = Vec::with_capacity(n);
        for v in 0..n {
            let line = lines.next().ok_or_else(|| GraphError::Parse(format!("missing line for vertex {v}")))??;
            let mut list = Vec::with_capacity(d);
            for tok in line.split_whitespace() {
                let u = parse(tok)?;
                if u >= n {
                    return Err(GraphError::BadVertexId { vertex: u, n });
                }
                list.push(u as u32);
            }
            lists.push(list);
        }
        let g = Self::from_lists(n, d, lists, Provenance::fixed("file"))?;
        if !g.is_symmetric() {
            return Err(GraphError::Parse("adjacency is not symmetric".into()));
        }
        if g.is_simple != declared_simple {
            return Err(GraphError::Parse(format!(
                "header says is_simple={declared_simple}, adjacency says {}",
                g.is_simple
            )));
        }
        Ok(g)
    }

    /// Checks that u occurs in v's list as often as v in u's.
    pub fn is_symmetric(&self) -> bool {
        let mut counts: HashMap<(u32, u32), i64> = HashMap::new();
        for v in 0..self.n {
            for &u in self.neighbors(v) {
                let v = v as u32;
                if u != v {
                    *counts.entry((v.min(u), v.max(u))).or_default() += if v < u { 1 } else { -1 };
                }
            }
        }
        let loops_even = (0..self.n)
            .all(|v| self.neighbors(v).iter().filter(|&&u| u as usize == v).count() % 2 == 0);
        loops_even && counts.values().all(|&c| c == 0)
    }
}

fn config_matching(n: usize, d: usize, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let mut points: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    points.shuffle(rng);
    points.chunks_exact(2).map(|p| (p[0], p[1])).collect()
}

fn is_simple_edge_list(edges: &[(usize, usize)]) -> bool {
    let mut seen = std::collections::HashSet::with_capacity(edges.len());
    edges.iter().all(|&(u, v)| u != v && seen.insert((u.min(v), u.max(v))))
}

fn key(u: usize, v: usize) -> (usize, usize) {
    (u.min(v), u.max(v))
}

/// Removes loops and parallel edges by double-edge switchings.
fn repair_edges(
    edges: &mut [(usize, usize)],
    cap: usize,
    rng: &mut impl Rng,
) -> Result<(), GraphError> {
    let mut count: HashMap<(usize, usize), u32> = HashMap::with_capacity(edges.len());
    for &(u, v) in edges.iter() {
        *count.entry(key(u, v)).or_default() += 1;
    }
    let is_bad = |count: &HashMap<(usize, usize), u32>, (u, v): (usize, usize)| u == v || count[&key(u, v)] > 1;
    let mut attempts = 0;
    loop {
        let bad: Vec<usize> = (0..edges.len()).filter(|&i| is_bad(&count, edges[i])).collect();
        if bad.is_empty() {
            return Ok(());
        }
        for i in bad {
            while is_bad(&count, edges[i]) {
                if attempts >= cap {
                    return Err(GraphError::RetryExhausted { attempts });
                }
                attempts += 1;
                let j = rng.random_range(0..edges.len());
                if j == i {
                    continue;
                }
                let (a, b) = edges[i];
                let (c, e) = if rng.random_bool(0.5) { edges[j] } else { (edges[j].1, edges[j].0) };
                // (a,b),(c,e) -> (a,c),(b,e)
                if a == c || b == e {
                    continue;
                }
                for k in [key(a, b), key(c, e)] {
                    *count.get_mut(&k).unwrap() -= 1;
                }
                let ok = count.get(&key(a, c)).copied().unwrap_or(0) == 0
                    && count.get(&key(b, e)).copied().unwrap_or(0) == 0
                    && key(a, c) != key(b, e);
                if ok {
                    edges[i] = (a, c);
                    edges[j] = (b, e);
                    for k in [key(a, c), key(b, e)] {
                        *count.entry(k).or_default() += 1;
                    }
                } else {
                    for k in [key(a, b), key(c, e)] {
                        *count.get_mut(&k).unwrap() += 1;
                    }
                }
            }
        }
    }
}

/// Random d-regular graph from the configuration model.
pub fn gen_random_regular(n: usize, d: usize, seed: u64, mode: SimpleMode) -> Result<Graph, GraphError> {
    if (n * d) % 2 == 1 {
        return Err(GraphError::OddDegreeSum { n, d });
    }
    if d >= n {
        return Err(GraphError::DegreeTooLarge { n, d });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (edges, uniform) = match mode {
        SimpleMode::AllowMulti => (config_matching(n, d, &mut rng), true),
        SimpleMode::RejectSimple => {
            let mut found = None;
            for _ in 0..REJECT_RETRY_CAP {
                let edges = config_matching(n, d, &mut rng);
                if is_simple_edge_list(&edges) {
                    found = Some(edges);
                    break;
                }
            }
            let edges = found.ok_or(GraphError::RetryExhausted { attempts: REJECT_RETRY_CAP })?;
            (edges, true)
        }
        SimpleMode::Repair => {
            // near-complete degrees can leave switchings stuck; start over from a new matching
            let mut attempts = 0;
            let edges = loop {
                let mut edges = config_matching(n, d, &mut rng);
                match repair_edges(&mut edges, 100 * n * d.max(1), &mut rng) {
                    Ok(()) => break edges,
                    Err(GraphError::RetryExhausted { attempts: a }) if attempts + a < REPAIR_ATTEMPT_CAP => attempts += a,
                    Err(e) => return Err(e),
                }
            };
            (edges, false)
        }
    };
    let tag = match mode {
        SimpleMode::RejectSimple => "random-regular/reject-simple",
        SimpleMode::AllowMulti => "random-regular/allow-multi",
        SimpleMode::Repair => "random-regular/repair",
    };
    Graph::from_edges_with(n, d, &edges, Provenance { generator: tag.into(), seed: Some(seed), uniform })
}

/// The hypercube `Q_dim`: `2^dim` vertices, adjacent iff labels differ in one bit.
pub fn gen_hypercube(dim: usize) -> Result<Graph, GraphError> {
    if dim == 0 {
        return Err(GraphError::TooSmall { what: "hypercube dimension", n: dim, min: 1 });
    }
    let n = 1usize << dim;
    let lists = (0..n).map(|v| (0..dim).map(|i| (v ^ (1 << i)) as u32).collect()).collect();
    Graph::from_lists(n, dim, lists, Provenance::fixed(format!("hypercube/{dim}")))
}

pub fn gen_complete(n: usize) -> Result<Graph, GraphError> {
    if n < 2 {
        return Err(GraphError::TooSmall { what: "complete graph", n, min: 2 });
    }
    let lists = (0..n).map(|v| (0..n).filter(|&u| u != v).map(|u| u as u32).collect()).collect();
    Graph::from_lists(n, n - 1, lists, Provenance::fixed(format!("complete/{n}")))
}

pub fn gen_cycle(n: usize) -> Result<Graph, GraphError> {
    if n < 3 {
        return Err(GraphError::TooSmall { what: "cycle", n, min: 3 });
    }
    let lists = (0..n).map(|v| vec![((v + n - 1) % n) as u32, ((v + 1) % n) as u32]).collect();
    Graph::from_lists(n, 2, lists, Provenance::fixed(format!("cycle/{n}")))
}

/// The Petersen graph (3-regular, 10 vertices, not bipartite, vertex-transitive).
pub fn petersen() -> Graph {
    let mut edges = Vec::new();
    for i in 0..5 {
        edges.push((i, (i + 1) % 5));
        edges.push((i, i + 5));
        edges.push((i + 5, (i + 2) % 5 + 5));
    }
    Graph::from_edges_with(10, 3, &edges, Provenance::fixed("petersen")).expect("petersen is 3-regular")
}

/// A random `(d-5)`-regular multigraph with a 6-clique added on every block
/// `{6k, ..., 6k+5}`. Each cluster spans 15 edges, so sets of size 6 reach
/// density `15 / (6d)` no matter how well the random part mixes.
pub fn gen_clustered(n: usize, d: usize, seed: u64) -> Result<Graph, GraphError> {
    if n == 0 || !n.is_multiple_of(6) {
        return Err(GraphError::BadClusterCount { n });
    }
    if d < 6 {
        return Err(GraphError::DegreeTooSmall { d });
    }
    let base = gen_random_regular(n, d - 5, seed, SimpleMode::AllowMulti)?;
    let mut edges = base.edges();
    for block in (0..n).step_by(6) {
        for i in block..block + 6 {
            for j in i + 1..block + 6 {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges_with(
        n,
        d,
        &edges,
        Provenance { generator: "clustered/allow-multi".into(), seed: Some(seed), uniform: false },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(n: usize, v: &[usize]) -> VertexSet {
        VertexSet::new(n, v.iter().copied()).unwrap()
    }

    #[test]
    fn triangle_and_doubled_edge() {
        let k3 = Graph::from_edges(3, 2, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        assert!(k3.is_simple());
        assert_eq!(k3.m(), 3);
        let multi = Graph::from_edges(2, 2, &[(0, 1), (0, 1)]).unwrap();
        assert!(!multi.is_simple());
        assert_eq!(multi.neighbors(0), &[1, 1]);
    }

    #[test]
    fn degree_violation_is_reported() {
        let err = Graph::from_edges(4, 2, &[(0, 1), (1, 2), (2, 3)]).unwrap_err();
        assert_eq!(err, GraphError::NonRegular { vertex: 0, degree: 1, expected: 2 });
        assert_eq!(
            Graph::from_edges(2, 1, &[(0, 2)]).unwrap_err(),
            GraphError::BadVertexId { vertex: 2, n: 2 }
        );
    }

    #[test]
    fn random_regular_modes() {
        let g = gen_random_regular(10, 3, 1, SimpleMode::RejectSimple).unwrap();
        assert!(g.is_simple() && g.is_symmetric());
        assert_eq!(g.m(), 15);
        assert_eq!(gen_random_regular(5, 3, 0, SimpleMode::RejectSimple), Err(GraphError::OddDegreeSum { n: 5, d: 3 }));
        assert!(matches!(gen_random_regular(4, 4, 0, SimpleMode::AllowMulti), Err(GraphError::DegreeTooLarge { .. })));
        let r = gen_random_regular(200, 12, 3, SimpleMode::Repair).unwrap();
        assert!(r.is_simple() && r.is_symmetric());
        assert!(!r.provenance().uniform);
    }

    #[test]
    fn reject_simple_on_four_vertices_is_k4() {
        let k4 = gen_complete(4).unwrap();
        for seed in 0..20 {
            let g = gen_random_regular(4, 3, seed, SimpleMode::RejectSimple).unwrap();
            assert_eq!(g.adj, k4.adj);
        }
    }

    #[test]
    fn fixed_families() {
        let q3 = gen_hypercube(3).unwrap();
        assert_eq!((q3.n(), q3.d(), q3.m()), (8, 3, 12));
        assert_eq!(q3.hypercube_dim(), Some(3));
        let q1 = gen_hypercube(1).unwrap();
        assert_eq!((q1.n(), q1.m()), (2, 1));
        let k5 = gen_complete(5).unwrap();
        assert_eq!((k5.d(), k5.m()), (4, 10));
        assert_eq!(gen_complete(2).unwrap().m(), 1);
        let c6 = gen_cycle(6).unwrap();
        assert_eq!((c6.d(), c6.m()), (2, 6));
        assert!(c6.is_bipartite());
        assert!(!gen_cycle(5).unwrap().is_bipartite());
        assert!(matches!(gen_cycle(2), Err(GraphError::TooSmall { .. })));
        assert!(matches!(gen_complete(1), Err(GraphError::TooSmall { .. })));
        assert_eq!(k5.hypercube_dim(), None);
        let p = petersen();
        assert!(p.is_simple() && !p.is_bipartite() && p.is_connected());
    }

    #[test]
    fn clustered_construction() {
        let g = gen_clustered(12, 8, 5).unwrap();
        assert_eq!((g.n(), g.d()), (12, 8));
        for v in 0..12 {
            let block = v / 6 * 6;
            let mates = g.neighbors(v).iter().filter(|&&u| (u as usize) / 6 * 6 == block && u as usize != v).count();
            assert!(mates >= 5);
        }
        let big = gen_clustered(600, 30, 7).unwrap();
        for k in 0..100 {
            let s = VertexSet::new(600, 6 * k..6 * k + 6).unwrap();
            assert!(big.internal_edge_count(&s) >= 15);
        }
        assert_eq!(gen_clustered(10, 8, 0), Err(GraphError::BadClusterCount { n: 10 }));
        assert_eq!(gen_clustered(12, 5, 0), Err(GraphError::DegreeTooSmall { d: 5 }));
    }

    #[test]
    fn counting_queries() {
        let k6 = gen_complete(6).unwrap();
        assert_eq!(k6.edge_count_between(&set(6, &[0, 1]), &set(6, &[2, 3])).unwrap(), 4);
        let c6 = gen_cycle(6).unwrap();
        assert_eq!(c6.edge_count_between(&set(6, &[0]), &set(6, &[3])).unwrap(), 0);
        assert_eq!(c6.edge_count_between(&set(6, &[0, 1]), &set(6, &[1])), Err(GraphError::SetsOverlap));
        let q3 = gen_hypercube(3).unwrap();
        // 000,011 vs 001,010
        assert_eq!(q3.edge_count_between(&set(8, &[0b000, 0b011]), &set(8, &[0b001, 0b010])).unwrap(), 4);
        assert_eq!(q3.degree_into(0, &set(8, &[1, 2, 4, 7])), 3);
        let k4 = gen_complete(4).unwrap();
        assert_eq!(k4.internal_edge_count(&set(4, &[0, 1, 2])), 3);
        assert_eq!(k4.internal_edge_count(&set(4, &[2])), 0);
        assert_eq!(c6.internal_edge_count(&set(6, &[0, 1, 2])), 2);
        let k5 = gen_complete(5).unwrap();
        assert_eq!(k5.degree_into(0, &set(5, &[3, 4])), 2);
        assert_eq!(k5.degree_into(0, &VertexSet::empty(5)), 0);
    }

    #[test]
    fn loops_and_multi_edges_count_with_multiplicity() {
        let g = Graph::from_edges(3, 4, &[(0, 0), (0, 1), (0, 1), (1, 2), (1, 2), (2, 2)]).unwrap();
        assert!(g.is_symmetric());
        let s0 = set(3, &[0]);
        assert_eq!(g.internal_edge_count(&s0), 1);
        assert_eq!(g.edge_count_between(&s0, &set(3, &[1])).unwrap(), 2);
        assert_eq!(g.edges().len(), g.m());
        let back = Graph::from_edges(3, 4, &g.edges()).unwrap();
        assert_eq!(back.adj, g.adj);
    }

    #[test]
    fn text_format_round_trips() {
        let g = gen_random_regular(30, 4, 9, SimpleMode::AllowMulti).unwrap();
        let text = g.to_text();
        let back = Graph::read_text(text.as_bytes()).unwrap();
        assert_eq!(back.adj, g.adj);
        assert_eq!(back.to_text(), text);
        assert!(text.starts_with(&format!("30 4 {}\n", g.is_simple())));
    }

    #[test]
    fn text_format_rejects_asymmetry() {
        let bad = "3 1 true\n1\n2\n0\n";
        assert!(matches!(Graph::read_text(bad.as_bytes()), Err(GraphError::Parse(_))));
    }

    #[test]
    fn generators_are_reproducible() {
        for mode in [SimpleMode::AllowMulti, SimpleMode::Repair, SimpleMode::RejectSimple] {
            let a = gen_random_regular(16, 3, 77, mode).unwrap();
            let b = gen_random_regular(16, 3, 77, mode).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn repair_reaches_near_complete_graphs() {
        for (n, d) in [(6, 5), (8, 7), (8, 6), (10, 9), (12, 10)] {
            for seed in 0..40 {
                let g = gen_random_regular(n, d, seed, SimpleMode::Repair).unwrap();
                assert!(g.is_simple() && g.is_symmetric());
                assert!((0..n).all(|v| g.neighbors(v).len() == d));
            }
        }
    }
}
