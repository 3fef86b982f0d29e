//! Experiment configuration: JSON file plus command-line overrides.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::adversary::{AdversaryKind, AdversarySpec, CorruptPolicy};
use crate::graph::{gen_clustered, gen_complete, gen_cycle, gen_hypercube, gen_random_regular, petersen, Graph, SimpleMode};
use crate::rng::derive_seed;
use crate::voting::{ProtocolSpec, Rule, Sampling};

const GRAPH_TAG: u64 = 0x0067_7261_7068;

/// Largest `n * d` a generator will be asked for.
pub const MAX_GRAPH_SLOTS: usize = 1 << 28;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GraphSpec {
    Random {
        n: usize,
        d: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mode: Option<SimpleMode>,
    },
    Hypercube { dim: usize },
    Complete { n: usize },
    Cycle { n: usize },
    Clustered {
        n: usize,
        d: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Petersen,
    File { path: PathBuf },
}

/// Rejection sampling is only practical when simple matchings are common.
pub fn auto_mode(d: usize) -> SimpleMode {
    if d <= 5 {
        SimpleMode::RejectSimple
    } else {
        SimpleMode::Repair
    }
}

impl GraphSpec {
    /// Parses a command-line kind (`random`, `hypercube`, `complete`, `cycle`,
    /// `clustered`, `petersen`, `file:PATH`) with its size flags. A hypercube
    /// takes its dimension from `--d` or from a power-of-two `--n`.
    pub fn parse(kind: &str, n: Option<usize>, d: Option<usize>) -> Result<Self, HarnessError> {
        let need = |x: Option<usize>, flag: &str| x.ok_or_else(|| HarnessError::Config(format!("graph `{kind}` needs --{flag}")));
        if let Some(path) = kind.strip_prefix("file:") {
            return Ok(GraphSpec::File { path: path.into() });
        }
        Ok(match kind {
            "random" => GraphSpec::Random { n: need(n, "n")?, d: need(d, "d")?, seed: None, mode: None },
            "hypercube" => {
                let dim = match (d, n) {
                    (Some(d), _) => d,
                    (None, Some(n)) if n.is_power_of_two() => n.trailing_zeros() as usize,
                    (None, Some(n)) => return Err(HarnessError::Config(format!("hypercube size {n} is not a power of two"))),
                    (None, None) => return Err(HarnessError::Config("graph `hypercube` needs --d or --n".into())),
                };
                GraphSpec::Hypercube { dim }
            }
            "complete" => GraphSpec::Complete { n: need(n, "n")? },
            "cycle" => GraphSpec::Cycle { n: need(n, "n")? },
            "clustered" => GraphSpec::Clustered { n: need(n, "n")?, d: need(d, "d")?, seed: None },
            "petersen" => GraphSpec::Petersen,
            other => return Err(HarnessError::Config(format!("unknown graph kind `{other}`"))),
        })
    }

    /// Fills in a seed derived from the master seed and the sampling mode.
    pub fn resolved(&self, master: u64) -> Self {
        let seed_for = |n: usize, d: usize| derive_seed(&[master, GRAPH_TAG, n as u64, d as u64]);
        match self.clone() {
            GraphSpec::Random { n, d, seed, mode } => GraphSpec::Random {
                n,
                d,
                seed: Some(seed.unwrap_or_else(|| seed_for(n, d))),
                mode: Some(mode.unwrap_or_else(|| auto_mode(d))),
            },
            GraphSpec::Clustered { n, d, seed } => GraphSpec::Clustered { n, d, seed: Some(seed.unwrap_or_else(|| seed_for(n, d))) },
            other => other,
        }
    }

    /// Same family at another size. `d` is ignored by families with a fixed degree.
    pub fn with_size(&self, n: usize, d: Option<usize>) -> Result<Self, HarnessError> {
        let keep_d = |old: usize| d.unwrap_or(old);
        Ok(match self {
            GraphSpec::Random { d: old, mode, .. } => GraphSpec::Random { n, d: keep_d(*old), seed: None, mode: *mode },
            GraphSpec::Clustered { d: old, .. } => GraphSpec::Clustered { n, d: keep_d(*old), seed: None },
            GraphSpec::Hypercube { .. } if n.is_power_of_two() => GraphSpec::Hypercube { dim: n.trailing_zeros() as usize },
            GraphSpec::Complete { .. } => GraphSpec::Complete { n },
            GraphSpec::Cycle { .. } => GraphSpec::Cycle { n },
            other => return Err(HarnessError::Config(format!("cannot resize graph {other:?} to n = {n}"))),
        })
    }

    pub fn uses_degree(&self) -> bool {
        matches!(self, GraphSpec::Random { .. } | GraphSpec::Clustered { .. })
    }

    /// Builds the graph; unresolved seeds default to 0.
    pub fn build(&self) -> Result<Graph, HarnessError> {
        let guard = |n: usize, d: usize| {
            if n.saturating_mul(d) > MAX_GRAPH_SLOTS {
                Err(HarnessError::Resource(format!("graph with n = {n}, d = {d} exceeds {MAX_GRAPH_SLOTS} adjacency slots")))
            } else {
                Ok(())
            }
        };
        let g = match self {
            GraphSpec::Random { n, d, seed, mode } => {
                guard(*n, *d)?;
                gen_random_regular(*n, *d, seed.unwrap_or(0), mode.unwrap_or_else(|| auto_mode(*d)))?
            }
            GraphSpec::Hypercube { dim } => {
                if *dim >= 26 {
                    return Err(HarnessError::Resource(format!("hypercube of dimension {dim} is too large")));
                }
                gen_hypercube(*dim)?
            }
            GraphSpec::Complete { n } => {
                guard(*n, n.saturating_sub(1))?;
                gen_complete(*n)?
            }
            GraphSpec::Cycle { n } => {
                guard(*n, 2)?;
                gen_cycle(*n)?
            }
            GraphSpec::Clustered { n, d, seed } => {
                guard(*n, *d)?;
                gen_clustered(*n, *d, seed.unwrap_or(0))?
            }
            GraphSpec::Petersen => petersen(),
            GraphSpec::File { path } => {
                let f = File::open(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
                Graph::read_text(BufReader::new(f))?
            }
        };
        Ok(g)
    }
}

fn default_protocol() -> ProtocolSpec {
    ProtocolSpec::two_sample()
}

fn default_trials() -> usize {
    1
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: GraphSpec,
    #[serde(default = "default_protocol")]
    pub protocol: ProtocolSpec,
    #[serde(default)]
    pub adversary: AdversarySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b0: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu0: Option<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_rounds: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub annotate_phases: bool,
    #[serde(default = "yes")]
    pub trajectory: bool,
}

impl ExperimentConfig {
    pub fn new(graph: GraphSpec) -> Self {
        Self {
            graph,
            protocol: default_protocol(),
            adversary: AdversarySpec::none(),
            b0: None,
            nu0: None,
            trials: 1,
            max_rounds: None,
            seed: 0,
            out: None,
            annotate_phases: false,
            trajectory: true,
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self, HarnessError> {
        let f = File::open(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_reader(BufReader::new(f)).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
    }

    /// Checks everything that does not need the graph.
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.trials == 0 {
            return Err(HarnessError::Config("trials must be at least 1".into()));
        }
        match (self.b0, self.nu0) {
            (Some(_), Some(_)) => return Err(HarnessError::Config("give either b0 or nu0, not both".into())),
            (None, None) => return Err(HarnessError::Config("one of b0 or nu0 is required".into())),
            (None, Some(nu)) if !(0.0..=1.0).contains(&nu) => {
                return Err(HarnessError::Config(format!("nu0 = {nu} is outside [0, 1]")));
            }
            _ => {}
        }
        if self.max_rounds == Some(0) {
            return Err(HarnessError::Config("max_rounds must be positive".into()));
        }
        Ok(())
    }

    /// Initial B-count on an `n`-vertex graph.
    pub fn initial_b(&self, n: usize) -> Result<usize, HarnessError> {
        let b = match (self.b0, self.nu0) {
            (Some(b), _) => b,
            (None, Some(nu)) => b0_from_nu0(n, nu),
            (None, None) => return Err(HarnessError::Config("one of b0 or nu0 is required".into())),
        };
        if b > n {
            return Err(HarnessError::Config(format!("b0 = {b} exceeds n = {n}")));
        }
        Ok(b)
    }
}

/// `floor(n (1 - nu0) / 2)`.
pub fn b0_from_nu0(n: usize, nu0: f64) -> usize {
    // a tiny nudge keeps exact products such as 1000 * 0.7 / 2 from rounding down
    ((n as f64 * (1.0 - nu0) / 2.0) * (1.0 + 1e-12)).floor() as usize
}

/// Parses `single`, `two`, `k-majority` (needs `k`) and `local-majority`.
pub fn parse_protocol(name: &str, sampling: Option<&str>, k: Option<usize>) -> Result<ProtocolSpec, HarnessError> {
    let rule = match name {
        "single" | "single-sample" => Rule::SingleSample,
        "two" | "two-sample" => Rule::TwoSample,
        "k-majority" | "majority" => Rule::KMajority { k: k.ok_or_else(|| HarnessError::Config("k-majority needs --k".into()))? },
        "local-majority" => Rule::LocalMajority,
        other => match other.strip_suffix("-majority").and_then(|k| k.parse().ok()) {
            Some(k) => Rule::KMajority { k },
            None => return Err(HarnessError::Config(format!("unknown protocol `{other}`"))),
        },
    };
    Ok(ProtocolSpec::new(rule, parse_sampling(sampling)?))
}

/// `with` (default) or `without`.
pub fn parse_sampling(sampling: Option<&str>) -> Result<Sampling, HarnessError> {
    match sampling {
        None | Some("with") | Some("with-replacement") => Ok(Sampling::WithReplacement),
        Some("without") | Some("without-replacement") => Ok(Sampling::WithoutReplacement),
        Some(other) => Err(HarnessError::Config(format!("unknown sampling `{other}`"))),
    }
}

/// Parses `none`, `shuffle`, `greedy-cluster`, `adjacent-pairs`,
/// `subcube[:codim]` and `corrupt:f[:to-b|to-a|balance]`.
pub fn parse_adversary(text: &str) -> Result<AdversarySpec, HarnessError> {
    let bad = || HarnessError::Config(format!("cannot parse adversary `{text}`"));
    let mut parts = text.split(':');
    let head = parts.next().unwrap_or_default();
    let rest: Vec<&str> = parts.collect();
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad());
    let kind = match (head, rest.as_slice()) {
        ("none", []) => AdversaryKind::None,
        ("shuffle", []) => AdversaryKind::Shuffle,
        ("greedy-cluster", []) => AdversaryKind::GreedyCluster,
        ("adjacent-pairs", []) => AdversaryKind::AdjacentPairs,
        ("subcube", []) => AdversaryKind::Subcube { codim: 1 },
        ("subcube", [c]) => AdversaryKind::Subcube { codim: num(c)? },
        ("corrupt", [f]) => AdversaryKind::Corrupt { f: num(f)?, policy: CorruptPolicy::ToB },
        ("corrupt", [f, p]) => {
            let policy = match *p {
                "to-b" => CorruptPolicy::ToB,
                "to-a" => CorruptPolicy::ToA,
                "balance" => CorruptPolicy::Balance,
                _ => return Err(bad()),
            };
            AdversaryKind::Corrupt { f: num(f)?, policy }
        }
        _ => return Err(bad()),
    };
    Ok(AdversarySpec::new(kind))
}

/// Values swept over; each cell is one point of the product.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub n: Vec<usize>,
    /// Empty means the graph family's own degree.
    #[serde(default)]
    pub d: Vec<usize>,
    pub nu0: Vec<f64>,
    pub protocol: Vec<ProtocolSpec>,
    #[serde(default = "no_adversary")]
    pub adversary: Vec<AdversarySpec>,
}

fn no_adversary() -> Vec<AdversarySpec> {
    vec![AdversarySpec::none()]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Graph family, trials, round cap, seed and flags shared by every cell.
    pub base: ExperimentConfig,
    pub grid: SweepGrid,
}

/// One point of a sweep grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub index: usize,
    pub graph: GraphSpec,
    pub protocol: ProtocolSpec,
    pub adversary: AdversarySpec,
    pub nu0: f64,
}

impl SweepConfig {
    pub fn cells(&self) -> Result<Vec<Cell>, HarnessError> {
        let g = &self.grid;
        if g.n.is_empty() || g.nu0.is_empty() || g.protocol.is_empty() || g.adversary.is_empty() {
            return Err(HarnessError::Config("sweep grid has an empty axis".into()));
        }
        if !g.d.is_empty() && !self.base.graph.uses_degree() {
            return Err(HarnessError::Config("this graph family has a fixed degree; leave the d axis empty".into()));
        }
        let ds: Vec<Option<usize>> = if g.d.is_empty() { vec![None] } else { g.d.iter().map(|&d| Some(d)).collect() };
        let mut cells = Vec::new();
        for &n in &g.n {
            for &d in &ds {
                let graph = self.base.graph.with_size(n, d)?.resolved(self.base.seed);
                for &nu0 in &g.nu0 {
                    if !(0.0..=1.0).contains(&nu0) {
                        return Err(HarnessError::Config(format!("nu0 = {nu0} is outside [0, 1]")));
                    }
                    for protocol in &g.protocol {
                        for adversary in &g.adversary {
                            cells.push(Cell { index: cells.len(), graph: graph.clone(), protocol: *protocol, adversary: *adversary, nu0 });
                        }
                    }
                }
            }
        }
        Ok(cells)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nu0_mapping() {
        assert_eq!(b0_from_nu0(1000, 0.4), 300);
        assert_eq!(b0_from_nu0(1000, 0.3), 350);
        assert_eq!(b0_from_nu0(16384, 0.15), 6963);
        assert_eq!(b0_from_nu0(10, 1.0), 0);
        assert_eq!(b0_from_nu0(10, 0.0), 5);
    }

    #[test]
    fn parsing() {
        assert_eq!(GraphSpec::parse("hypercube", Some(1024), None).unwrap(), GraphSpec::Hypercube { dim: 10 });
        assert!(GraphSpec::parse("hypercube", Some(1000), None).is_err());
        assert!(GraphSpec::parse("random", Some(10), None).is_err());
        assert_eq!(GraphSpec::parse("file:/tmp/g.txt", None, None).unwrap(), GraphSpec::File { path: "/tmp/g.txt".into() });
        assert_eq!(parse_protocol("3-majority", Some("without"), None).unwrap().rule, Rule::KMajority { k: 3 });
        assert!(parse_protocol("k-majority", None, None).is_err());
        assert_eq!(parse_adversary("corrupt:50").unwrap().kind, AdversaryKind::Corrupt { f: 50, policy: CorruptPolicy::ToB });
        assert_eq!(parse_adversary("subcube:2").unwrap().kind, AdversaryKind::Subcube { codim: 2 });
        assert!(parse_adversary("subcube:x").is_err());
    }

    #[test]
    fn config_json_defaults() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"graph":{"kind":"complete","n":5},"nu0":0.2}"#).unwrap();
        assert_eq!(c.protocol, ProtocolSpec::two_sample());
        assert!(c.trajectory && c.trials == 1);
        c.validate().unwrap();
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"graph":{"kind":"complete","n":5},"bogus":1}"#).is_err());
        let both = ExperimentConfig { b0: Some(1), nu0: Some(0.1), ..c };
        assert!(both.validate().is_err());
    }

    #[test]
    fn sweep_cells() {
        let base = ExperimentConfig::new(GraphSpec::Random { n: 0, d: 4, seed: None, mode: None });
        let cfg = SweepConfig {
            base,
            grid: SweepGrid {
                n: vec![16, 32],
                d: vec![],
                nu0: vec![0.2, 0.4],
                protocol: vec![ProtocolSpec::single(), ProtocolSpec::two_sample()],
                adversary: no_adversary(),
            },
        };
        let cells = cfg.cells().unwrap();
        assert_eq!(cells.len(), 8);
        assert!(cells.iter().enumerate().all(|(i, c)| c.index == i));
        assert_eq!(cells[0].graph, cells[3].graph);
        assert_ne!(cells[0].graph, cells[4].graph);
    }
}
