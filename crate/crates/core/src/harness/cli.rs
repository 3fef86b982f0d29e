//! Command-line front end. Flags override values read with `--config`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use super::config::{parse_adversary, parse_protocol, parse_sampling, SweepGrid};
use super::{simulate, sweep, ExperimentConfig, GraphSpec, HarnessError, SweepConfig};
use crate::graph::VertexSet;
use crate::oracle::{exact_chain_complete, exact_chain_full};
use crate::spectral::{conductance_exact, densest_small_set, second_eigenvalue, verify_mixing, DensestMode, CONDUCTANCE_MAX_N, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::voting::{expected_drift, init_state, OpinionState, Placement, ProtocolSpec, Rule};

#[derive(Parser, Debug)]
#[command(name = "kvote", version, about = "k-sample pull voting on regular graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a graph and write it in the text format.
    Gen(Common),
    /// Second and smallest eigenvalues, conductance for small graphs, phase thresholds.
    Spectral(Common),
    /// Check the expander mixing inequality over vertex-set pairs.
    VerifyMixing {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.1)]
        c: f64,
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
    },
    /// Densest vertex set of bounded size.
    Densest {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        max_size: usize,
        #[arg(long, value_enum, default_value_t = Mode::Greedy)]
        mode: Mode,
    },
    /// Run trials of one configuration and write JSON-lines.
    Simulate(Common),
    /// Run a grid of configurations; list-valued flags take comma-separated values.
    Sweep(Common),
    /// Exact absorption probabilities and expected rounds.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Use the 2^n chain even on a complete graph.
        #[arg(long)]
        full: bool,
    },
    /// Expected one-round conversions for a state.
    Drift {
        #[command(flatten)]
        common: Common,
        /// Explicit B vertices, comma separated.
        #[arg(long, value_delimiter = ',')]
        b_set: Vec<usize>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Mode {
    Exhaustive,
    Greedy,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// random | hypercube | complete | cycle | clustered | petersen | file:PATH
    #[arg(long)]
    pub graph: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub d: Vec<usize>,
    /// single | two | k-majority | <k>-majority | local-majority
    #[arg(long, value_delimiter = ',')]
    pub protocol: Vec<String>,
    /// with | without
    #[arg(long)]
    pub sampling: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    /// none | shuffle | greedy-cluster | adjacent-pairs | subcube[:codim] | corrupt:f[:policy]
    #[arg(long, value_delimiter = ',')]
    pub adversary: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub nu0: Vec<f64>,
    #[arg(long, conflicts_with = "nu0")]
    pub b0: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub max_rounds: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON config; an experiment config, or a sweep config for `sweep`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, overrides_with = "no_trajectory")]
    pub trajectory: bool,
    #[arg(long, overrides_with = "trajectory")]
    pub no_trajectory: bool,
    /// Tag rounds with their phase.
    #[arg(long)]
    pub annotate_phases: bool,
}

fn single<T: Copy>(v: &[T], flag: &str) -> Result<Option<T>, HarnessError> {
    match v {
        [] => Ok(None),
        [x] => Ok(Some(*x)),
        _ => Err(HarnessError::Config(format!("--{flag} takes a single value here"))),
    }
}

impl Common {
    fn protocol_override(&self, base: Option<ProtocolSpec>) -> Result<Vec<ProtocolSpec>, HarnessError> {
        if self.protocol.is_empty() {
            let Some(mut p) = base else { return Ok(Vec::new()) };
            if let Some(s) = &self.sampling {
                p.sampling = parse_sampling(Some(s))?;
            }
            if let (Some(k), Rule::KMajority { .. }) = (self.k, p.rule) {
                p.rule = Rule::KMajority { k };
            }
            return Ok(vec![p]);
        }
        self.protocol.iter().map(|name| parse_protocol(name, self.sampling.as_deref(), self.k)).collect()
    }

    fn graph_override(&self, base: Option<&GraphSpec>) -> Result<GraphSpec, HarnessError> {
        let n = single(&self.n, "n")?;
        let d = single(&self.d, "d")?;
        match (&self.graph, base) {
            (Some(kind), _) => GraphSpec::parse(kind, n, d),
            (None, Some(g)) => match n {
                Some(n) => g.with_size(n, d),
                None if d.is_some() && g.uses_degree() => {
                    let n = match g {
                        GraphSpec::Random { n, .. } | GraphSpec::Clustered { n, .. } => *n,
                        _ => unreachable!(),
                    };
                    g.with_size(n, d)
                }
                None => Ok(g.clone()),
            },
            (None, None) => Err(HarnessError::Config("--graph is required".into())),
        }
    }

    /// Experiment config: file (if any) with flags applied on top.
    pub fn experiment(&self) -> Result<ExperimentConfig, HarnessError> {
        let base = match &self.config {
            Some(path) => Some(ExperimentConfig::from_json_file(path)?),
            None => None,
        };
        let graph = self.graph_override(base.as_ref().map(|c| &c.graph))?;
        let mut c = base.unwrap_or_else(|| ExperimentConfig::new(graph.clone()));
        c.graph = graph;
        if let Some(p) = single(&self.protocol_override(Some(c.protocol))?, "protocol")? {
            c.protocol = p;
        }
        if let Some(a) = single(&self.adversary.iter().map(|a| parse_adversary(a)).collect::<Result<Vec<_>, _>>()?, "adversary")? {
            c.adversary = a;
        }
        if let Some(b) = self.b0 {
            c.b0 = Some(b);
            c.nu0 = None;
        }
        if let Some(nu) = single(&self.nu0, "nu0")? {
            c.nu0 = Some(nu);
            c.b0 = None;
        }
        self.apply_shared(&mut c);
        Ok(c)
    }

    fn apply_shared(&self, c: &mut ExperimentConfig) {
        if let Some(t) = self.trials {
            c.trials = t;
        }
        if let Some(m) = self.max_rounds {
            c.max_rounds = Some(m);
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(o) = &self.out {
            c.out = Some(o.clone());
        }
        if self.trajectory {
            c.trajectory = true;
        }
        if self.no_trajectory {
            c.trajectory = false;
        }
        if self.annotate_phases {
            c.annotate_phases = true;
        }
    }

    /// Sweep config: file (if any) with list flags replacing grid axes.
    pub fn sweep(&self) -> Result<SweepConfig, HarnessError> {
        // the family with placeholder sizes; the grid supplies the real ones
        let placeholder = |kind: &str| GraphSpec::parse(kind, Some(self.n.first().copied().unwrap_or(1)), Some(self.d.first().copied().unwrap_or(1)));
        let mut cfg = match &self.config {
            Some(path) => {
                let f = File::open(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
                serde_json::from_reader(std::io::BufReader::new(f)).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?
            }
            None => {
                let kind = self.graph.as_deref().ok_or_else(|| HarnessError::Config("--graph is required".into()))?;
                SweepConfig {
                    base: ExperimentConfig::new(placeholder(kind)?),
                    grid: SweepGrid { n: Vec::new(), d: Vec::new(), nu0: Vec::new(), protocol: Vec::new(), adversary: Vec::new() },
                }
            }
        };
        if let (Some(kind), Some(_)) = (&self.graph, &self.config) {
            cfg.base.graph = placeholder(kind)?;
        }
        if !self.n.is_empty() {
            cfg.grid.n = self.n.clone();
        }
        if !self.d.is_empty() {
            cfg.grid.d = self.d.clone();
        }
        if !self.nu0.is_empty() {
            cfg.grid.nu0 = self.nu0.clone();
        }
        if self.b0.is_some() {
            return Err(HarnessError::Config("sweep cells are set by --nu0".into()));
        }
        let protocols = self.protocol_override(None)?;
        if !protocols.is_empty() {
            cfg.grid.protocol = protocols;
        } else if cfg.grid.protocol.is_empty() {
            cfg.grid.protocol = vec![cfg.base.protocol];
        }
        if !self.adversary.is_empty() {
            cfg.grid.adversary = self.adversary.iter().map(|a| parse_adversary(a)).collect::<Result<_, _>>()?;
        } else if cfg.grid.adversary.is_empty() {
            cfg.grid.adversary = vec![cfg.base.adversary];
        }
        if !cfg.base.graph.uses_degree() {
            cfg.grid.d.clear();
        }
        self.apply_shared(&mut cfg.base);
        Ok(cfg)
    }
}

fn open_out<'a>(path: Option<&Path>, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>, HarnessError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| HarnessError::Io(format!("{}: {e}", p.display())))?)),
        None => Box::new(stdout),
    })
}

fn emit_json(value: &serde_json::Value, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), HarnessError> {
    let mut w = open_out(out, stdout)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn state_for(cfg: &ExperimentConfig, g: &crate::graph::Graph, b_set: &[usize]) -> Result<OpinionState, HarnessError> {
    if !b_set.is_empty() {
        let set = VertexSet::new(g.n(), b_set.iter().copied())?;
        return Ok(OpinionState::from_b_set(&set));
    }
    let b = cfg.initial_b(g.n())?;
    Ok(init_state(g, b, &Placement::Random { seed: cfg.seed })?)
}

/// Runs one command; returns the process exit code.
pub fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<(), HarnessError> {
    match cli.command {
        Command::Gen(common) => {
            let cfg = common.experiment()?;
            let g = cfg.graph.resolved(cfg.seed).build()?;
            let mut w = open_out(common.out.as_deref(), stdout)?;
            g.write_text(&mut w)?;
            w.flush()?;
        }
        Command::Spectral(common) => {
            let cfg = common.experiment()?;
            let spec = cfg.graph.resolved(cfg.seed);
            let g = spec.build()?;
            let report = second_eigenvalue(&g, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
            let conductance = if g.n() <= CONDUCTANCE_MAX_N { Some(conductance_exact(&g)?) } else { None };
            let params = super::phase_params_for(&spec, &g).ok();
            emit_json(&json!({ "n": g.n(), "d": g.d(), "spectral": report, "conductance": conductance, "phase_params": params }), common.out.as_deref(), stdout)?;
        }
        Command::VerifyMixing { common, c, budget } => {
            let cfg = common.experiment()?;
            let g = cfg.graph.resolved(cfg.seed).build()?;
            let report = verify_mixing(&g, c, budget, cfg.seed)?;
            emit_json(&serde_json::to_value(report)?, common.out.as_deref(), stdout)?;
        }
        Command::Densest { common, max_size, mode } => {
            let cfg = common.experiment()?;
            let g = cfg.graph.resolved(cfg.seed).build()?;
            let mode = match mode {
                Mode::Exhaustive => DensestMode::Exhaustive,
                Mode::Greedy => DensestMode::Greedy,
            };
            let best = densest_small_set(&g, max_size, mode, cfg.seed)?;
            emit_json(&json!({ "beta": best.beta, "size": best.set.len(), "set": best.set.members() }), common.out.as_deref(), stdout)?;
        }
        Command::Simulate(common) => {
            let cfg = common.experiment()?;
            let sim = simulate(&cfg)?;
            let mut w = open_out(cfg.out.as_deref(), stdout)?;
            sim.write_jsonl(&mut w)?;
            w.flush()?;
        }
        Command::Sweep(common) => {
            let cfg = common.sweep()?;
            let result = sweep(&cfg)?;
            match &cfg.base.out {
                Some(path) => {
                    let create = |p: &Path| File::create(p).map(BufWriter::new).map_err(|e| HarnessError::Io(format!("{}: {e}", p.display())));
                    let mut w = create(path)?;
                    result.write_csv(&mut w)?;
                    w.flush()?;
                    let mut j = create(&path.with_extension("jsonl"))?;
                    result.write_jsonl(&mut j)?;
                    j.flush()?;
                }
                None => result.write_csv(&mut *stdout)?,
            }
        }
        Command::Oracle { common, full } => {
            let cfg = common.experiment()?;
            let spec = cfg.graph.resolved(cfg.seed);
            let (sol, indexing) = match (&spec, full) {
                (GraphSpec::Complete { n }, false) => (exact_chain_complete(*n, &cfg.protocol)?, "b-count"),
                _ => (exact_chain_full(&spec.build()?, &cfg.protocol)?, "bitmask"),
            };
            let mut v = serde_json::to_value(&sol)?;
            v["indexing"] = json!(indexing);
            v["protocol"] = json!(cfg.protocol.label());
            emit_json(&v, common.out.as_deref(), stdout)?;
        }
        Command::Drift { common, b_set } => {
            let cfg = common.experiment()?;
            let g = cfg.graph.resolved(cfg.seed).build()?;
            cfg.protocol.validate(g.d())?;
            let state = state_for(&cfg, &g, &b_set)?;
            let (e_ab, e_ba) = expected_drift(&g, &state, &cfg.protocol);
            emit_json(
                &json!({ "n": g.n(), "d": g.d(), "b": state.count_b(), "protocol": cfg.protocol.label(), "e_ab": e_ab, "e_ba": e_ba, "expected_net_a": e_ba - e_ab }),
                common.out.as_deref(),
                stdout,
            )?;
        }
    }
    Ok(())
}

/// Parses `args` and runs; returns the exit code (0, 2 for bad input, 3 for size guards).
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("kvote: {e}");
            e.exit_code()
        }
    }
}
