//! Seeded experiments: single-cell simulations, grid sweeps, statistics and
//! output formats.
//!
//! Trial `t` of cell `c` runs with seed `derive_seed([master, c, t])`; a
//! standalone simulation is cell 0. Records are collected in trial order, so
//! output bytes do not depend on the number of worker threads.

pub mod cli;
pub mod config;
pub mod phases;
pub mod stats;

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::AdversarySpec;
use crate::graph::{Graph, GraphError};
use crate::oracle::OracleError;
use crate::rng::derive_seed;
use crate::spectral::{phase_params, second_eigenvalue, GraphKind, PhaseParams, SpectralError, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::voting::{default_max_rounds, init_state, run, OpinionState, Placement, ProtocolSpec, VotingError, Winner};

pub use config::{b0_from_nu0, Cell, ExperimentConfig, GraphSpec, SweepConfig, SweepGrid};
pub use phases::{annotate_phases, Phase, PhaseAnnotation, PhaseStats};
pub use stats::{chernoff_bounds, ChernoffBounds};

const INIT_TAG: u64 = 0x696E_6974;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("refused: {0}")]
    Resource(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("trajectory was not recorded")]
    MissingTrajectory,
    #[error("{name} = {value} is out of range")]
    OutOfRange { name: &'static str, value: f64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Voting(#[from] VotingError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl HarnessError {
    /// 2 for bad input, 3 for size guards, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::OutOfRange { .. } | HarnessError::Voting(_) => 2,
            HarnessError::Resource(_) => 3,
            HarnessError::Graph(GraphError::RetryExhausted { .. }) => 3,
            HarnessError::Graph(GraphError::Io(_)) => 1,
            HarnessError::Graph(_) => 2,
            HarnessError::Spectral(SpectralError::TooLarge { .. } | SpectralError::TooLargeForExhaustive { .. }) => 3,
            HarnessError::Spectral(SpectralError::OutOfRange { .. } | SpectralError::Disconnected) => 2,
            HarnessError::Oracle(OracleError::TooLarge { .. }) => 3,
            HarnessError::Oracle(OracleError::TooSmall { .. } | OracleError::Protocol(_) | OracleError::SizeMismatch { .. }) => 2,
            HarnessError::Oracle(OracleError::Disconnected) => 2,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

/// One trial as written to JSON-lines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<usize>,
    pub trial: usize,
    pub seed: u64,
    pub protocol: String,
    pub n: usize,
    pub d: usize,
    pub b0: usize,
    pub rounds: usize,
    pub winner: Winner,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phases: Option<PhaseAnnotation>,
}

/// First line of a simulation's JSON-lines output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationHeader {
    pub config: ExperimentConfig,
    pub graph: GraphInfo,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_params: Option<PhaseParams>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphInfo {
    pub n: usize,
    pub d: usize,
    pub is_simple: bool,
    pub generator: String,
    pub uniform: bool,
}

impl GraphInfo {
    pub fn of(g: &Graph) -> Self {
        let p = g.provenance();
        Self { n: g.n(), d: g.d(), is_simple: g.is_simple(), generator: p.generator.clone(), uniform: p.uniform }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Simulation {
    pub header: SimulationHeader,
    pub records: Vec<TrialRecord>,
}

/// Phase thresholds for a graph: the random-regular formulas for sampled
/// graphs, otherwise `alpha = lambda_G` measured by power iteration.
pub fn phase_params_for(spec: &GraphSpec, g: &Graph) -> Result<PhaseParams, HarnessError> {
    let kind = match spec {
        GraphSpec::Random { .. } => GraphKind::RandomRegular,
        _ => {
            let lambda = match second_eigenvalue(g, DEFAULT_TOL, DEFAULT_MAX_ITER) {
                Ok(r) => r.lambda_g,
                Err(SpectralError::NotConverged(r)) => r.lambda_g,
                Err(e) => return Err(e.into()),
            };
            GraphKind::Expander { lambda }
        }
    };
    Ok(phase_params(g.n(), g.d(), kind, None, None)?)
}

/// Seed of trial `t` in cell `cell`.
pub fn trial_seed(master: u64, cell: u64, t: usize) -> u64 {
    derive_seed(&[master, cell, t as u64])
}

/// The uniformly random start of a trial with `b0` B vertices.
pub fn initial_state(g: &Graph, b0: usize, trial_seed: u64) -> Result<OpinionState, HarnessError> {
    Ok(init_state(g, b0, &Placement::Random { seed: derive_seed(&[trial_seed, INIT_TAG]) })?)
}

/// Everything one cell needs to run its trials.
struct CellRun<'a> {
    g: &'a Graph,
    protocol: ProtocolSpec,
    adversary: AdversarySpec,
    b0: usize,
    max_rounds: usize,
    master: u64,
    cell: u64,
    keep_trajectory: bool,
    phases: Option<&'a PhaseParams>,
}

impl CellRun<'_> {
    fn trial(&self, t: usize) -> Result<TrialRecord, HarnessError> {
        let seed = trial_seed(self.master, self.cell, t);
        let state0 = initial_state(self.g, self.b0, seed)?;
        let rec = run(self.g, &state0, &self.protocol, &self.adversary, self.max_rounds, seed)?;
        let phases = match self.phases {
            Some(p) => Some(annotate_phases(Some(&rec.trajectory), self.g.n(), p)?),
            None => None,
        };
        let out = TrialRecord {
            cell: None,
            trial: t,
            seed,
            protocol: self.protocol.label(),
            n: self.g.n(),
            d: self.g.d(),
            b0: self.b0,
            rounds: rec.rounds,
            winner: rec.winner,
            trajectory: self.keep_trajectory.then_some(rec.trajectory),
            phases,
        };
        Ok(out)
    }

    fn all(&self, trials: usize) -> Result<Vec<TrialRecord>, HarnessError> {
        (0..trials).into_par_iter().map(|t| self.trial(t)).collect()
    }
}

/// Resolves graph seed, `b0` and the round cap, builds the graph and runs all trials.
pub fn simulate(config: &ExperimentConfig) -> Result<Simulation, HarnessError> {
    config.validate()?;
    let graph_spec = config.graph.resolved(config.seed);
    let g = graph_spec.build()?;
    simulate_on(config, &graph_spec, &g)
}

/// As [`simulate`] on an already built graph.
pub fn simulate_on(config: &ExperimentConfig, graph_spec: &GraphSpec, g: &Graph) -> Result<Simulation, HarnessError> {
    config.validate()?;
    config.protocol.validate(g.d())?;
    let b0 = config.initial_b(g.n())?;
    let max_rounds = config.max_rounds.unwrap_or_else(|| default_max_rounds(g, &config.protocol, &config.adversary));
    let resolved = ExperimentConfig { graph: graph_spec.clone(), max_rounds: Some(max_rounds), ..config.clone() };
    let params = if config.annotate_phases { Some(phase_params_for(graph_spec, g)?) } else { None };
    let cell = CellRun {
        g,
        protocol: config.protocol,
        adversary: config.adversary,
        b0,
        max_rounds,
        master: config.seed,
        cell: 0,
        keep_trajectory: config.trajectory,
        phases: params.as_ref(),
    };
    let records = cell.all(config.trials)?;
    Ok(Simulation { header: SimulationHeader { config: resolved, graph: GraphInfo::of(g), phase_params: params }, records })
}

impl Simulation {
    pub fn write_jsonl(&self, mut out: impl Write) -> Result<(), HarnessError> {
        serde_json::to_writer(&mut out, &self.header)?;
        out.write_all(b"\n")?;
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl(input: impl BufRead) -> Result<Self, HarnessError> {
        let mut lines = input.lines();
        let first = lines.next().ok_or_else(|| HarnessError::Io("empty input".into()))??;
        let header = serde_json::from_str(&first)?;
        let records = lines.map(|l| Ok(serde_json::from_str(&l?)?)).collect::<Result<_, HarnessError>>()?;
        Ok(Self { header, records })
    }
}

/// One CSV row of a sweep. The first ten columns are the core aggregate; the
/// rest are confidence annotations on the A-win rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub d: usize,
    pub protocol: String,
    pub adversary: String,
    pub nu0: f64,
    pub trials: usize,
    #[serde(rename = "wins_A")]
    pub wins_a: usize,
    /// Over trials that finished; empty when all timed out.
    pub median_rounds: Option<f64>,
    pub mean_rounds: Option<f64>,
    pub timeouts: usize,
    #[serde(rename = "wins_B")]
    pub wins_b: usize,
    pub win_rate_a: f64,
    pub normal_lo: f64,
    pub normal_hi: f64,
    pub chernoff_lo: f64,
    pub chernoff_hi: f64,
}

impl SweepRow {
    /// Aggregates a cell's trials.
    pub fn from_trials(n: usize, d: usize, protocol: &ProtocolSpec, adversary: &AdversarySpec, nu0: f64, trials: &[TrialRecord]) -> Self {
        let count = |w: Winner| trials.iter().filter(|r| r.winner == w).count();
        let (wins_a, wins_b, timeouts) = (count(Winner::A), count(Winner::B), count(Winner::Timeout));
        let finished: Vec<usize> = trials.iter().filter(|r| r.winner != Winner::Timeout).map(|r| r.rounds).collect();
        let total = trials.len();
        let (normal_lo, normal_hi) = stats::normal_interval(wins_a, total.max(1));
        let (chernoff_lo, chernoff_hi) = stats::chernoff_interval(wins_a, total.max(1));
        Self {
            n,
            d,
            protocol: protocol.label(),
            adversary: adversary.kind.label(),
            nu0,
            trials: total,
            wins_a,
            median_rounds: stats::median(&finished),
            mean_rounds: stats::mean(&finished),
            timeouts,
            wins_b,
            win_rate_a: wins_a as f64 / total.max(1) as f64,
            normal_lo,
            normal_hi,
            chernoff_lo,
            chernoff_hi,
        }
    }
}

/// First line of a sweep's JSON-lines output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepHeader {
    pub sweep: SweepConfig,
    pub cells: Vec<CellInfo>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellInfo {
    #[serde(flatten)]
    pub cell: Cell,
    pub b0: usize,
    pub max_rounds: usize,
    pub graph_info: GraphInfo,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub header: SweepHeader,
    pub rows: Vec<SweepRow>,
    /// Trials of all cells, by cell then trial index.
    pub records: Vec<TrialRecord>,
}

/// Runs every cell of the grid. Graphs are shared between cells of equal size.
pub fn sweep(config: &SweepConfig) -> Result<Sweep, HarnessError> {
    let base = &config.base;
    if base.trials == 0 {
        return Err(HarnessError::Config("trials must be at least 1".into()));
    }
    if base.max_rounds == Some(0) {
        return Err(HarnessError::Config("max_rounds must be positive".into()));
    }
    let cells = config.cells()?;
    let mut graphs: BTreeMap<String, (GraphSpec, Graph)> = BTreeMap::new();
    for c in &cells {
        let key = serde_json::to_string(&c.graph)?;
        if let std::collections::btree_map::Entry::Vacant(e) = graphs.entry(key) {
            e.insert((c.graph.clone(), c.graph.build()?));
        }
    }
    let graph_of = |c: &Cell| &graphs[&serde_json::to_string(&c.graph).expect("graph spec serializes")];

    let mut infos = Vec::with_capacity(cells.len());
    for c in &cells {
        let (_, g) = graph_of(c);
        c.protocol.validate(g.d())?;
        let b0 = b0_from_nu0(g.n(), c.nu0);
        let max_rounds = base.max_rounds.unwrap_or_else(|| default_max_rounds(g, &c.protocol, &c.adversary));
        infos.push(CellInfo { cell: c.clone(), b0, max_rounds, graph_info: GraphInfo::of(g) });
    }
    let params: BTreeMap<String, PhaseParams> = if base.annotate_phases {
        graphs.iter().map(|(k, (spec, g))| Ok((k.clone(), phase_params_for(spec, g)?))).collect::<Result<_, HarnessError>>()?
    } else {
        BTreeMap::new()
    };

    let per_cell: Vec<Vec<TrialRecord>> = infos
        .par_iter()
        .map(|info| {
            let (_, g) = graph_of(&info.cell);
            let key = serde_json::to_string(&info.cell.graph).expect("graph spec serializes");
            let run = CellRun {
                g,
                protocol: info.cell.protocol,
                adversary: info.cell.adversary,
                b0: info.b0,
                max_rounds: info.max_rounds,
                master: base.seed,
                cell: info.cell.index as u64,
                keep_trajectory: base.trajectory,
                phases: params.get(&key),
            };
            let mut recs = run.all(base.trials)?;
            recs.iter_mut().for_each(|r| r.cell = Some(info.cell.index));
            Ok(recs)
        })
        .collect::<Result<_, HarnessError>>()?;

    let rows = infos
        .iter()
        .zip(&per_cell)
        .map(|(info, recs)| SweepRow::from_trials(info.graph_info.n, info.graph_info.d, &info.cell.protocol, &info.cell.adversary, info.cell.nu0, recs))
        .collect();
    Ok(Sweep { header: SweepHeader { sweep: config.clone(), cells: infos }, rows, records: per_cell.into_iter().flatten().collect() })
}

impl Sweep {
    /// CSV with a leading `#` comment line holding the sweep config as JSON.
    pub fn write_csv(&self, mut out: impl Write) -> Result<(), HarnessError> {
        writeln!(out, "# {}", serde_json::to_string(&self.header.sweep)?)?;
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> Result<(), HarnessError> {
        serde_json::to_writer(&mut out, &self.header)?;
        out.write_all(b"\n")?;
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

pub fn read_sweep_csv(input: impl std::io::Read) -> Result<Vec<SweepRow>, HarnessError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

/// Reads sweep JSON-lines and recomputes each cell's row from its trials.
pub fn rows_from_jsonl(input: impl BufRead) -> Result<Vec<SweepRow>, HarnessError> {
    let mut lines = input.lines();
    let first = lines.next().ok_or_else(|| HarnessError::Io("empty input".into()))??;
    let header: SweepHeader = serde_json::from_str(&first)?;
    let mut by_cell: Vec<Vec<TrialRecord>> = vec![Vec::new(); header.cells.len()];
    for line in lines {
        let rec: TrialRecord = serde_json::from_str(&line?)?;
        let c = rec.cell.ok_or_else(|| HarnessError::Io("sweep record without cell index".into()))?;
        by_cell.get_mut(c).ok_or_else(|| HarnessError::Io(format!("cell {c} not in header")))?.push(rec);
    }
    Ok(header
        .cells
        .iter()
        .zip(&by_cell)
        .map(|(info, recs)| SweepRow::from_trials(info.graph_info.n, info.graph_info.d, &info.cell.protocol, &info.cell.adversary, info.cell.nu0, recs))
        .collect())
}
