//! k-sample pull voting on regular graphs.
//!
//! * [`graph`] builds and queries regular (multi)graphs.
//! * [`spectral`] measures the expansion hypotheses: second eigenvalue,
//!   conductance, edge mixing and small-set density.
//! * [`voting`] runs the synchronous dynamics and computes exact drifts.
//! * [`adversary`] rearranges or corrupts opinions between rounds.
//! * [`oracle`] solves the opinion Markov chain exactly on small instances.
//! * [`harness`] wires everything into seeded, reproducible experiments.

pub mod graph;
pub mod rng;
pub mod spectral;
pub mod adversary;
pub mod voting;
pub mod oracle;
pub mod harness;
