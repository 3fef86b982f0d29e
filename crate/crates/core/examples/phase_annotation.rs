//! Split a two-sample run into its three phases and measure per-round contraction.
use kvote::harness::{annotate_phases, initial_state, phase_params_for, trial_seed, GraphSpec};
use kvote::adversary::AdversarySpec;
use kvote::voting::{run, ProtocolSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = GraphSpec::Random { n: 10_000, d: 64, seed: None, mode: None }.resolved(1);
    let g = spec.build()?;
    let params = phase_params_for(&spec, &g)?;
    println!("c={:.4} omega={} gamma={:.4}", params.c, params.omega, params.gamma);
    let seed = trial_seed(1, 0, 0);
    let s0 = initial_state(&g, 3500, seed)?;
    let rec = run(&g, &s0, &ProtocolSpec::two_sample(), &AdversarySpec::none(), 10_000, seed)?;
    let ann = annotate_phases(Some(&rec.trajectory), g.n(), &params)?;
    println!("trajectory: {:?}", rec.trajectory);
    println!("tags:       {:?}", ann.tags);
    for (name, s) in [("I", &ann.phase_1), ("II", &ann.phase_2), ("III", &ann.phase_3)] {
        println!("phase {name:>3}: {} rounds, median B'/B = {:?}", s.rounds, s.median_ratio);
    }
    Ok(())
}
