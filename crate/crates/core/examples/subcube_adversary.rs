//! Packing B into a subcube of Q10 before each round slows two-sample voting.
use kvote::adversary::{AdversaryKind, AdversarySpec};
use kvote::graph::gen_hypercube;
use kvote::harness::{initial_state, trial_seed};
use kvote::voting::{run, ProtocolSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = gen_hypercube(10)?;
    let b0 = 300;
    let packed = AdversarySpec::new(AdversaryKind::Subcube { codim: 1 });
    let mut slower = 0;
    let seeds = 20;
    for t in 0..seeds {
        let seed = trial_seed(7, 0, t);
        let s0 = initial_state(&g, b0, seed)?;
        let plain = run(&g, &s0, &ProtocolSpec::two_sample(), &AdversarySpec::none(), 4000, seed)?;
        let adv = run(&g, &s0, &ProtocolSpec::two_sample(), &packed, 4000, seed)?;
        slower += (adv.rounds > plain.rounds) as usize;
        println!("seed {t:2}: no adversary {:3} rounds ({:?}), subcube {:4} rounds ({:?})", plain.rounds, plain.winner, adv.rounds, adv.winner);
    }
    println!("adversary slower on {slower}/{seeds} seeds");
    Ok(())
}
