//! Persistent corruption: f vertices are flipped to B after every round.
use kvote::adversary::{AdversaryKind, AdversarySpec, CorruptPolicy};
use kvote::graph::{gen_random_regular, SimpleMode};
use kvote::harness::{b0_from_nu0, initial_state, trial_seed};
use kvote::voting::{run, ProtocolSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 4000;
    let g = gen_random_regular(n, 64, 1, SimpleMode::Repair)?;
    let f = (0.005 * n as f64).ceil() as usize;
    let adv = AdversarySpec::new(AdversaryKind::Corrupt { f, policy: CorruptPolicy::ToB });
    let rounds = 200 * (n as f64).log2().ceil() as usize;
    for t in 0..5 {
        let seed = trial_seed(3, 0, t);
        let s0 = initial_state(&g, b0_from_nu0(n, 0.5), seed)?;
        let rec = run(&g, &s0, &ProtocolSpec::two_sample(), &adv, rounds, seed)?;
        let tail = &rec.trajectory[rec.trajectory.len() - 5..];
        println!("trial {t}: f={f}, B after {} rounds = {} (last few: {tail:?})", rec.rounds, rec.final_b());
    }
    Ok(())
}
