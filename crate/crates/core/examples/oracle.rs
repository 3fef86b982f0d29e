//! Exact win probabilities and completion times on small graphs.
use kvote::graph::{gen_complete, gen_cycle, VertexSet};
use kvote::oracle::{exact_chain_complete, exact_chain_full, pull_voting_win_prob, synchronous_single_sample_win_prob};
use kvote::voting::ProtocolSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let k3 = exact_chain_complete(3, &ProtocolSpec::two_sample())?;
    println!("K3 two-sample from b=1: P(A wins)={:.12} (10/11={:.12})", k3.win_prob_a[1], 10.0 / 11.0);

    let k32 = exact_chain_complete(32, &ProtocolSpec::two_sample())?;
    for b in [4, 8, 16] {
        println!("K32 two-sample b={b:2}: P(A)={:.6} E[rounds]={:.4}", k32.win_prob_a[b], k32.expected_rounds[b]);
    }

    // the full chain indexes states by B bitmask
    let full = exact_chain_full(&gen_complete(5)?, &ProtocolSpec::two_sample())?;
    println!("K5 full chain: {} states, residual {:.1e}", full.states, full.solver_residual);

    // single-sample on an even cycle: two interleaved voter chains
    let c6 = gen_cycle(6)?;
    let sol = exact_chain_full(&c6, &ProtocolSpec::single())?;
    let b_mask = 0b000011usize;
    let a = VertexSet::new(6, (0..6).filter(|v| (b_mask >> v) & 1 == 0))?;
    println!(
        "C6, B={{0,1}}: exact={:.6} d(A)/2m={:.6} parity product={:.6}",
        sol.win_prob_a[b_mask],
        pull_voting_win_prob(&c6, &a)?,
        synchronous_single_sample_win_prob(&c6, &a)?
    );
    Ok(())
}
