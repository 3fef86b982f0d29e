//! Expander mixing: how far edge counts between vertex sets stray from d|X||Y|/n.
use kvote::graph::{gen_hypercube, gen_random_regular, SimpleMode};
use kvote::spectral::{second_eigenvalue, verify_mixing, DEFAULT_MAX_ITER, DEFAULT_TOL};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // small graphs are checked over every disjoint pair
    let q = gen_hypercube(3)?;
    let rep = verify_mixing(&q, 0.2, 1_000_000, 0)?;
    println!("Q3 exhaustive={} pairs={} alpha_required={:.4}", rep.exhaustive, rep.pairs_tested, rep.alpha_required);

    // large graphs are sampled
    let g = gen_random_regular(2000, 32, 5, SimpleMode::Repair)?;
    let lambda = second_eigenvalue(&g, DEFAULT_TOL, DEFAULT_MAX_ITER)?.lambda_g;
    let rep = verify_mixing(&g, 0.05, 20_000, 1)?;
    println!(
        "random 32-regular n=2000: sampled pairs={} worst {:?} deviation={:.4} alpha_required={:.4} lambdaG={lambda:.4}",
        rep.pairs_tested, rep.worst_pair, rep.worst_deviation, rep.alpha_required
    );
    Ok(())
}
