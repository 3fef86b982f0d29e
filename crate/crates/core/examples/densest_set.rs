//! Small dense sets: a graph with planted 6-cliques versus a random one.
use kvote::graph::{gen_clustered, gen_random_regular, SimpleMode};
use kvote::spectral::{densest_small_set, greedy_density_profile, DensestMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let clustered = gen_clustered(120, 9, 2)?;
    let best = densest_small_set(&clustered, 6, DensestMode::Greedy, 1)?;
    println!("clustered: best set of size <= 6 has beta={:.4} members={:?}", best.beta, best.set.members());

    let random = gen_random_regular(120, 9, 2, SimpleMode::Repair)?;
    let (profile, _) = greedy_density_profile(&random, 24, 8, 1);
    for s in [6, 12, 24] {
        println!("random 9-regular: greedy beta at size <= {s}: {:.4}", profile[s]);
    }

    let small = gen_random_regular(18, 3, 4, SimpleMode::RejectSimple)?;
    let exact = densest_small_set(&small, 5, DensestMode::Exhaustive, 0)?;
    println!("exhaustive on n=18: beta={:.4} size={}", exact.beta, exact.set.len());
    Ok(())
}
