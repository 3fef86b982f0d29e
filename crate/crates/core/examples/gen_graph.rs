//! Sample a random regular graph, save it, and read it back.
use kvote::graph::{gen_hypercube, gen_random_regular, Graph, SimpleMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = gen_random_regular(1000, 16, 7, SimpleMode::Repair)?;
    println!("n={} d={} m={} simple={} connected={}", g.n(), g.d(), g.m(), g.is_simple(), g.is_connected());
    println!("provenance: {:?}", g.provenance());

    let text = g.to_text();
    let back = Graph::read_text(text.as_bytes())?;
    assert_eq!(back.to_text(), text);

    let q = gen_hypercube(4)?;
    println!("Q4: n={} d={} bipartite={} dim={:?}", q.n(), q.d(), q.is_bipartite(), q.hypercube_dim());
    Ok(())
}
