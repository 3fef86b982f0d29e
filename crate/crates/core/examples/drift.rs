//! Exact expected conversions in one round versus sampled steps.
use kvote::graph::{gen_random_regular, SimpleMode};
use kvote::rng::RoundRng;
use kvote::voting::{expected_drift, random_state, step, ProtocolSpec, Rule, Sampling};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = gen_random_regular(1000, 16, 11, SimpleMode::Repair)?;
    let state = random_state(g.n(), 350, &mut ChaCha8Rng::seed_from_u64(3));
    let protocols = [
        ProtocolSpec::single(),
        ProtocolSpec::two_sample(),
        ProtocolSpec::new(Rule::TwoSample, Sampling::WithoutReplacement),
        ProtocolSpec::new(Rule::KMajority { k: 3 }, Sampling::WithReplacement),
    ];
    for p in &protocols {
        let (e_ab, e_ba) = expected_drift(&g, &state, p);
        let steps = 2000;
        let (mut ab, mut ba) = (0.0, 0.0);
        for r in 0..steps {
            let (_, delta) = step(&g, &state, p, &RoundRng::new(99, r))?;
            ab += delta.delta_ab as f64;
            ba += delta.delta_ba as f64;
        }
        println!(
            "{:>18}: E[AB]={e_ab:8.3} sampled={:8.3}   E[BA]={e_ba:8.3} sampled={:8.3}",
            p.label(),
            ab / steps as f64,
            ba / steps as f64
        );
    }
    Ok(())
}
