use kvote::adversary::AdversarySpec;
use kvote::graph::{gen_random_regular, Graph, SimpleMode};
use kvote::rng::RoundRng;
use kvote::voting::{flip_probability, random_state, run, step, ProtocolSpec, Rule, Sampling, Winner};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn protocol(i: usize) -> ProtocolSpec {
    [
        ProtocolSpec::single(),
        ProtocolSpec::two_sample(),
        ProtocolSpec::new(Rule::TwoSample, Sampling::WithoutReplacement),
        ProtocolSpec::new(Rule::KMajority { k: 3 }, Sampling::WithReplacement),
        ProtocolSpec::new(Rule::KMajority { k: 3 }, Sampling::WithoutReplacement),
    ][i]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn graph_text_round_trip(half in 3usize..40, d in 3usize..8, seed in any::<u64>()) {
        let n = 2 * half;
        prop_assume!(d < n);
        let g = gen_random_regular(n, d, seed, SimpleMode::Repair).unwrap();
        let back = Graph::read_text(g.to_text().as_bytes()).unwrap();
        prop_assert_eq!(back.edges(), g.edges());
        prop_assert_eq!(back.to_text(), g.to_text());
    }

    #[test]
    fn step_is_reproducible_and_conserves(seed in any::<u64>(), round in 0u64..1000, b in 0usize..=200, p in 0usize..5) {
        let g = gen_random_regular(200, 6, seed ^ 0x55, SimpleMode::Repair).unwrap();
        let s = random_state(200, b, &mut ChaCha8Rng::seed_from_u64(seed));
        let p = protocol(p);
        let (s1, d1) = step(&g, &s, &p, &RoundRng::new(seed, round)).unwrap();
        let (s2, d2) = step(&g, &s, &p, &RoundRng::new(seed, round)).unwrap();
        prop_assert_eq!(s1.b_mask(), s2.b_mask());
        prop_assert_eq!(d1, d2);
        prop_assert_eq!(s1.count_b() as i64, b as i64 + d1.delta_ab as i64 - d1.delta_ba as i64);
        prop_assert!(d1.delta_ab <= 200 - b && d1.delta_ba <= b);
    }

    #[test]
    fn consensus_is_absorbing(seed in any::<u64>(), p in 0usize..5) {
        let g = gen_random_regular(64, 4, seed, SimpleMode::Repair).unwrap();
        let p = protocol(p);
        for b in [0, 64] {
            let s = random_state(64, b, &mut ChaCha8Rng::seed_from_u64(seed));
            let (next, delta) = step(&g, &s, &p, &RoundRng::new(seed, 0)).unwrap();
            prop_assert_eq!(next.count_b(), b);
            prop_assert_eq!(delta.net(), 0);
        }
    }

    #[test]
    fn flip_probability_is_monotone(d in 2usize..40, p in 0usize..5) {
        let p = protocol(p);
        prop_assume!(p.validate(d).is_ok());
        let probs: Vec<f64> = (0..=d).map(|x| flip_probability(&p, d, x)).collect();
        prop_assert_eq!(probs[0], 0.0);
        prop_assert!((probs[d] - 1.0).abs() < 1e-12);
        prop_assert!(probs.windows(2).all(|w| w[1] >= w[0] - 1e-15));
    }
}

#[test]
fn runs_are_deterministic_in_the_seed() {
    let g = gen_random_regular(500, 8, 4, SimpleMode::Repair).unwrap();
    let s = random_state(500, 180, &mut ChaCha8Rng::seed_from_u64(1));
    let p = ProtocolSpec::two_sample();
    let a = run(&g, &s, &p, &AdversarySpec::none(), 1000, 77).unwrap();
    let b = run(&g, &s, &p, &AdversarySpec::none(), 1000, 77).unwrap();
    assert_eq!(a.trajectory, b.trajectory);
    assert_eq!(a.winner, Winner::A);
    assert_eq!(a.trajectory.len(), a.rounds + 1);
    assert_eq!(*a.trajectory.last().unwrap(), 0);
}
