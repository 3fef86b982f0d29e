//! Seeded trials of one configuration, written as JSON-lines.
use kvote::harness::{simulate, ExperimentConfig, GraphSpec};
use kvote::voting::Winner;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig {
        nu0: Some(0.3),
        trials: 100,
        seed: 2024,
        trajectory: false,
        ..ExperimentConfig::new(GraphSpec::Random { n: 4096, d: 16, seed: None, mode: None })
    };
    let sim = simulate(&cfg)?;
    let wins = sim.records.iter().filter(|r| r.winner == Winner::A).count();
    let mut rounds: Vec<usize> = sim.records.iter().map(|r| r.rounds).collect();
    rounds.sort_unstable();
    println!("A won {wins}/{} trials; median rounds {}", sim.records.len(), rounds[rounds.len() / 2]);

    let mut out = Vec::new();
    sim.write_jsonl(&mut out)?;
    let text = String::from_utf8(out)?;
    for line in text.lines().take(3) {
        println!("{line}");
    }
    Ok(())
}
