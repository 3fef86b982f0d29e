//! Single-sample versus two-sample completion times over a size grid.
use kvote::harness::{sweep, ExperimentConfig, GraphSpec, SweepConfig, SweepGrid};
use kvote::voting::ProtocolSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SweepConfig {
        base: ExperimentConfig { trials: 40, seed: 5, trajectory: false, ..ExperimentConfig::new(GraphSpec::Complete { n: 32 }) },
        grid: SweepGrid {
            n: vec![32, 64, 128, 256],
            d: vec![],
            nu0: vec![0.3],
            protocol: vec![ProtocolSpec::single(), ProtocolSpec::two_sample()],
            adversary: vec![Default::default()],
        },
    };
    let result = sweep(&cfg)?;
    result.write_csv(std::io::stdout().lock())?;
    Ok(())
}
