//! Batch comparison table: all four solvers on 10 seeded compressed-modes
//! instances, every solver starting from the same random point per instance.
//! Writes the CSV table and per-run traces next to the binary output.

use manpqn::bench::{format_table, ProblemKind};
use manpqn::{run_experiment, Algorithm, ExperimentConfig};

fn main() -> manpqn::Result<()> {
    let mut cfg = ExperimentConfig::new(
        ProblemKind::Cm {
            n: 64,
            r: 4,
            mu: 0.1,
        },
        Algorithm::ALL.to_vec(),
    );
    cfg.instances = 10;
    cfg.base_seed = 0;
    cfg.out_dir = Some("target/bench-out".into());

    let rows = run_experiment(&cfg)?;
    println!(
        "compressed modes, n = 64, r = 4, mu = 0.1, {} instances:",
        cfg.instances
    );
    print!("{}", format_table(&rows));
    println!("table CSV written under target/bench-out/");
    Ok(())
}
