//! Repeated 70/30 experiments on orbit data. Pass `full` for the 5000-orbit
//! benchmark, `desk` for the 1000-orbit one; the default is a quick run.
//!
//! cargo run --release --example experiment [quick|desk|full]

use atol::bench::{run_experiment, DatasetSource, ExperimentConfig};
use atol::OrbitDatasetSpec;

pub fn run() -> atol::Result<()> {
    let cfg = match std::env::args().nth(1).as_deref() {
        Some("full") => ExperimentConfig::orbit5k_table3(),
        Some("desk") => ExperimentConfig::orbit_desk(),
        _ => {
            let mut cfg = ExperimentConfig::new(DatasetSource::Orbits(OrbitDatasetSpec {
                orbits_per_class: 30,
                n_iterations: 200,
                ..OrbitDatasetSpec::default()
            }));
            cfg.budget = 16;
            cfg.n_repetitions = 3;
            cfg.forest.n_trees = 30;
            cfg
        }
    };
    let report = run_experiment(&cfg)?;
    println!("{}", report.description);
    println!("accuracy {} over {} repetitions", report.summary(), report.accuracies.len());
    println!("vectorization {:.3}s per repetition on {} thread(s)", report.vectorization_seconds, report.host.threads);
    Ok(())
}

#[allow(dead_code)]
fn main() -> atol::Result<()> {
    run()
}
