//! Constant bandwidths `σ = μ·10^e` against the adaptive ones, where `μ` is
//! the mean distance between codebook points.
//!
//! cargo run --release --example sweep [desk]

use atol::bench::{run_bandwidth_sweep, DatasetSource, ExperimentConfig, SWEEP_EXPONENTS};
use atol::OrbitDatasetSpec;

pub fn run() -> atol::Result<()> {
    let cfg = if std::env::args().nth(1).as_deref() == Some("desk") {
        ExperimentConfig::orbit_desk()
    } else {
        let mut cfg = ExperimentConfig::new(DatasetSource::Orbits(OrbitDatasetSpec {
            orbits_per_class: 20,
            n_iterations: 150,
            ..OrbitDatasetSpec::default()
        }));
        cfg.budget = 16;
        cfg.n_repetitions = 2;
        cfg.forest.n_trees = 20;
        cfg
    };
    let report = run_bandwidth_sweep(&cfg, &SWEEP_EXPONENTS)?;
    print!("{}", report.render());
    println!("best constant: {}", report.best_constant().label());
    Ok(())
}

#[allow(dead_code)]
fn main() -> atol::Result<()> {
    run()
}
