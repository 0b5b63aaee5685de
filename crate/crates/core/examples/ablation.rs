//! One-parameter-at-a-time study: budget, contrast family, calibration
//! fraction, and the fixed grid codebook.
//!
//! cargo run --release --example ablation [desk]

use atol::bench::{run_ablation, AblationAxes, DatasetSource, ExperimentConfig};
use atol::OrbitDatasetSpec;

pub fn run() -> atol::Result<()> {
    let (cfg, axes) = if std::env::args().nth(1).as_deref() == Some("desk") {
        (ExperimentConfig::orbit_desk(), AblationAxes::default())
    } else {
        let mut cfg = ExperimentConfig::new(DatasetSource::Orbits(OrbitDatasetSpec {
            orbits_per_class: 20,
            n_iterations: 150,
            ..OrbitDatasetSpec::default()
        }));
        cfg.budget = 16;
        cfg.n_repetitions = 2;
        cfg.forest.n_trees = 20;
        let axes = AblationAxes {
            budgets: vec![4, 16],
            ..AblationAxes::default()
        };
        (cfg, axes)
    };
    print!("{}", run_ablation(&cfg, &axes)?.render());
    Ok(())
}

#[allow(dead_code)]
fn main() -> atol::Result<()> {
    run()
}
