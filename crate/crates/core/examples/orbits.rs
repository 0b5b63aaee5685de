//! Orbits of the linked twist map: one orbit up close, then a small labelled
//! dataset written as CSV with its labels and manifest.
//!
//! cargo run --example orbits [out-dir]

use atol::io::{save_labels, save_measures, sidecar_paths};
use atol::orbit::{orbit_from, DatasetManifest};
use atol::{generate_dataset, OrbitDatasetSpec};

pub fn run() -> atol::Result<()> {
    for p in orbit_from(0.5, 0.5, 3.5, 4) {
        println!("({:.7}, {:.7})", p[0], p[1]);
    }

    let spec = OrbitDatasetSpec {
        orbits_per_class: 4,
        n_iterations: 250,
        ..OrbitDatasetSpec::default()
    };
    let data = generate_dataset(&spec)?;
    let dir = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .filter(|p| p.is_dir())
        .unwrap_or_else(std::env::temp_dir);
    let out = dir.join("orbits-example.csv");
    let (labels, manifest) = sidecar_paths(&out);
    save_measures(&data, &out)?;
    save_labels(&data, &labels)?;
    let m = DatasetManifest::new(&spec, "orbits-example.csv", "orbits-example.labels.csv");
    std::fs::write(&manifest, serde_json::to_string_pretty(&m)?)?;
    println!("{} orbits of {} points -> {}", data.len(), spec.n_iterations, out.display());
    Ok(())
}

#[allow(dead_code)]
fn main() -> atol::Result<()> {
    run()
}
