//! Noisy copies of two sources, vectorized with a codebook fitted on the
//! pooled sample: the gap between sources should exceed the gap within one.
//!
//! cargo run --release --example separation [noise] [trials]

use atol::bench::{separation_probe, SeparationConfig};
use atol::util::derive_seed;

pub fn run() -> atol::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let noise: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.01);
    let trials: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(20);

    for (name, make) in [
        ("two diracs, b=2", SeparationConfig::two_diracs as fn(f64, usize, u64) -> SeparationConfig),
        ("square corners, b=4", SeparationConfig::corners),
    ] {
        let mut separated = 0;
        let mut margin = f64::INFINITY;
        for t in 0..trials {
            let r = separation_probe(&make(noise, 50, derive_seed(9, t)))?;
            margin = margin.min(r.min_inter - r.max_intra);
            separated += r.separated() as u64;
        }
        println!("{name:<22} separated {separated}/{trials}  smallest margin {margin:+.4}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> atol::Result<()> {
    run()
}
