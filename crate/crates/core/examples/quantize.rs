//! Codebooks from the mean measure: batch Lloyd and the single-pass
//! MacQueen variant on a collection of noisy three-cluster clouds.
//!
//! cargo run --example quantize

use atol::quantizer::lloyd_fit_traced;
use atol::util::seeded_rng;
use atol::{distortion, macqueen_fit, PointMeasure, QuantizerConfig, QuantizerMode};
use rand::Rng;

fn clouds(n: usize) -> Vec<PointMeasure> {
    let anchors = [[0.0, 0.0], [4.0, 0.0], [2.0, 3.0]];
    let mut rng = seeded_rng(1, 0);
    (0..n)
        .map(|_| {
            let mut m = PointMeasure::empty(2);
            for a in &anchors {
                for _ in 0..rng.gen_range(5..15) {
                    let p = [a[0] + rng.gen_range(-0.5..0.5), a[1] + rng.gen_range(-0.5..0.5)];
                    m.push(&p, 1.0).unwrap();
                }
            }
            m
        })
        .collect()
}

pub fn run() -> atol::Result<()> {
    let measures = clouds(40);
    let cfg = QuantizerConfig::new(3, 7);

    let fit = lloyd_fit_traced(&measures, &cfg)?;
    println!("lloyd: {} iterations, converged: {}", fit.iterations, fit.converged);
    for (i, d) in fit.distortion_trace.iter().enumerate() {
        println!("  iteration {i}: distortion {d:.5}");
    }
    for c in fit.codebook.centers() {
        println!("  center ({:.3}, {:.3})", c[0], c[1]);
    }

    let mac = macqueen_fit(&measures, &cfg.clone().with_mode(QuantizerMode::MinibatchMacqueen))?;
    println!(
        "macqueen: distortion {:.5} (lloyd {:.5})",
        distortion(&mac, &measures)?,
        distortion(&fit.codebook, &measures)?
    );
    println!("{}", fit.codebook.to_json(None)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> atol::Result<()> {
    run()
}
