//! Calibrate a vectorization map, featurize measures, and reload the map
//! from its JSON form.
//!
//! cargo run --example vectorize

use atol::{calibrate, Bandwidth, CalibrationConfig, ContrastFamily, PointMeasure, QuantizerConfig, VectorizationMap};

pub fn run() -> atol::Result<()> {
    let measures = vec![
        PointMeasure::unit(2, &[vec![0.0, 0.0], vec![0.1, 0.0]])?,
        PointMeasure::unit(2, &[vec![1.0, 1.0], vec![0.9, 1.0], vec![1.0, 0.9]])?,
        PointMeasure::new(2, &[vec![0.0, 0.1], vec![1.0, 1.1]], &[2.0, 0.5])?,
        PointMeasure::empty(2),
    ];

    let cfg = CalibrationConfig::new(QuantizerConfig::new(2, 0), ContrastFamily::Laplacian);
    let map = calibrate(&measures, &cfg)?;
    println!("sigmas {:?}", map.sigmas());
    let x = map.transform_batch(&measures)?;
    for (i, row) in x.iter_rows().enumerate() {
        println!("measure {i} (mass {:.1}): {row:.4?}", measures[i].mass());
    }

    let gaussian = VectorizationMap::with_bandwidth(map.codebook().clone(), ContrastFamily::Gaussian, Bandwidth::Constant(0.2))?;
    println!("gaussian, sigma 0.2: {:.4?}", gaussian.transform(&measures[1])?);

    let json = map.to_json()?;
    let back = VectorizationMap::from_json(&json)?;
    assert_eq!(back.transform_batch(&measures)?, x);
    println!("{json}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> atol::Result<()> {
    run()
}
