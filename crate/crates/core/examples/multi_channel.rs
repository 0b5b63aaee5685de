//! Observations made of several measures (for example one persistence
//! diagram per homology degree): one map per channel, budget shared.
//!
//! cargo run --example multi_channel

use atol::util::seeded_rng;
use atol::{CalibrationConfig, ContrastFamily, MultiChannelMap, PointMeasure, QuantizerConfig};
use rand::Rng;

/// Random diagram-like measure: `n` points above the diagonal.
fn diagram(rng: &mut impl Rng, n: usize, scale: f64) -> PointMeasure {
    let mut m = PointMeasure::empty(2);
    for _ in 0..n {
        let birth: f64 = rng.gen::<f64>() * scale;
        let death = birth + rng.gen::<f64>() * scale;
        m.push(&[birth, death], 1.0).unwrap();
    }
    m
}

pub fn run() -> atol::Result<()> {
    let mut rng = seeded_rng(4, 0);
    let degree0: Vec<PointMeasure> = (0..30).map(|_| diagram(&mut rng, 12, 1.0)).collect();
    let degree1: Vec<PointMeasure> = (0..30).map(|_| diagram(&mut rng, 5, 0.3)).collect();

    let cfg = CalibrationConfig::new(QuantizerConfig::new(1, 11), ContrastFamily::Laplacian);
    let map = MultiChannelMap::calibrate(&[degree0.clone(), degree1.clone()], 7, &cfg)?;
    println!("budgets per channel {:?}, total {}", map.budgets(), map.total_budget());

    let x = map.transform_multi_batch(&[degree0.clone(), degree1])?;
    println!("feature matrix {} x {}", x.rows(), x.cols());
    let lone = map.transform_multi(&[degree0[0].clone(), PointMeasure::empty(2)])?;
    println!("observation with an empty second diagram: {lone:.3?}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> atol::Result<()> {
    run()
}
