//! Random forest on vectorized orbits: held-out accuracy and the features
//! the trees rely on most.
//!
//! cargo run --release --example forest

use atol::{
    calibrate, generate_dataset, CalibrationConfig, ContrastFamily, ForestConfig, ForestModel, OrbitDatasetSpec,
    QuantizerConfig,
};

pub fn run() -> atol::Result<()> {
    let spec = OrbitDatasetSpec {
        orbits_per_class: 30,
        n_iterations: 200,
        ..OrbitDatasetSpec::default()
    };
    let data = generate_dataset(&spec)?;
    let labels = data.labels().unwrap();

    let (train, test): (Vec<usize>, Vec<usize>) = (0..data.len()).partition(|i| i % 10 < 7);
    let train_measures: Vec<_> = train.iter().map(|&i| data.measures()[i].clone()).collect();
    let map = calibrate(
        &train_measures,
        &CalibrationConfig::new(QuantizerConfig::new(16, 0), ContrastFamily::Laplacian),
    )?;
    let x = map.transform_batch(data.measures())?;

    let y_train: Vec<u32> = train.iter().map(|&i| labels[i]).collect();
    let y_test: Vec<u32> = test.iter().map(|&i| labels[i]).collect();
    let forest = ForestModel::fit(&x.select_rows(&train), &y_train, &ForestConfig::default())?;
    println!("test accuracy {:.3}", forest.accuracy(&x.select_rows(&test), &y_test)?);

    let mut ranked: Vec<(usize, f64)> = forest.feature_importances().iter().copied().enumerate().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    for (j, imp) in ranked.iter().take(5) {
        let c = map.codebook().center(*j);
        println!("center {j:>2} at ({:.2}, {:.2}): importance {imp:.3}", c[0], c[1]);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> atol::Result<()> {
    run()
}
