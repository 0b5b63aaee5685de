//! Long-format measure files, label sidecars and feature matrices.
//!
//! cargo run --example csv_io

use std::path::Path;

use atol::io::{attach_labels, read_labels, read_measures, write_features, write_measures};
use atol::{calibrate, CalibrationConfig, ContrastFamily, QuantizerConfig};

const MEASURES: &str = "measure_id,weight,x1,x2
3,1.0,0.9,1.0
0,1.0,0.0,0.0
3,0.5,1.1,0.9
0,2.0,0.1,0.0
7,1.0,0.5,0.5
";

const LABELS: &str = "measure_id,label
0,0
3,1
7,1
9,0
";

pub fn run() -> atol::Result<()> {
    // rows need not be grouped; ids order the collection
    let data = read_measures(MEASURES.as_bytes(), Path::new("inline.csv"))?;
    println!("ids {:?}, sizes {:?}", data.ids(), data.measures().iter().map(|m| m.len()).collect::<Vec<_>>());

    // measure 9 has a label but no points: it becomes an empty measure
    let labels = read_labels(LABELS.as_bytes(), Path::new("inline.labels.csv"))?;
    let labelled = attach_labels(data, &labels, Path::new("inline.labels.csv"))?;
    println!("labelled ids {:?}, labels {:?}", labelled.ids(), labelled.labels().unwrap());

    print!("{}", write_measures(&labelled));
    let map = calibrate(
        labelled.measures(),
        &CalibrationConfig::new(QuantizerConfig::new(2, 0), ContrastFamily::Laplacian),
    )?;
    print!("{}", write_features(labelled.ids(), &map.transform_batch(labelled.measures())?));

    let broken = "measure_id,weight,x1,x2\n0,1.0,0.0\n";
    if let Err(e) = read_measures(broken.as_bytes(), Path::new("broken.csv")) {
        println!("rejected: {e}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> atol::Result<()> {
    run()
}
