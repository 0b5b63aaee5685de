//! Vectorization of finite weighted point measures.
//!
//! A codebook is learned by quantizing the mean measure of a training
//! collection; each measure is then summarized by integrating one contrast
//! function per codebook point, with bandwidths set from the codebook
//! geometry. The crate also ships the orbit benchmark used to evaluate the
//! features, a random forest classifier and the experiment harness around
//! them.
//!
//! ```
//! use atol::{calibrate, CalibrationConfig, ContrastFamily, PointMeasure, QuantizerConfig};
//!
//! let measures = vec![
//!     PointMeasure::dirac(&[0.0, 0.0], 1.0).unwrap(),
//!     PointMeasure::dirac(&[2.0, 0.0], 1.0).unwrap(),
//! ];
//! let cfg = CalibrationConfig::new(QuantizerConfig::new(2, 0), ContrastFamily::Laplacian);
//! let map = calibrate(&measures, &cfg).unwrap();
//! let v = map.transform(&measures[0]).unwrap();
//! assert_eq!(v.len(), 2);
//! ```

pub mod bench;
pub mod cli;
pub mod error;
pub mod forest;
pub mod io;
pub mod matrix;
pub mod measure;
pub mod orbit;
pub mod quantizer;
pub mod util;
pub mod vectorizer;

pub use error::{AtolError, Result};
pub use forest::{ForestConfig, ForestModel, MaxFeatures};
pub use matrix::Matrix;
pub use measure::{empirical_mean, MeasureCollection, PointMeasure};
pub use orbit::{generate_dataset, generate_orbit, OrbitDatasetSpec, OrbitSpec};
pub use quantizer::{distortion, fit, lloyd_fit, macqueen_fit, voronoi_assign, Codebook, QuantizerConfig, QuantizerMode};
pub use vectorizer::{
    calibrate, compute_sigmas, split_budget, Bandwidth, CalibrationConfig, ContrastFamily, MultiChannelMap,
    VectorizationMap,
};
