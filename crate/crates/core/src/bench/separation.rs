use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AtolError, Result};
use crate::measure::PointMeasure;
use crate::quantizer::{self, QuantizerConfig, QuantizerMode};
use crate::util::{derive_seed, seeded_rng};
use crate::vectorizer::{Bandwidth, ContrastFamily, VectorizationMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationConfig {
    pub source_a: PointMeasure,
    pub source_b: PointMeasure,
    pub n_per_source: usize,
    /// Radius of the uniform ball each atom is perturbed within.
    pub noise: f64,
    pub budget: usize,
    pub family: ContrastFamily,
    pub seed: u64,
}

impl SeparationConfig {
    /// Unit Diracs at `(0, 0)` and `(1, 1)`, two codebook points.
    pub fn two_diracs(noise: f64, n_per_source: usize, seed: u64) -> Self {
        Self {
            source_a: PointMeasure::dirac(&[0.0, 0.0], 1.0).expect("finite atom"),
            source_b: PointMeasure::dirac(&[1.0, 1.0], 1.0).expect("finite atom"),
            n_per_source,
            noise,
            budget: 2,
            family: ContrastFamily::Laplacian,
            seed,
        }
    }

    /// Three unit atoms on corners of the unit square; the sources share
    /// `(0, 0)` and `(1, 0)` and differ in the third corner. Four codebook
    /// points.
    pub fn corners(noise: f64, n_per_source: usize, seed: u64) -> Self {
        let a = PointMeasure::unit(2, &[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]);
        let b = PointMeasure::unit(2, &[vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]]);
        Self {
            source_a: a.expect("finite atoms"),
            source_b: b.expect("finite atoms"),
            budget: 4,
            ..Self::two_diracs(noise, n_per_source, seed)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    /// Largest ∞-distance between vectorizations of two samples of the same
    /// source.
    pub max_intra: f64,
    /// Smallest ∞-distance between vectorizations of samples of different
    /// sources.
    pub min_inter: f64,
    pub budget: usize,
}

impl SeparationReport {
    pub fn separated(&self) -> bool {
        self.min_inter > self.max_intra
    }
}

/// Standard normal draw (Box–Muller).
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Uniform point in the centered ball of radius `rho` in dimension `d`.
fn ball_point(rng: &mut ChaCha8Rng, d: usize, rho: f64) -> Vec<f64> {
    let mut dir: Vec<f64> = (0..d).map(|_| normal(rng)).collect();
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    let radius = rho * rng.gen::<f64>().powf(1.0 / d as f64);
    let scale = if norm > 0.0 { radius / norm } else { 0.0 };
    dir.iter_mut().for_each(|v| *v *= scale);
    dir
}

fn perturbed(source: &PointMeasure, rho: f64, rng: &mut ChaCha8Rng) -> Result<PointMeasure> {
    let d = source.dim();
    let mut coords = Vec::with_capacity(source.coords().len());
    for (x, _) in source.atoms() {
        let e = ball_point(rng, d, rho);
        coords.extend(x.iter().zip(&e).map(|(a, b)| a + b));
    }
    PointMeasure::from_flat(d, coords, source.weights().to_vec())
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Draws `n` noisy copies of each source, calibrates on the pooled sample
/// without looking at which source produced which copy, and reports the
/// within-source and between-source gaps of the vectorizations.
pub fn separation_probe(cfg: &SeparationConfig) -> Result<SeparationReport> {
    let d = cfg.source_a.dim();
    if cfg.source_b.dim() != d {
        return Err(AtolError::DimensionMismatch {
            expected: d,
            found: cfg.source_b.dim(),
        });
    }
    if cfg.n_per_source < 2 {
        return Err(AtolError::InvalidConfig("n_per_source must be at least 2".into()));
    }
    if !(cfg.noise >= 0.0 && cfg.noise.is_finite()) {
        return Err(AtolError::InvalidConfig(format!("noise must be non-negative, got {}", cfg.noise)));
    }
    let mut rng = seeded_rng(cfg.seed, 0);
    let mut sample = Vec::with_capacity(2 * cfg.n_per_source);
    for source in [&cfg.source_a, &cfg.source_b] {
        for _ in 0..cfg.n_per_source {
            sample.push(perturbed(source, cfg.noise, &mut rng)?);
        }
    }
    let qcfg = QuantizerConfig::new(cfg.budget, derive_seed(cfg.seed, 1)).with_mode(QuantizerMode::BatchLloyd);
    let codebook = quantizer::fit(&sample, &qcfg)?;
    let features = VectorizationMap::with_bandwidth(codebook, cfg.family, Bandwidth::Adaptive)?.transform_batch(&sample)?;
    let n = cfg.n_per_source;
    let mut max_intra = 0.0f64;
    let mut min_inter = f64::INFINITY;
    for i in 0..2 * n {
        for j in i + 1..2 * n {
            let g = sup_dist(features.row(i), features.row(j));
            if (i < n) == (j < n) {
                max_intra = max_intra.max(g);
            } else {
                min_inter = min_inter.min(g);
            }
        }
    }
    Ok(SeparationReport {
        max_intra,
        min_inter,
        budget: cfg.budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_diracs() {
        let cfg = SeparationConfig {
            source_a: PointMeasure::dirac(&[0.0, 0.0], 1.0).unwrap(),
            source_b: PointMeasure::dirac(&[1.0, 1.0], 1.0).unwrap(),
            n_per_source: 5,
            noise: 0.0,
            budget: 2,
            family: ContrastFamily::Laplacian,
            seed: 3,
        };
        let r = separation_probe(&cfg).unwrap();
        assert_eq!(r.max_intra, 0.0);
        assert!(r.min_inter > 0.0);
    }

    #[test]
    fn ball_points_stay_inside() {
        let mut rng = seeded_rng(5, 0);
        for d in [1, 2, 7] {
            for _ in 0..500 {
                let p = ball_point(&mut rng, d, 0.3);
                assert!(p.iter().map(|v| v * v).sum::<f64>().sqrt() <= 0.3 + 1e-15);
            }
        }
    }
}
