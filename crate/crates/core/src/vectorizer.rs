//! The featurisation map: a frozen codebook plus one contrast function per
//! center, integrated against input measures.
//!
//! Coordinate `i` of the embedding of `m` is `∫ ψ_i dm` where
//!
//! * Laplacian: `ψ_i(x) = exp(-‖x - c_i‖ / σ_i)`
//! * Gaussian:  `ψ_i(x) = exp(-‖x - c_i‖² / σ_i²)`
//!
//! and, in adaptive mode, `σ_i` is half the distance from `c_i` to its
//! nearest other center.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AtolError, Result};
use crate::matrix::Matrix;
use crate::measure::{check_dims, PointMeasure};
use crate::quantizer::{self, sq_dist, Codebook, CodebookFile, QuantizerConfig};
use crate::util::seeded_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContrastFamily {
    Laplacian,
    Gaussian,
}

impl fmt::Display for ContrastFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ContrastFamily::Laplacian => "laplacian",
            ContrastFamily::Gaussian => "gaussian",
        })
    }
}

impl FromStr for ContrastFamily {
    type Err = AtolError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "laplacian" => Ok(ContrastFamily::Laplacian),
            "gaussian" => Ok(ContrastFamily::Gaussian),
            other => Err(AtolError::InvalidConfig(format!(
                "unknown contrast family {other:?} (expected laplacian or gaussian)"
            ))),
        }
    }
}

/// How bandwidths are chosen once the codebook is fitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    /// Half the distance to the nearest other center.
    Adaptive,
    /// The same bandwidth for every center.
    Constant(f64),
}

/// Adaptive bandwidths: `σ_i = min_{j≠i} ‖c_i − c_j‖ / 2`.
pub fn compute_sigmas(codebook: &Codebook) -> Result<Vec<f64>> {
    let b = codebook.len();
    if b < 2 {
        return Err(AtolError::BandwidthUndefined);
    }
    let mut nearest = vec![f64::INFINITY; b];
    for i in 0..b {
        for j in i + 1..b {
            let d = sq_dist(codebook.center(i), codebook.center(j));
            if d == 0.0 {
                return Err(AtolError::DuplicateCenters { first: i, second: j });
            }
            nearest[i] = nearest[i].min(d);
            nearest[j] = nearest[j].min(d);
        }
    }
    Ok(nearest.into_iter().map(|d| d.sqrt() / 2.0).collect())
}

/// A frozen embedding `M_d → R^b`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorizationMap {
    codebook: Codebook,
    family: ContrastFamily,
    inv_sigmas: Vec<f64>,
}

impl VectorizationMap {
    /// Wraps a codebook that already carries bandwidths.
    pub fn new(codebook: Codebook, family: ContrastFamily) -> Result<Self> {
        let sigmas = codebook.sigmas().ok_or_else(|| {
            AtolError::InvalidConfig("codebook has no bandwidths".into())
        })?;
        let inv_sigmas = sigmas.iter().map(|s| 1.0 / s).collect();
        Ok(Self {
            codebook,
            family,
            inv_sigmas,
        })
    }

    /// Sets bandwidths on `codebook` according to `bandwidth`, then wraps it.
    pub fn with_bandwidth(
        codebook: Codebook,
        family: ContrastFamily,
        bandwidth: Bandwidth,
    ) -> Result<Self> {
        let sigmas = match bandwidth {
            Bandwidth::Adaptive => compute_sigmas(&codebook)?,
            Bandwidth::Constant(s) => vec![s; codebook.len()],
        };
        Self::new(codebook.with_sigmas(sigmas)?, family)
    }

    pub fn budget(&self) -> usize {
        self.codebook.len()
    }

    pub fn dim(&self) -> usize {
        self.codebook.dim()
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    pub fn family(&self) -> ContrastFamily {
        self.family
    }

    pub fn sigmas(&self) -> &[f64] {
        self.codebook.sigmas().expect("map codebooks always carry bandwidths")
    }

    /// Value of contrast function `i` at `x`, in `(0, 1]`.
    pub fn contrast(&self, i: usize, x: &[f64]) -> f64 {
        let d2 = sq_dist(x, self.codebook.center(i));
        self.kernel(d2, self.inv_sigmas[i])
    }

    #[inline]
    fn kernel(&self, d2: f64, inv_sigma: f64) -> f64 {
        match self.family {
            ContrastFamily::Laplacian => (-d2.sqrt() * inv_sigma).exp(),
            ContrastFamily::Gaussian => (-d2 * inv_sigma * inv_sigma).exp(),
        }
    }

    fn accumulate(&self, m: &PointMeasure, out: &mut [f64]) {
        out.fill(0.0);
        let centers = self.codebook.centers_flat();
        let dim = self.dim();
        for (x, w) in m.atoms() {
            for ((acc, c), &inv) in out
                .iter_mut()
                .zip(centers.chunks_exact(dim))
                .zip(&self.inv_sigmas)
            {
                *acc += w * self.kernel(sq_dist(x, c), inv);
            }
        }
    }

    /// `[∫ ψ_i dm]_i`. The empty measure maps to the zero vector.
    pub fn transform(&self, m: &PointMeasure) -> Result<Vec<f64>> {
        self.check_dim(m)?;
        let mut out = vec![0.0; self.budget()];
        self.accumulate(m, &mut out);
        Ok(out)
    }

    /// One row per measure, in input order.
    pub fn transform_batch(&self, measures: &[PointMeasure]) -> Result<Matrix> {
        for m in measures {
            self.check_dim(m)?;
        }
        let b = self.budget();
        let mut out = Matrix::zeros(measures.len(), b);
        if b > 0 {
            // each row is computed independently, so rows are identical to
            // sequential evaluation
            let rows: Vec<Vec<f64>> = measures
                .par_iter()
                .map(|m| {
                    let mut row = vec![0.0; b];
                    self.accumulate(m, &mut row);
                    row
                })
                .collect();
            for (i, row) in rows.into_iter().enumerate() {
                out.row_mut(i).copy_from_slice(&row);
            }
        }
        Ok(out)
    }

    fn check_dim(&self, m: &PointMeasure) -> Result<()> {
        if m.dim() != self.dim() {
            return Err(AtolError::DimensionMismatch {
                expected: self.dim(),
                found: m.dim(),
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        self.codebook.to_json(Some(self.family))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file = CodebookFile::from_json(text)?;
        let family = file
            .family
            .ok_or_else(|| AtolError::InvalidConfig("map file has no contrast family".into()))?;
        Self::new(file.codebook()?, family)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub quantizer: QuantizerConfig,
    pub family: ContrastFamily,
    /// Fraction of measures, in `(0, 1]`, used to fit the codebook.
    pub fraction: f64,
    pub bandwidth: Bandwidth,
}

impl CalibrationConfig {
    pub fn new(quantizer: QuantizerConfig, family: ContrastFamily) -> Self {
        Self {
            quantizer,
            family,
            fraction: 1.0,
            bandwidth: Bandwidth::Adaptive,
        }
    }

    pub fn with_fraction(mut self, fraction: f64) -> Self {
        self.fraction = fraction;
        self
    }

    pub fn with_bandwidth(mut self, bandwidth: Bandwidth) -> Self {
        self.bandwidth = bandwidth;
        self
    }
}

/// Indices of the measure-level calibration subsample: `⌈fraction·n⌉`
/// distinct indices (at least one), in ascending order.
pub fn calibration_subsample(n: usize, fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(AtolError::InvalidConfig(format!(
            "calibration fraction must lie in (0, 1], got {fraction}"
        )));
    }
    if n == 0 {
        return Err(AtolError::EmptyCollection);
    }
    let k = ((fraction * n as f64).ceil() as usize).clamp(1, n);
    if k == n {
        return Ok((0..n).collect());
    }
    let mut idx = rand::seq::index::sample(&mut seeded_rng(seed, 2), n, k).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// Fits a vectorization map on a seeded subsample of `measures`. Takes bare
/// measures: labels cannot influence the result.
pub fn calibrate(measures: &[PointMeasure], cfg: &CalibrationConfig) -> Result<VectorizationMap> {
    let idx = calibration_subsample(measures.len(), cfg.fraction, cfg.quantizer.seed)?;
    let sample: Vec<PointMeasure> = idx.iter().map(|&i| measures[i].clone()).collect();
    let codebook = quantizer::fit(&sample, &cfg.quantizer)?;
    VectorizationMap::with_bandwidth(codebook, cfg.family, cfg.bandwidth)
}

/// Budget per channel: equal shares, with the remainder going one unit at a
/// time to the earliest channels.
pub fn split_budget(total: usize, channels: usize) -> Result<Vec<usize>> {
    if channels == 0 || total < channels {
        return Err(AtolError::InvalidConfig(format!(
            "cannot split a budget of {total} over {channels} channels"
        )));
    }
    let base = total / channels;
    let extra = total % channels;
    Ok((0..channels).map(|c| base + usize::from(c < extra)).collect())
}

/// Several maps applied side by side, one per measure channel (for instance
/// one per diagram type). Output blocks are concatenated in channel order.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiChannelMap {
    channels: Vec<VectorizationMap>,
}

impl MultiChannelMap {
    pub fn new(channels: Vec<VectorizationMap>) -> Result<Self> {
        if channels.is_empty() {
            return Err(AtolError::InvalidConfig("at least one channel is required".into()));
        }
        Ok(Self { channels })
    }

    /// Calibrates one map per channel. `channels[c]` holds the measures of
    /// channel `c` for every observation; the total budget is split with
    /// [`split_budget`] and each channel gets its own derived seed.
    pub fn calibrate(
        channels: &[Vec<PointMeasure>],
        total_budget: usize,
        cfg: &CalibrationConfig,
    ) -> Result<Self> {
        let budgets = split_budget(total_budget, channels.len())?;
        let maps = channels
            .iter()
            .zip(budgets)
            .enumerate()
            .map(|(c, (measures, budget))| {
                let mut ccfg = cfg.clone();
                ccfg.quantizer.budget = budget;
                ccfg.quantizer.seed = crate::util::derive_seed(cfg.quantizer.seed, c as u64);
                calibrate(measures, &ccfg)
                    .map_err(|e| e.context(format!("calibrating channel {c}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(maps)
    }

    pub fn channels(&self) -> &[VectorizationMap] {
        &self.channels
    }

    pub fn budgets(&self) -> Vec<usize> {
        self.channels.iter().map(VectorizationMap::budget).collect()
    }

    pub fn total_budget(&self) -> usize {
        self.channels.iter().map(VectorizationMap::budget).sum()
    }

    pub fn transform_multi(&self, measures: &[PointMeasure]) -> Result<Vec<f64>> {
        if measures.len() != self.channels.len() {
            return Err(AtolError::ChannelMismatch {
                expected: self.channels.len(),
                found: measures.len(),
            });
        }
        let mut out = Vec::with_capacity(self.total_budget());
        for (map, m) in self.channels.iter().zip(measures) {
            out.extend(map.transform(m)?);
        }
        Ok(out)
    }

    /// `channels[c][i]` is channel `c` of observation `i`.
    pub fn transform_multi_batch(&self, channels: &[Vec<PointMeasure>]) -> Result<Matrix> {
        if channels.len() != self.channels.len() {
            return Err(AtolError::ChannelMismatch {
                expected: self.channels.len(),
                found: channels.len(),
            });
        }
        let n = channels.first().map_or(0, Vec::len);
        if channels.iter().any(|c| c.len() != n) {
            return Err(AtolError::InvalidConfig(
                "every channel needs one measure per observation".into(),
            ));
        }
        for (map, c) in self.channels.iter().zip(channels) {
            check_dims(map.dim(), c)?;
        }
        let blocks = self
            .channels
            .iter()
            .zip(channels)
            .map(|(map, c)| map.transform_batch(c))
            .collect::<Result<Vec<_>>>()?;
        Ok(Matrix::hstack(&blocks))
    }
}
