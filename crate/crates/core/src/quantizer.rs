//! Quantization of the empirical mean measure onto a fixed-size codebook.
//!
//! Two fitters are provided:
//!
//! * [`lloyd_fit`]: Lloyd iteration adapted to weighted measures. Every
//!   center moves to the mass-weighted centroid of its Voronoi cell under the
//!   mean measure, until the codebook stops moving.
//! * [`macqueen_fit`]: one pass over the atoms of all measures in a seeded
//!   order. Atoms are processed in minibatches; within a batch, assignments
//!   use the centers as they were at the start of the batch and updates are
//!   then applied in stream order with mass-weighted running means.
//!
//! Both start from `budget` distinct support points of the mean measure,
//! sampled without replacement with probability proportional to mass.
//! Voronoi ties always go to the lowest center index.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AtolError, Result};
use crate::measure::{check_dims, empirical_mean, PointMeasure};
use crate::util::seeded_rng;
use crate::vectorizer::ContrastFamily;

const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    dim: usize,
    centers: Vec<f64>,
    sigmas: Option<Vec<f64>>,
}

impl Codebook {
    pub fn new(dim: usize, centers: &[Vec<f64>]) -> Result<Self> {
        let mut flat = Vec::with_capacity(centers.len() * dim);
        for c in centers {
            if c.len() != dim {
                return Err(AtolError::DimensionMismatch {
                    expected: dim,
                    found: c.len(),
                });
            }
            flat.extend_from_slice(c);
        }
        Self::from_flat(dim, flat)
    }

    pub fn from_flat(dim: usize, centers: Vec<f64>) -> Result<Self> {
        if dim == 0 || centers.is_empty() || centers.len() % dim != 0 {
            return Err(AtolError::InvalidConfig(
                "a codebook needs at least one center of positive dimension".into(),
            ));
        }
        if centers.iter().any(|v| !v.is_finite()) {
            return Err(AtolError::InvalidConfig("non-finite center coordinate".into()));
        }
        Ok(Self {
            dim,
            centers,
            sigmas: None,
        })
    }

    /// Attaches bandwidths, one strictly positive value per center.
    pub fn with_sigmas(mut self, sigmas: Vec<f64>) -> Result<Self> {
        if sigmas.len() != self.len() {
            return Err(AtolError::InvalidConfig(format!(
                "{} sigmas for {} centers",
                sigmas.len(),
                self.len()
            )));
        }
        if let Some(s) = sigmas.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(AtolError::InvalidConfig(format!(
                "bandwidths must be finite and positive, got {s}"
            )));
        }
        self.sigmas = Some(sigmas);
        Ok(self)
    }

    pub fn without_sigmas(mut self) -> Self {
        self.sigmas = None;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of centers `b`.
    pub fn len(&self) -> usize {
        self.centers.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn center(&self, i: usize) -> &[f64] {
        &self.centers[i * self.dim..(i + 1) * self.dim]
    }

    pub fn centers(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.centers.chunks_exact(self.dim)
    }

    pub fn centers_flat(&self) -> &[f64] {
        &self.centers
    }

    pub fn sigmas(&self) -> Option<&[f64]> {
        self.sigmas.as_deref()
    }

    pub fn assign(&self, x: &[f64]) -> usize {
        nearest(x, &self.centers, self.dim).0
    }

    /// First pair `(i, j)`, `i < j`, of bitwise-equal centers.
    pub fn find_duplicate(&self) -> Option<(usize, usize)> {
        let b = self.len();
        (0..b)
            .flat_map(|i| (i + 1..b).map(move |j| (i, j)))
            .find(|&(i, j)| self.center(i) == self.center(j))
    }

    /// Mean Euclidean distance over all pairs of distinct centers; zero when
    /// `b == 1`.
    pub fn mean_pairwise_distance(&self) -> f64 {
        let b = self.len();
        if b < 2 {
            return 0.0;
        }
        let mut total = 0.0;
        for i in 0..b {
            for j in i + 1..b {
                total += sq_dist(self.center(i), self.center(j)).sqrt();
            }
        }
        total / (b * (b - 1) / 2) as f64
    }

    pub fn to_file(&self, family: Option<ContrastFamily>) -> CodebookFile {
        CodebookFile {
            dim: self.dim,
            centers: self.centers().map(<[f64]>::to_vec).collect(),
            sigmas: self.sigmas.clone(),
            family,
        }
    }

    pub fn to_json(&self, family: Option<ContrastFamily>) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file(family))?)
    }
}

/// On-disk form of a codebook, optionally carrying bandwidths and a contrast
/// family (a frozen vectorization map).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodebookFile {
    pub dim: usize,
    pub centers: Vec<Vec<f64>>,
    pub sigmas: Option<Vec<f64>>,
    pub family: Option<ContrastFamily>,
}

impl CodebookFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn codebook(&self) -> Result<Codebook> {
        let cb = Codebook::new(self.dim, &self.centers)?;
        match &self.sigmas {
            Some(s) => cb.with_sigmas(s.clone()),
            None => Ok(cb),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantizerMode {
    BatchLloyd,
    MinibatchMacqueen,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizerConfig {
    pub budget: usize,
    pub seed: u64,
    pub max_iterations: usize,
    pub relative_tolerance: f64,
    pub mode: QuantizerMode,
    /// Atoms per minibatch, minibatch mode only.
    pub minibatch_size: usize,
}

impl QuantizerConfig {
    pub fn new(budget: usize, seed: u64) -> Self {
        Self {
            budget,
            seed,
            max_iterations: 300,
            relative_tolerance: 1e-9,
            mode: QuantizerMode::BatchLloyd,
            minibatch_size: 256,
        }
    }

    pub fn with_mode(mut self, mode: QuantizerMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(AtolError::InvalidConfig("budget must be at least 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(AtolError::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if !(self.relative_tolerance >= 0.0) {
            return Err(AtolError::InvalidConfig("relative_tolerance must be nonnegative".into()));
        }
        if self.minibatch_size == 0 {
            return Err(AtolError::InvalidConfig("minibatch_size must be at least 1".into()));
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest center and its squared distance; ties go to the lowest index.
#[inline]
pub(crate) fn nearest(x: &[f64], centers: &[f64], dim: usize) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centers.chunks_exact(dim).enumerate() {
        let d = sq_dist(x, c);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    (best, best_d)
}

/// Index of the Voronoi cell `W_j(c)` containing `x`: the nearest center,
/// with ties broken toward the smallest index.
pub fn voronoi_assign(x: &[f64], codebook: &Codebook) -> usize {
    codebook.assign(x)
}

/// Positive-mass support of the mean measure, duplicates merged.
fn mean_support(measures: &[PointMeasure]) -> Result<PointMeasure> {
    let mean = empirical_mean(measures)?.merge_duplicates();
    let dim = mean.dim();
    let mut coords = Vec::with_capacity(mean.coords().len());
    let mut weights = Vec::with_capacity(mean.len());
    for (x, w) in mean.atoms() {
        if w > 0.0 {
            coords.extend_from_slice(x);
            weights.push(w);
        }
    }
    PointMeasure::from_flat(dim, coords, weights)
}

fn initial_centers(support: &PointMeasure, budget: usize, seed: u64) -> Result<Vec<f64>> {
    if support.len() < budget {
        return Err(AtolError::BudgetExceedsSupport {
            budget,
            distinct: support.len(),
        });
    }
    let mut rng = seeded_rng(seed, 0);
    let weights = support.weights();
    let picked = rand::seq::index::sample_weighted(&mut rng, weights.len(), |i| weights[i], budget)
        .map_err(|e| AtolError::InvalidConfig(format!("initial sampling failed: {e}")))?;
    let mut centers = Vec::with_capacity(budget * support.dim());
    for i in picked.iter() {
        centers.extend_from_slice(support.point(i));
    }
    Ok(centers)
}

struct CellStats {
    sums: Vec<f64>,
    mass: Vec<f64>,
    cost: f64,
}

impl CellStats {
    fn zeros(b: usize, dim: usize) -> Self {
        Self {
            sums: vec![0.0; b * dim],
            mass: vec![0.0; b],
            cost: 0.0,
        }
    }

    fn absorb(&mut self, other: &CellStats) {
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            *a += b;
        }
        for (a, b) in self.mass.iter_mut().zip(&other.mass) {
            *a += b;
        }
        self.cost += other.cost;
    }
}

/// Per-cell weighted sums, masses and the total distortion. Chunks are
/// reduced in index order, so the result does not depend on thread count.
fn cell_stats(support: &PointMeasure, centers: &[f64]) -> CellStats {
    let dim = support.dim();
    let b = centers.len() / dim;
    let partials: Vec<CellStats> = support
        .coords()
        .par_chunks(CHUNK * dim)
        .zip(support.weights().par_chunks(CHUNK))
        .map(|(coords, weights)| {
            let mut s = CellStats::zeros(b, dim);
            for (x, &w) in coords.chunks_exact(dim).zip(weights) {
                let (j, d) = nearest(x, centers, dim);
                s.mass[j] += w;
                s.cost += w * d;
                for (acc, v) in s.sums[j * dim..(j + 1) * dim].iter_mut().zip(x) {
                    *acc += w * v;
                }
            }
            s
        })
        .collect();
    let mut total = CellStats::zeros(b, dim);
    for p in &partials {
        total.absorb(p);
    }
    total
}

/// Index of the atom maximizing `w · min_i ‖x − c_i‖²`, first index on ties.
fn farthest_atom(support: &PointMeasure, centers: &[f64]) -> Option<usize> {
    let dim = support.dim();
    let mut best: Option<(usize, f64)> = None;
    for (k, (x, w)) in support.atoms().enumerate() {
        let v = w * nearest(x, centers, dim).1;
        if v > 0.0 && best.is_none_or(|(_, bv)| v > bv) {
            best = Some((k, v));
        }
    }
    best.map(|(k, _)| k)
}

fn reseed(support: &PointMeasure, centers: &mut [f64], cell: usize) -> Result<()> {
    let dim = support.dim();
    let k = farthest_atom(support, centers).ok_or(AtolError::BudgetExceedsSupport {
        budget: centers.len() / dim,
        distinct: support.len(),
    })?;
    centers[cell * dim..(cell + 1) * dim].copy_from_slice(support.point(k));
    Ok(())
}

/// Moves every later copy of a repeated center to the atom farthest from
/// the remaining centers.
fn repair_duplicates(support: &PointMeasure, centers: &mut [f64]) -> Result<()> {
    let dim = support.dim();
    let b = centers.len() / dim;
    for j in 1..b {
        let cj = &centers[j * dim..(j + 1) * dim];
        if !(0..j).any(|i| centers[i * dim..(i + 1) * dim] == *cj) {
            continue;
        }
        let others: Vec<f64> = centers
            .chunks_exact(dim)
            .enumerate()
            .filter(|(i, _)| *i != j)
            .flat_map(|(_, c)| c.iter().copied())
            .collect();
        let k = farthest_atom(support, &others).ok_or(AtolError::BudgetExceedsSupport {
            budget: b,
            distinct: support.len(),
        })?;
        centers[j * dim..(j + 1) * dim].copy_from_slice(support.point(k));
    }
    Ok(())
}

/// Outcome of a Lloyd run, with the distortion of every visited codebook.
#[derive(Debug, Clone, PartialEq)]
pub struct LloydFit {
    pub codebook: Codebook,
    /// Distortion of the codebook at the start of each iteration.
    pub distortion_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Lloyd quantization of the mean measure of `measures`. The returned
/// codebook has no bandwidths.
pub fn lloyd_fit(measures: &[PointMeasure], cfg: &QuantizerConfig) -> Result<Codebook> {
    lloyd_fit_traced(measures, cfg).map(|f| f.codebook)
}

pub fn lloyd_fit_traced(measures: &[PointMeasure], cfg: &QuantizerConfig) -> Result<LloydFit> {
    cfg.validate()?;
    let support = mean_support(measures)?;
    let init = initial_centers(&support, cfg.budget, cfg.seed)?;
    lloyd_iterate(&support, init, cfg)
}

/// Lloyd iteration on `mean` starting from the given codebook. `mean` is
/// used as is (not renormalized); its atoms must have positive total mass.
pub fn lloyd_from(mean: &PointMeasure, init: &Codebook, cfg: &QuantizerConfig) -> Result<LloydFit> {
    cfg.validate()?;
    if init.dim() != mean.dim() {
        return Err(AtolError::DimensionMismatch {
            expected: mean.dim(),
            found: init.dim(),
        });
    }
    let support = mean_support(std::slice::from_ref(mean))?;
    if support.len() < init.len() {
        return Err(AtolError::BudgetExceedsSupport {
            budget: init.len(),
            distinct: support.len(),
        });
    }
    lloyd_iterate(&support, init.centers_flat().to_vec(), cfg)
}

fn lloyd_iterate(support: &PointMeasure, mut centers: Vec<f64>, cfg: &QuantizerConfig) -> Result<LloydFit> {
    let dim = support.dim();
    let b = centers.len() / dim;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iterations {
        iterations += 1;
        let stats = cell_stats(support, &centers);
        trace.push(stats.cost);

        let empty: Vec<usize> = (0..b).filter(|&i| stats.mass[i] == 0.0).collect();
        if !empty.is_empty() {
            for cell in empty {
                reseed(support, &mut centers, cell)?;
            }
            continue;
        }

        let mut moved = 0.0_f64;
        let mut changed = false;
        for i in 0..b {
            let old = &mut centers[i * dim..(i + 1) * dim];
            let norm = old.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut step = 0.0;
            for (k, c) in old.iter_mut().enumerate() {
                let new = stats.sums[i * dim + k] / stats.mass[i];
                step += (new - *c) * (new - *c);
                changed |= new != *c;
                *c = new;
            }
            moved = moved.max(step.sqrt() / (1.0 + norm));
        }
        if !changed || moved <= cfg.relative_tolerance {
            converged = true;
            break;
        }
    }

    repair_duplicates(support, &mut centers)?;
    Ok(LloydFit {
        codebook: Codebook::from_flat(dim, centers)?,
        distortion_trace: trace,
        iterations,
        converged,
    })
}

/// Single-pass minibatch MacQueen quantization.
pub fn macqueen_fit(measures: &[PointMeasure], cfg: &QuantizerConfig) -> Result<Codebook> {
    cfg.validate()?;
    let support = mean_support(measures)?;
    let dim = support.dim();
    let mut centers = initial_centers(&support, cfg.budget, cfg.seed)?;
    let mut counts = vec![0.0_f64; cfg.budget];

    let mut order: Vec<usize> = (0..measures.len()).collect();
    order.shuffle(&mut seeded_rng(cfg.seed, 1));

    let mut stream = order
        .iter()
        .flat_map(|&i| measures[i].atoms())
        .filter(|(_, w)| *w > 0.0);
    let mut batch: Vec<(&[f64], f64)> = Vec::with_capacity(cfg.minibatch_size);
    loop {
        batch.clear();
        batch.extend(stream.by_ref().take(cfg.minibatch_size));
        if batch.is_empty() {
            break;
        }
        let frozen = &centers;
        let cells: Vec<usize> = batch
            .par_iter()
            .map(|(x, _)| nearest(x, frozen, dim).0)
            .collect();
        for ((x, w), j) in batch.iter().zip(cells) {
            counts[j] += w;
            let rate = w / counts[j];
            for (c, v) in centers[j * dim..(j + 1) * dim].iter_mut().zip(x.iter()) {
                *c += rate * (v - *c);
            }
        }
    }

    repair_duplicates(&support, &mut centers)?;
    Codebook::from_flat(dim, centers)
}

/// Dispatches on `cfg.mode`.
pub fn fit(measures: &[PointMeasure], cfg: &QuantizerConfig) -> Result<Codebook> {
    match cfg.mode {
        QuantizerMode::BatchLloyd => lloyd_fit(measures, cfg),
        QuantizerMode::MinibatchMacqueen => macqueen_fit(measures, cfg),
    }
}

/// `∫ min_i ‖x − c_i‖² dX̄_n(x)`, the k-means objective on the empirical mean
/// measure of `measures`.
pub fn distortion(codebook: &Codebook, measures: &[PointMeasure]) -> Result<f64> {
    let first = measures.first().ok_or(AtolError::EmptyCollection)?;
    check_dims(first.dim(), measures)?;
    if first.dim() != codebook.dim() {
        return Err(AtolError::DimensionMismatch {
            expected: codebook.dim(),
            found: first.dim(),
        });
    }
    let mean = empirical_mean(measures)?;
    Ok(measure_distortion(codebook, &mean))
}

/// `∫ min_i ‖x − c_i‖² dm(x)` for a single measure.
pub fn measure_distortion(codebook: &Codebook, m: &PointMeasure) -> f64 {
    cell_stats(m, codebook.centers_flat()).cost
}
