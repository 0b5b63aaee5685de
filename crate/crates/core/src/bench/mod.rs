//! End-to-end learning pipeline: dataset → vectorization → random forest,
//! repeated over seeded stratified splits, plus the ablation, bandwidth sweep
//! and separation studies built on top of it.
//!
//! Every random choice inside a repetition is keyed on measure *content*
//! (a fingerprint mixed with the repetition seed) rather than on position, so
//! shuffling the dataset does not change any reported accuracy.

mod ablation;
mod separation;
mod sweep;

pub use ablation::{run_ablation, AblationAxes, AblationRow, AblationTable};
pub use separation::{separation_probe, SeparationConfig, SeparationReport};
pub use sweep::{run_bandwidth_sweep, SweepPoint, SweepReport, SWEEP_EXPONENTS};

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{AtolError, Result};
use crate::forest::{ForestConfig, ForestModel};
use crate::io;
use crate::matrix::Matrix;
use crate::measure::{MeasureCollection, PointMeasure};
use crate::orbit::{generate_dataset, OrbitDatasetSpec};
use crate::quantizer::{self, Codebook, QuantizerConfig, QuantizerMode};
use crate::util::{derive_seed, fingerprint, mean_std, mix64};
use crate::vectorizer::{calibration_subsample, compute_sigmas, Bandwidth, ContrastFamily, VectorizationMap};

/// Collections with at least this many measures are quantized with the
/// minibatch fitter when the mode is [`ModeChoice::Auto`].
pub const MINIBATCH_THRESHOLD: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    Orbits(OrbitDatasetSpec),
    Files { measures: PathBuf, labels: PathBuf },
}

impl DatasetSource {
    /// Loads or generates the labelled collection.
    pub fn resolve(&self) -> Result<MeasureCollection> {
        let c = match self {
            DatasetSource::Orbits(spec) => generate_dataset(spec)?,
            DatasetSource::Files { measures, labels } => io::load_labeled(measures, labels)?,
        };
        if c.labels().is_none() {
            return Err(AtolError::InvalidConfig("experiment datasets need labels".into()));
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeChoice {
    /// Minibatch for collections of at least [`MINIBATCH_THRESHOLD`]
    /// measures, batch Lloyd below.
    Auto,
    BatchLloyd,
    MinibatchMacqueen,
}

impl ModeChoice {
    pub fn resolve(self, n_measures: usize) -> QuantizerMode {
        match self {
            ModeChoice::Auto if n_measures >= MINIBATCH_THRESHOLD => QuantizerMode::MinibatchMacqueen,
            ModeChoice::Auto => QuantizerMode::BatchLloyd,
            ModeChoice::BatchLloyd => QuantizerMode::BatchLloyd,
            ModeChoice::MinibatchMacqueen => QuantizerMode::MinibatchMacqueen,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// Codebook learned from the mean measure.
    Atol,
    /// Fixed `⌊√b⌋ × ⌊√b⌋` grid over the domain.
    Grid,
}

/// Axis-aligned box `[lo, hi]` in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Default for Domain {
    fn default() -> Self {
        Self {
            lo: [0.0, 0.0],
            hi: [1.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub budget: usize,
    pub family: ContrastFamily,
    pub calibration_fraction: f64,
    pub split_ratio: f64,
    pub n_repetitions: usize,
    pub quantizer_mode: ModeChoice,
    pub max_iterations: usize,
    pub relative_tolerance: f64,
    pub minibatch_size: usize,
    pub forest: ForestConfig,
    pub bandwidth: Bandwidth,
    pub baseline: Baseline,
    #[serde(default)]
    pub grid_domain: Domain,
    pub master_seed: u64,
}

impl ExperimentConfig {
    /// Defaults around a given dataset: b = 100, Laplacian contrasts, 10 %
    /// calibration, 70/30 splits, 10 repetitions.
    pub fn new(dataset: DatasetSource) -> Self {
        let q = QuantizerConfig::new(100, 0);
        Self {
            dataset,
            budget: 100,
            family: ContrastFamily::Laplacian,
            calibration_fraction: 0.10,
            split_ratio: 0.70,
            n_repetitions: 10,
            quantizer_mode: ModeChoice::Auto,
            max_iterations: q.max_iterations,
            relative_tolerance: q.relative_tolerance,
            minibatch_size: q.minibatch_size,
            forest: ForestConfig::default(),
            bandwidth: Bandwidth::Adaptive,
            baseline: Baseline::Atol,
            grid_domain: Domain::default(),
            master_seed: 0,
        }
    }

    /// Full-scale orbit benchmark: 5 classes × 1000 orbits × 1000 points.
    pub fn orbit5k_table3() -> Self {
        Self::new(DatasetSource::Orbits(OrbitDatasetSpec::default()))
    }

    /// Reduced orbit benchmark: 5 classes × 200 orbits × 300 points.
    pub fn orbit_desk() -> Self {
        Self::new(DatasetSource::Orbits(OrbitDatasetSpec {
            orbits_per_class: 200,
            n_iterations: 300,
            ..OrbitDatasetSpec::default()
        }))
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "orbit5k-table3" => Ok(Self::orbit5k_table3()),
            "orbit-desk" => Ok(Self::orbit_desk()),
            other => Err(AtolError::InvalidConfig(format!(
                "unknown preset {other:?} (expected orbit5k-table3 or orbit-desk)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(AtolError::InvalidConfig(format!(
                "split_ratio must lie in (0, 1), got {}",
                self.split_ratio
            )));
        }
        if self.n_repetitions == 0 {
            return Err(AtolError::InvalidConfig("n_repetitions must be at least 1".into()));
        }
        if !(self.calibration_fraction > 0.0 && self.calibration_fraction <= 1.0) {
            return Err(AtolError::InvalidConfig(format!(
                "calibration_fraction must lie in (0, 1], got {}",
                self.calibration_fraction
            )));
        }
        if self.budget == 0 {
            return Err(AtolError::InvalidConfig("budget must be at least 1".into()));
        }
        self.forest.validate()
    }

    pub fn quantizer_config(&self, n_measures: usize, seed: u64) -> QuantizerConfig {
        QuantizerConfig {
            budget: self.budget,
            seed,
            max_iterations: self.max_iterations,
            relative_tolerance: self.relative_tolerance,
            mode: self.quantizer_mode.resolve(n_measures),
            minibatch_size: self.minibatch_size,
        }
    }

    /// Short human-readable description of the varied parameters.
    pub fn describe(&self) -> String {
        let method = match self.baseline {
            Baseline::Atol => "atol",
            Baseline::Grid => "grid",
        };
        let bw = match self.bandwidth {
            Bandwidth::Adaptive => "adaptive".to_string(),
            Bandwidth::Constant(s) => format!("sigma={s}"),
        };
        format!(
            "{method} b={} {} calibration={}% {bw}",
            self.budget,
            self.family,
            self.calibration_fraction * 100.0
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HostInfo {
    pub os: String,
    pub arch: String,
    pub threads: usize,
}

impl HostInfo {
    pub fn current() -> Self {
        Self {
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            threads: rayon::current_num_threads(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub description: String,
    /// Test accuracy of every repetition, as a fraction in `[0, 1]`.
    pub accuracies: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation over repetitions (zero for one repetition).
    pub std: f64,
    /// Mean wall time of calibration plus the full-dataset transform.
    pub vectorization_seconds: f64,
    pub host: HostInfo,
    pub config: ExperimentConfig,
}

impl ExperimentReport {
    pub fn from_runs(config: &ExperimentConfig, runs: &[(f64, f64)]) -> Self {
        let accuracies: Vec<f64> = runs.iter().map(|r| r.0).collect();
        let (mean, std) = mean_std(&accuracies);
        let seconds = runs.iter().map(|r| r.1).sum::<f64>() / runs.len().max(1) as f64;
        Self {
            description: config.describe(),
            accuracies,
            mean,
            std,
            vectorization_seconds: seconds,
            host: HostInfo::current(),
            config: config.clone(),
        }
    }

    /// `mean±std` in percent, the way result tables print it.
    pub fn summary(&self) -> String {
        format!("{:.1}±{:.1}", 100.0 * self.mean, 100.0 * self.std)
    }

    pub fn accuracies_csv(&self) -> String {
        let mut out = String::from("repetition,accuracy\n");
        for (i, a) in self.accuracies.iter().enumerate() {
            out.push_str(&format!("{i},{a}\n"));
        }
        out
    }
}

/// Index sets of one repetition. `calibration ⊆ train`, `train ∩ test = ∅`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    /// Training measures, ordered by content key.
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Measures used to fit the codebook, drawn from `train`.
    pub calibration: Vec<usize>,
}

pub(crate) fn repetition_seed(cfg: &ExperimentConfig, rep: usize) -> u64 {
    derive_seed(cfg.master_seed, rep as u64)
}

/// Stratified split keyed on content: inside each class, measures are ranked
/// by `mix(fingerprint ^ seed)` and the first `round(ratio·n_c)` go to train
/// (at least one on each side when the class has two or more members).
pub fn stratified_split(
    measures: &[PointMeasure],
    labels: &[u32],
    ratio: f64,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    let keys: Vec<u64> = measures.iter().map(|m| mix64(fingerprint(m) ^ seed)).collect();
    let mut classes: Vec<u32> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for c in classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        members.sort_by_key(|&i| (keys[i], i));
        let n = members.len();
        let mut k = (ratio * n as f64).round() as usize;
        if n >= 2 {
            k = k.clamp(1, n - 1);
        }
        train.extend_from_slice(&members[..k]);
        test.extend_from_slice(&members[k..]);
    }
    train.sort_by_key(|&i| (keys[i], i));
    test.sort_unstable();
    (train, test)
}

pub fn plan_repetition(
    data: &MeasureCollection,
    cfg: &ExperimentConfig,
    rep: usize,
) -> Result<SplitPlan> {
    let labels = data
        .labels()
        .ok_or_else(|| AtolError::InvalidConfig("experiment datasets need labels".into()))?;
    let seed = repetition_seed(cfg, rep);
    let (train, test) = stratified_split(data.measures(), labels, cfg.split_ratio, seed);
    if train.is_empty() || test.is_empty() {
        return Err(AtolError::InvalidConfig(
            "split leaves an empty train or test set".into(),
        ));
    }
    let picked = calibration_subsample(train.len(), cfg.calibration_fraction, derive_seed(seed, 1))?;
    let calibration = picked.into_iter().map(|i| train[i]).collect();
    Ok(SplitPlan {
        train,
        test,
        calibration,
    })
}

/// Integer square root.
fn isqrt(b: usize) -> usize {
    let mut g = (b as f64).sqrt() as usize;
    while g * g > b {
        g -= 1;
    }
    while (g + 1) * (g + 1) <= b {
        g += 1;
    }
    g
}

/// Cell centers of a regular `g × g` partition of `domain`, `g = ⌊√b⌋`,
/// with adaptive bandwidths (half the smaller grid step).
pub fn grid_codebook(budget: usize, domain: &Domain) -> Result<Codebook> {
    if budget < 4 {
        return Err(AtolError::InvalidConfig(format!(
            "grid codebooks need a budget of at least 4, got {budget}"
        )));
    }
    if !(domain.hi[0] > domain.lo[0] && domain.hi[1] > domain.lo[1]) {
        return Err(AtolError::InvalidConfig("grid domain must have positive extent".into()));
    }
    let g = isqrt(budget);
    let step = [
        (domain.hi[0] - domain.lo[0]) / g as f64,
        (domain.hi[1] - domain.lo[1]) / g as f64,
    ];
    let mut centers = Vec::with_capacity(2 * g * g);
    for i in 0..g {
        for j in 0..g {
            centers.push(domain.lo[0] + (i as f64 + 0.5) * step[0]);
            centers.push(domain.lo[1] + (j as f64 + 0.5) * step[1]);
        }
    }
    let cb = Codebook::from_flat(2, centers)?;
    let sigmas = compute_sigmas(&cb)?;
    cb.with_sigmas(sigmas)
}

/// Codebook for one repetition: fitted on the calibration measures, or the
/// fixed grid.
pub(crate) fn repetition_codebook(
    data: &MeasureCollection,
    cfg: &ExperimentConfig,
    plan: &SplitPlan,
    rep: usize,
) -> Result<Codebook> {
    match cfg.baseline {
        Baseline::Grid => {
            if data.dim() != 2 {
                return Err(AtolError::InvalidConfig("grid baseline requires d = 2".into()));
            }
            Ok(grid_codebook(cfg.budget, &cfg.grid_domain)?.without_sigmas())
        }
        Baseline::Atol => {
            let sample: Vec<PointMeasure> = plan
                .calibration
                .iter()
                .map(|&i| data.measures()[i].clone())
                .collect();
            let qcfg = cfg.quantizer_config(data.len(), derive_seed(repetition_seed(cfg, rep), 2));
            quantizer::fit(&sample, &qcfg)
        }
    }
}

/// Fits the forest on the training rows and scores the test rows.
pub(crate) fn classify(
    features: &Matrix,
    labels: &[u32],
    plan: &SplitPlan,
    forest: &ForestConfig,
    seed: u64,
) -> Result<f64> {
    let y_train: Vec<u32> = plan.train.iter().map(|&i| labels[i]).collect();
    let y_test: Vec<u32> = plan.test.iter().map(|&i| labels[i]).collect();
    let model = ForestModel::fit(
        &features.select_rows(&plan.train),
        &y_train,
        &forest.clone().with_seed(seed),
    )?;
    model.accuracy(&features.select_rows(&plan.test), &y_test)
}

/// One repetition: `(test accuracy, vectorization seconds)`.
pub fn run_repetition(
    data: &MeasureCollection,
    cfg: &ExperimentConfig,
    rep: usize,
) -> Result<(f64, f64)> {
    let plan = plan_repetition(data, cfg, rep)?;
    let seed = repetition_seed(cfg, rep);
    let start = Instant::now();
    let codebook = repetition_codebook(data, cfg, &plan, rep)?;
    let map = VectorizationMap::with_bandwidth(codebook, cfg.family, cfg.bandwidth)?;
    let features = map.transform_batch(data.measures())?;
    let seconds = start.elapsed().as_secs_f64();
    let labels = data.labels().expect("checked by plan_repetition");
    let acc = classify(&features, labels, &plan, &cfg.forest, derive_seed(seed, 3))?;
    Ok((acc, seconds))
}

/// Runs every repetition on an already resolved dataset.
pub fn run_on(data: &MeasureCollection, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let runs = (0..cfg.n_repetitions)
        .map(|rep| {
            run_repetition(data, cfg, rep)
                .map_err(|e| e.context(format!("repetition {rep} of {}", cfg.describe())))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport::from_runs(cfg, &runs))
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let data = cfg.dataset.resolve()?;
    run_on(&data, cfg)
}

/// `sqrt((s1² + s2²) / 2)`.
pub fn pooled_std(a: &ExperimentReport, b: &ExperimentReport) -> f64 {
    ((a.std * a.std + b.std * b.std) / 2.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_geometry() {
        let cb = grid_codebook(4, &Domain::default()).unwrap();
        let centers: Vec<Vec<f64>> = cb.centers().map(<[f64]>::to_vec).collect();
        assert_eq!(
            centers,
            vec![vec![0.25, 0.25], vec![0.25, 0.75], vec![0.75, 0.25], vec![0.75, 0.75]]
        );
        assert_eq!(cb.sigmas().unwrap(), &[0.25; 4]);
        assert_eq!(grid_codebook(5, &Domain::default()).unwrap(), cb);
        let g16 = grid_codebook(16, &Domain::default()).unwrap();
        assert_eq!(g16.len(), 16);
        assert_eq!(g16.sigmas().unwrap(), &[0.125; 16]);
        assert!(grid_codebook(3, &Domain::default()).is_err());
    }

    #[test]
    fn isqrt_floor() {
        for b in 0..200usize {
            let g = isqrt(b);
            assert!(g * g <= b && (g + 1) * (g + 1) > b);
        }
    }

    #[test]
    fn split_is_stratified_and_disjoint() {
        let measures: Vec<PointMeasure> = (0..50)
            .map(|i| PointMeasure::dirac(&[i as f64], 1.0).unwrap())
            .collect();
        let labels: Vec<u32> = (0..50).map(|i| (i % 5) as u32).collect();
        let (train, test) = stratified_split(&measures, &labels, 0.7, 9);
        assert_eq!(train.len(), 35);
        assert_eq!(test.len(), 15);
        for c in 0..5 {
            assert_eq!(train.iter().filter(|&&i| labels[i] == c).count(), 7);
        }
        assert!(train.iter().all(|i| !test.contains(i)));
    }

    #[test]
    fn presets_and_validation() {
        assert!(ExperimentConfig::preset("orbit5k-table3").is_ok());
        assert!(ExperimentConfig::preset("nope").is_err());
        let mut cfg = ExperimentConfig::orbit_desk();
        cfg.split_ratio = 1.0;
        assert!(cfg.validate().is_err());
        cfg.split_ratio = 0.7;
        cfg.n_repetitions = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn auto_mode_threshold() {
        assert_eq!(ModeChoice::Auto.resolve(999), QuantizerMode::BatchLloyd);
        assert_eq!(ModeChoice::Auto.resolve(1000), QuantizerMode::MinibatchMacqueen);
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = ExperimentConfig::orbit_desk();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }
}
