use serde::{Deserialize, Serialize};

use super::{classify, plan_repetition, repetition_codebook, repetition_seed, ExperimentConfig};
use crate::error::{AtolError, Result};
use crate::util::{derive_seed, mean_std};
use crate::vectorizer::{Bandwidth, VectorizationMap};

/// Base-10 exponents of the constant bandwidths, relative to the mean
/// distance between codebook points.
pub const SWEEP_EXPONENTS: [f64; 13] = [
    -2.0, -1.5, -1.0, -0.5, -0.2, -0.1, 0.0, 0.1, 0.2, 0.5, 1.0, 1.5, 2.0,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// `None` for the adaptive reference.
    pub exponent: Option<f64>,
    /// Bandwidth used in each repetition (empty for the adaptive reference).
    pub sigmas: Vec<f64>,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl SweepPoint {
    fn new(exponent: Option<f64>, sigmas: Vec<f64>, accuracies: Vec<f64>) -> Self {
        let (mean, std) = mean_std(&accuracies);
        Self {
            exponent,
            sigmas,
            accuracies,
            mean,
            std,
        }
    }

    pub fn label(&self) -> String {
        match self.exponent {
            Some(e) => format!("mu*10^{e}"),
            None => "adaptive".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub adaptive: SweepPoint,
    /// One entry per exponent, in the order given.
    pub constant: Vec<SweepPoint>,
    /// Mean pairwise center distance of each repetition's codebook.
    pub mu: Vec<f64>,
    pub config: ExperimentConfig,
}

impl SweepReport {
    /// Constant-bandwidth point with the highest mean accuracy (first on ties).
    pub fn best_constant(&self) -> &SweepPoint {
        let mut best = &self.constant[0];
        for p in &self.constant[1..] {
            if p.mean > best.mean {
                best = p;
            }
        }
        best
    }

    pub fn render(&self) -> String {
        let mut out = format!("{:<14} {:>12}\n", "bandwidth", "accuracy");
        for p in std::iter::once(&self.adaptive).chain(&self.constant) {
            out.push_str(&format!(
                "{:<14} {:>12}\n",
                p.label(),
                format!("{:.1}±{:.1}", 100.0 * p.mean, 100.0 * p.std)
            ));
        }
        out
    }
}

/// For every repetition, fits one codebook and classifies with the adaptive
/// bandwidths and with each constant `σ = μ·10^e`, all on the same split.
pub fn run_bandwidth_sweep(cfg: &ExperimentConfig, exponents: &[f64]) -> Result<SweepReport> {
    cfg.validate()?;
    if exponents.is_empty() {
        return Err(AtolError::InvalidConfig("sweep needs at least one exponent".into()));
    }
    let data = cfg.dataset.resolve()?;
    let labels = data.labels().expect("resolve guarantees labels");
    let mut adaptive = Vec::with_capacity(cfg.n_repetitions);
    let mut constant = vec![Vec::with_capacity(cfg.n_repetitions); exponents.len()];
    let mut sigmas = vec![Vec::with_capacity(cfg.n_repetitions); exponents.len()];
    let mut mus = Vec::with_capacity(cfg.n_repetitions);
    for rep in 0..cfg.n_repetitions {
        let plan = plan_repetition(&data, cfg, rep)?;
        let forest_seed = derive_seed(repetition_seed(cfg, rep), 3);
        let codebook = repetition_codebook(&data, cfg, &plan, rep)?.without_sigmas();
        let mu = codebook.mean_pairwise_distance();
        mus.push(mu);
        let score = |bandwidth: Bandwidth| -> Result<f64> {
            let map = VectorizationMap::with_bandwidth(codebook.clone(), cfg.family, bandwidth)?;
            let features = map.transform_batch(data.measures())?;
            classify(&features, labels, &plan, &cfg.forest, forest_seed)
        };
        adaptive.push(score(Bandwidth::Adaptive)?);
        for (k, &e) in exponents.iter().enumerate() {
            let sigma = mu * 10f64.powf(e);
            sigmas[k].push(sigma);
            constant[k].push(score(Bandwidth::Constant(sigma))?);
        }
    }
    let constant = exponents
        .iter()
        .zip(constant.into_iter().zip(sigmas))
        .map(|(&e, (acc, s))| SweepPoint::new(Some(e), s, acc))
        .collect();
    Ok(SweepReport {
        adaptive: SweepPoint::new(None, Vec::new(), adaptive),
        constant,
        mu: mus,
        config: cfg.clone(),
    })
}
