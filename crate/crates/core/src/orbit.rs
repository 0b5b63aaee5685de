//! Synthetic orbits of the linked twist map
//!
//! ```text
//! x_{n+1} = x_n + r·y_n·(1 − y_n)          mod 1
//! y_{n+1} = y_n + r·x_{n+1}·(1 − x_{n+1})  mod 1
//! ```
//!
//! Each orbit is a unit-weight point cloud in `[0, 1)²`; its class is the
//! index of its parameter `r`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AtolError, Result};
use crate::measure::{MeasureCollection, PointMeasure};
use crate::util::{seeded_rng, RNG_ALGORITHM};

/// Parameters of the standard benchmark: five classes of a thousand
/// orbits with a thousand points each.
pub const DEFAULT_PARAMETERS: [f64; 5] = [2.5, 3.5, 4.0, 4.1, 4.3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitSpec {
    pub r: f64,
    pub n_iterations: usize,
    pub seed: u64,
    /// Stream of `seed` used for the initial point.
    #[serde(default)]
    pub stream: u64,
}

impl OrbitSpec {
    pub fn new(r: f64, n_iterations: usize, seed: u64) -> Self {
        Self {
            r,
            n_iterations,
            seed,
            stream: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(AtolError::InvalidConfig(format!("r must be positive, got {}", self.r)));
        }
        if self.n_iterations == 0 {
            return Err(AtolError::InvalidConfig("n_iterations must be at least 1".into()));
        }
        Ok(())
    }

    /// Uniform initial point in `[0, 1)²`.
    pub fn initial_point(&self) -> (f64, f64) {
        let mut rng = seeded_rng(self.seed, self.stream);
        (rng.gen::<f64>(), rng.gen::<f64>())
    }
}

#[inline]
fn frac(v: f64) -> f64 {
    let f = v - v.floor();
    // v slightly below an integer can round up to exactly 1.0
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// The first `n` points of the orbit starting at `(x0, y0)`, the starting
/// point included.
pub fn orbit_from(x0: f64, y0: f64, r: f64, n: usize) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(n);
    let (mut x, mut y) = (x0, y0);
    for _ in 0..n {
        out.push([x, y]);
        x = frac(x + r * y * (1.0 - y));
        y = frac(y + r * x * (1.0 - x));
    }
    out
}

pub fn generate_orbit(spec: &OrbitSpec) -> Result<PointMeasure> {
    spec.validate()?;
    let (x0, y0) = spec.initial_point();
    let pts = orbit_from(x0, y0, spec.r, spec.n_iterations);
    let coords: Vec<f64> = pts.iter().flat_map(|p| p.iter().copied()).collect();
    PointMeasure::from_flat(2, coords, vec![1.0; pts.len()])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitDatasetSpec {
    pub parameters: Vec<f64>,
    pub orbits_per_class: usize,
    pub n_iterations: usize,
    pub master_seed: u64,
}

impl Default for OrbitDatasetSpec {
    fn default() -> Self {
        Self {
            parameters: DEFAULT_PARAMETERS.to_vec(),
            orbits_per_class: 1000,
            n_iterations: 1000,
            master_seed: 0,
        }
    }
}

impl OrbitDatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.parameters.is_empty() {
            return Err(AtolError::InvalidConfig("at least one parameter is required".into()));
        }
        for (i, a) in self.parameters.iter().enumerate() {
            if self.parameters[..i].contains(a) {
                return Err(AtolError::InvalidConfig(format!("parameter {a} repeated")));
            }
        }
        if self.orbits_per_class == 0 {
            return Err(AtolError::InvalidConfig("orbits_per_class must be at least 1".into()));
        }
        Ok(())
    }

    /// Spec of orbit `k` of class `class`. Orbit seeds depend only on the
    /// master seed and the orbit's global index, so any orbit can be rebuilt
    /// in isolation.
    pub fn orbit_spec(&self, class: usize, k: usize) -> OrbitSpec {
        OrbitSpec {
            r: self.parameters[class],
            n_iterations: self.n_iterations,
            seed: self.master_seed,
            stream: (class * self.orbits_per_class + k) as u64,
        }
    }

    pub fn len(&self) -> usize {
        self.parameters.len() * self.orbits_per_class
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// All orbits, grouped by class in parameter order.
pub fn generate_dataset(spec: &OrbitDatasetSpec) -> Result<MeasureCollection> {
    spec.validate()?;
    let measures = (0..spec.len())
        .into_par_iter()
        .map(|g| {
            let (class, k) = (g / spec.orbits_per_class, g % spec.orbits_per_class);
            generate_orbit(&spec.orbit_spec(class, k))
        })
        .collect::<Result<Vec<_>>>()?;
    let labels = (0..spec.len())
        .map(|g| (g / spec.orbits_per_class) as u32)
        .collect();
    MeasureCollection::new(2, measures)?.with_labels(labels)
}

/// Provenance record written next to a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub spec: OrbitDatasetSpec,
    pub rng: String,
    pub n_measures: usize,
    pub points_per_measure: usize,
    pub measures_file: String,
    pub labels_file: String,
}

impl DatasetManifest {
    pub fn new(spec: &OrbitDatasetSpec, measures_file: &str, labels_file: &str) -> Self {
        Self {
            spec: spec.clone(),
            rng: RNG_ALGORITHM.to_string(),
            n_measures: spec.len(),
            points_per_measure: spec.n_iterations,
            measures_file: measures_file.into(),
            labels_file: labels_file.into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recurrence_hand_values() {
        let pts = orbit_from(0.5, 0.5, 3.5, 2);
        assert_eq!(pts[0], [0.5, 0.5]);
        assert_eq!(pts[1], [0.375, 0.3203125]);
    }

    #[test]
    fn origin_is_fixed() {
        for r in [0.1, 2.5, 4.3] {
            assert!(orbit_from(0.0, 0.0, r, 50).iter().all(|p| *p == [0.0, 0.0]));
        }
    }

    #[test]
    fn coordinates_stay_in_unit_square() {
        for seed in 0..20 {
            let m = generate_orbit(&OrbitSpec::new(4.3, 500, seed)).unwrap();
            assert_eq!(m.len(), 500);
            assert!(m.coords().iter().all(|v| (0.0..1.0).contains(v)));
            assert!(m.weights().iter().all(|&w| w == 1.0));
        }
    }

    #[test]
    fn frac_never_returns_one() {
        assert_eq!(frac(-1e-20), 0.0);
        assert_eq!(frac(2.75), 0.75);
    }

    #[test]
    fn invalid_specs() {
        assert!(generate_orbit(&OrbitSpec::new(0.0, 10, 0)).is_err());
        assert!(generate_orbit(&OrbitSpec::new(1.0, 0, 0)).is_err());
        let dup = OrbitDatasetSpec {
            parameters: vec![2.5, 2.5],
            ..Default::default()
        };
        assert!(generate_dataset(&dup).is_err());
    }

    #[test]
    fn single_orbit_dataset() {
        let spec = OrbitDatasetSpec {
            parameters: vec![3.5],
            orbits_per_class: 1,
            n_iterations: 7,
            master_seed: 1,
        };
        let c = generate_dataset(&spec).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.labels().unwrap(), &[0]);
    }

    #[test]
    fn orbits_reproducible_in_isolation() {
        let spec = OrbitDatasetSpec {
            parameters: vec![2.5, 4.0],
            orbits_per_class: 3,
            n_iterations: 20,
            master_seed: 42,
        };
        let c = generate_dataset(&spec).unwrap();
        let alone = generate_orbit(&spec.orbit_spec(1, 2)).unwrap();
        assert_eq!(c.measures()[5], alone);
        assert_eq!(c.labels().unwrap(), &[0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn master_seed_changes_points_not_counts() {
        let mut spec = OrbitDatasetSpec {
            parameters: vec![2.5, 4.0],
            orbits_per_class: 4,
            n_iterations: 10,
            master_seed: 1,
        };
        let a = generate_dataset(&spec).unwrap();
        spec.master_seed = 2;
        let b = generate_dataset(&spec).unwrap();
        assert_ne!(a.measures(), b.measures());
        assert_eq!(a.labels(), b.labels());
    }
}
