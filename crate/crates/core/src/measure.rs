//! Finite weighted point measures on R^d.
//!
//! A [`PointMeasure`] is a finite sum of weighted Dirac masses. Persistence
//! diagrams are the `dim == 2` case with unit weights. Coordinates are stored
//! flat and row-major so the hot loops in quantization and vectorization walk
//! contiguous memory.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{AtolError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMeasure {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
}

impl PointMeasure {
    /// Builds a measure from a list of points and matching weights.
    pub fn new(dim: usize, points: &[Vec<f64>], weights: &[f64]) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(AtolError::InvalidConfig(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(AtolError::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(dim, coords, weights.to_vec())
    }

    /// Builds a measure from row-major coordinates.
    pub fn from_flat(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(AtolError::InvalidConfig("dimension must be positive".into()));
        }
        if coords.len() != weights.len() * dim {
            return Err(AtolError::InvalidConfig(format!(
                "{} coordinates do not form {} points of dimension {dim}",
                coords.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(AtolError::InvalidConfig(format!(
                "weights must be finite and nonnegative, got {w}"
            )));
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(AtolError::InvalidConfig("coordinates must be finite".into()));
        }
        Ok(Self {
            dim,
            coords,
            weights,
        })
    }

    /// Sum of unit Dirac masses, the usual encoding of a persistence diagram.
    pub fn unit(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        Self::new(dim, points, &vec![1.0; points.len()])
    }

    pub fn empty(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Self {
            dim,
            coords: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn dirac(point: &[f64], weight: f64) -> Result<Self> {
        Self::from_flat(point.len(), point.to_vec(), vec![weight])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of atoms, including zero-weight ones.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.coords[k * self.dim..(k + 1) * self.dim]
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Iterates over `(point, weight)` atoms.
    pub fn atoms(&self) -> impl ExactSizeIterator<Item = (&[f64], f64)> + '_ {
        self.coords
            .chunks_exact(self.dim)
            .zip(self.weights.iter().copied())
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().fold(0.0, |a, w| a + w)
    }

    /// `∫ f dm`, computed as the exact weighted sum over atoms.
    pub fn integrate<F>(&self, f: F) -> f64
    where
        F: Fn(&[f64]) -> f64,
    {
        self.atoms().map(|(x, w)| w * f(x)).sum()
    }

    pub fn push(&mut self, point: &[f64], weight: f64) -> Result<()> {
        if point.len() != self.dim {
            return Err(AtolError::DimensionMismatch {
                expected: self.dim,
                found: point.len(),
            });
        }
        if !(weight.is_finite() && weight >= 0.0) || point.iter().any(|x| !x.is_finite()) {
            return Err(AtolError::InvalidConfig(
                "atoms must have finite coordinates and a finite nonnegative weight".into(),
            ));
        }
        self.coords.extend_from_slice(point);
        self.weights.push(weight);
        Ok(())
    }

    /// Multiplies every weight by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        Self::from_flat(
            self.dim,
            self.coords.clone(),
            self.weights.iter().map(|w| alpha * w).collect(),
        )
    }

    /// Measure sum `self + other`: the atoms of both, concatenated.
    pub fn superpose(&self, other: &PointMeasure) -> Result<Self> {
        if other.dim != self.dim {
            return Err(AtolError::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut out = self.clone();
        out.coords.extend_from_slice(&other.coords);
        out.weights.extend_from_slice(&other.weights);
        Ok(out)
    }

    /// Merges atoms with bitwise-identical coordinates by summing their
    /// weights. Atoms keep the order of their first occurrence.
    pub fn merge_duplicates(&self) -> Self {
        let mut index: HashMap<Vec<u64>, usize> = HashMap::with_capacity(self.len());
        let mut coords = Vec::with_capacity(self.coords.len());
        let mut weights: Vec<f64> = Vec::with_capacity(self.len());
        for (x, w) in self.atoms() {
            match index.entry(point_key(x)) {
                std::collections::hash_map::Entry::Occupied(e) => weights[*e.get()] += w,
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(weights.len());
                    coords.extend_from_slice(x);
                    weights.push(w);
                }
            }
        }
        Self {
            dim: self.dim,
            coords,
            weights,
        }
    }

    /// Checks that every atom lies in the closed ball `B(0, radius)` and that
    /// the total mass is at most `max_mass`.
    pub fn validate_bounds(&self, radius: f64, max_mass: f64) -> Result<()> {
        for (k, (x, _)) in self.atoms().enumerate() {
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > radius {
                return Err(AtolError::InvalidConfig(format!(
                    "atom {k} has norm {norm} outside the ball of radius {radius}"
                )));
            }
        }
        let mass = self.mass();
        if mass > max_mass {
            return Err(AtolError::InvalidConfig(format!(
                "total mass {mass} exceeds bound {max_mass}"
            )));
        }
        Ok(())
    }
}

/// Hash key for a point; `-0.0` and `0.0` map to the same key.
pub(crate) fn point_key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| (v + 0.0).to_bits()).collect()
}

/// An ordered collection of measures sharing one dimension, optionally
/// labelled. `ids` are the external measure identifiers used by the CSV
/// formats; they default to `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureCollection {
    dim: usize,
    measures: Vec<PointMeasure>,
    ids: Vec<u64>,
    labels: Option<Vec<u32>>,
}

impl MeasureCollection {
    pub fn new(dim: usize, measures: Vec<PointMeasure>) -> Result<Self> {
        if dim == 0 {
            return Err(AtolError::InvalidConfig("dimension must be positive".into()));
        }
        check_dims(dim, &measures)?;
        let ids = (0..measures.len() as u64).collect();
        Ok(Self {
            dim,
            measures,
            ids,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != self.measures.len() {
            return Err(AtolError::InvalidConfig(format!(
                "{} labels for {} measures",
                labels.len(),
                self.measures.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Replaces the external ids. They must be strictly increasing.
    pub fn with_ids(mut self, ids: Vec<u64>) -> Result<Self> {
        if ids.len() != self.measures.len() {
            return Err(AtolError::InvalidConfig(format!(
                "{} ids for {} measures",
                ids.len(),
                self.measures.len()
            )));
        }
        if ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(AtolError::InvalidConfig(
                "measure ids must be strictly increasing".into(),
            ));
        }
        self.ids = ids;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }

    pub fn measures(&self) -> &[PointMeasure] {
        &self.measures
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn labels(&self) -> Option<&[u32]> {
        self.labels.as_deref()
    }

    /// Collection restricted to `indices`, in the given order. Ids and labels
    /// follow their measures.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            dim: self.dim,
            measures: indices.iter().map(|&i| self.measures[i].clone()).collect(),
            ids: indices.iter().map(|&i| self.ids[i]).collect(),
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
        }
    }

    pub fn empirical_mean(&self) -> Result<PointMeasure> {
        empirical_mean(&self.measures)
    }
}

pub(crate) fn check_dims(dim: usize, measures: &[PointMeasure]) -> Result<()> {
    match measures.iter().find(|m| m.dim() != dim) {
        Some(m) => Err(AtolError::DimensionMismatch {
            expected: dim,
            found: m.dim(),
        }),
        None => Ok(()),
    }
}

/// The empirical mean measure `(1/n) Σ X_i`, realized as the concatenation of
/// all atoms with each weight divided by `n`.
pub fn empirical_mean(measures: &[PointMeasure]) -> Result<PointMeasure> {
    let first = measures.first().ok_or(AtolError::EmptyCollection)?;
    let dim = first.dim();
    check_dims(dim, measures)?;
    let n = measures.len() as f64;
    let total: usize = measures.iter().map(PointMeasure::len).sum();
    let mut coords = Vec::with_capacity(total * dim);
    let mut weights = Vec::with_capacity(total);
    for m in measures {
        coords.extend_from_slice(m.coords());
        weights.extend(m.weights().iter().map(|w| w / n));
    }
    Ok(PointMeasure {
        dim,
        coords,
        weights,
    })
}
