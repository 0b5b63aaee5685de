//! Random forest classifier: bootstrap-aggregated CART trees with Gini
//! impurity and per-split feature subsampling.
//!
//! Defaults follow the common reference configuration: 100 trees, `sqrt(p)`
//! candidate features per split, `min_samples_split = 2`, unlimited depth and
//! bootstrap sampling. Trees are grown from independent seeded streams, so a
//! forest is reproducible regardless of how many threads train it.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AtolError, Result};
use crate::matrix::Matrix;
use crate::util::seeded_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    Sqrt,
    All,
    Fixed(usize),
}

impl MaxFeatures {
    fn resolve(self, p: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => ((p as f64).sqrt() as usize).max(1),
            MaxFeatures::All => p,
            MaxFeatures::Fixed(k) => k.clamp(1, p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    pub min_samples_split: usize,
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_features: MaxFeatures::Sqrt,
            min_samples_split: 2,
            max_depth: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(AtolError::InvalidConfig("n_trees must be at least 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(AtolError::InvalidConfig("min_samples_split must be at least 2".into()));
        }
        if self.max_features == MaxFeatures::Fixed(0) {
            return Err(AtolError::InvalidConfig("max_features must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    /// Class histogram of the in-bag samples that reached this leaf.
    Leaf { counts: Vec<u32> },
    /// Samples with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn leaf(&self, x: &[f64]) -> &[u32] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { counts } => return counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }
}

/// Index of the largest count; the first one wins ties.
fn argmax(counts: &[u32]) -> usize {
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    /// Class labels in ascending order; predictions tie-break toward the
    /// earliest.
    classes: Vec<u32>,
    n_features: usize,
    trees: Vec<Tree>,
    importances: Vec<f64>,
}

struct Grower<'a> {
    columns: &'a [Vec<f64>],
    y: &'a [usize],
    n_classes: usize,
    mtry: usize,
    cfg: &'a ForestConfig,
    rng: ChaCha8Rng,
    buf: Vec<(f64, usize)>,
    importance: Vec<f64>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl Grower<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<u32> {
        let mut c = vec![0u32; self.n_classes];
        for &i in idx {
            c[self.y[i]] += 1;
        }
        c
    }

    /// Best split among the sampled features, scored by
    /// `Σ_k L_k²/n_L + Σ_k R_k²/n_R` (maximizing it minimizes the weighted
    /// child Gini impurity).
    fn best_split(&mut self, idx: &[usize], parent: &[u32]) -> Option<BestSplit> {
        let p = self.columns.len();
        let mut features: Vec<usize> = (0..p).collect();
        let mut best: Option<BestSplit> = None;
        let mut visited = 0;
        let mut left = vec![0u32; self.n_classes];

        // Draw features lazily; constant features in this node do not count
        // toward mtry.
        for drawn in 0..p {
            if visited >= self.mtry {
                break;
            }
            let pick = self.rng.gen_range(drawn..p);
            features.swap(drawn, pick);
            let f = features[drawn];
            let col = &self.columns[f];

            self.buf.clear();
            self.buf.extend(idx.iter().map(|&i| (col[i], self.y[i])));
            self.buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            if self.buf[0].0 == self.buf[self.buf.len() - 1].0 {
                continue;
            }
            visited += 1;

            left.fill(0);
            let n = self.buf.len();
            let (mut left_sq, mut right_sq) = (0.0_f64, parent.iter().map(|&c| (c as f64).powi(2)).sum::<f64>());
            for pos in 0..n - 1 {
                let k = self.buf[pos].1;
                let l = left[k] as f64;
                let r = (parent[k] - left[k]) as f64;
                left_sq += 2.0 * l + 1.0;
                right_sq -= 2.0 * r - 1.0;
                left[k] += 1;
                let (v, next) = (self.buf[pos].0, self.buf[pos + 1].0);
                if v == next {
                    continue;
                }
                let n_left = (pos + 1) as f64;
                let score = left_sq / n_left + right_sq / (n as f64 - n_left);
                if best.as_ref().is_none_or(|b| score > b.score) {
                    let mid = v / 2.0 + next / 2.0;
                    let threshold = if mid >= next { v } else { mid };
                    best = Some(BestSplit {
                        feature: f,
                        threshold,
                        score,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, n_samples: usize) -> Tree {
        let n = self.y.len();
        let mut idx: Vec<usize> = if self.cfg.bootstrap {
            (0..n_samples).map(|_| self.rng.gen_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        let total = idx.len() as f64;
        let mut nodes = vec![Node::Leaf { counts: Vec::new() }];
        let mut stack = vec![(0usize, idx.len(), 0usize, 0usize)];
        while let Some((start, end, depth, at)) = stack.pop() {
            let counts = self.counts(&idx[start..end]);
            let m = end - start;
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            let depth_ok = self.cfg.max_depth.is_none_or(|d| depth < d);
            let split = if !pure && m >= self.cfg.min_samples_split && depth_ok {
                self.best_split(&idx[start..end], &counts)
            } else {
                None
            };
            let Some(split) = split else {
                nodes[at] = Node::Leaf { counts };
                continue;
            };

            let col = &self.columns[split.feature];
            let slice = &mut idx[start..end];
            let mut mid = 0;
            for i in 0..slice.len() {
                if col[slice[i]] <= split.threshold {
                    slice.swap(i, mid);
                    mid += 1;
                }
            }
            let sum_sq = |c: &[u32]| c.iter().map(|&v| (v as f64).powi(2)).sum::<f64>();
            // weighted impurity decrease: m·G(parent) − Σ n_child·G(child)
            let decrease = split.score - sum_sq(&counts) / m as f64;
            self.importance[split.feature] += decrease / total;

            let (left, right) = (nodes.len(), nodes.len() + 1);
            nodes.push(Node::Leaf { counts: Vec::new() });
            nodes.push(Node::Leaf { counts: Vec::new() });
            nodes[at] = Node::Split {
                feature: split.feature,
                threshold: split.threshold,
                left,
                right,
            };
            stack.push((start + mid, end, depth + 1, right));
            stack.push((start, start + mid, depth + 1, left));
        }
        Tree { nodes }
    }
}

fn check_features(x: &Matrix) -> Result<()> {
    for i in 0..x.rows() {
        if let Some(col) = x.row(i).iter().position(|v| v.is_nan()) {
            return Err(AtolError::NanFeature { row: i, col });
        }
    }
    Ok(())
}

impl ForestModel {
    pub fn fit(x: &Matrix, y: &[u32], cfg: &ForestConfig) -> Result<Self> {
        cfg.validate()?;
        if x.rows() != y.len() {
            return Err(AtolError::InvalidConfig(format!(
                "{} rows but {} labels",
                x.rows(),
                y.len()
            )));
        }
        if x.rows() < 2 {
            return Err(AtolError::InvalidConfig("at least two samples are required".into()));
        }
        if x.cols() == 0 {
            return Err(AtolError::InvalidConfig("at least one feature is required".into()));
        }
        check_features(x)?;
        let mut classes = y.to_vec();
        classes.sort_unstable();
        classes.dedup();
        if classes.len() < 2 {
            return Err(AtolError::DegenerateLabels);
        }
        let y_idx: Vec<usize> = y
            .iter()
            .map(|l| classes.binary_search(l).expect("label is in class list"))
            .collect();
        let columns: Vec<Vec<f64>> = (0..x.cols())
            .map(|f| (0..x.rows()).map(|i| x.get(i, f)).collect())
            .collect();
        let mtry = cfg.max_features.resolve(x.cols());

        let grown: Vec<(Tree, Vec<f64>)> = (0..cfg.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut g = Grower {
                    columns: &columns,
                    y: &y_idx,
                    n_classes: classes.len(),
                    mtry,
                    cfg,
                    rng: seeded_rng(cfg.seed, t as u64),
                    buf: Vec::with_capacity(y.len()),
                    importance: vec![0.0; x.cols()],
                };
                let tree = g.grow(y.len());
                (tree, g.importance)
            })
            .collect();

        let mut importances = vec![0.0; x.cols()];
        let mut trees = Vec::with_capacity(grown.len());
        for (tree, imp) in grown {
            let s: f64 = imp.iter().sum();
            if s > 0.0 {
                for (a, v) in importances.iter_mut().zip(&imp) {
                    *a += v / s;
                }
            }
            trees.push(tree);
        }
        let s: f64 = importances.iter().sum();
        if s > 0.0 {
            importances.iter_mut().for_each(|v| *v /= s);
        }
        Ok(Self {
            classes,
            n_features: x.cols(),
            trees,
            importances,
        })
    }

    pub fn classes(&self) -> &[u32] {
        &self.classes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Mean normalized impurity decrease per feature; sums to one unless no
    /// tree ever split.
    pub fn feature_importances(&self) -> &[f64] {
        &self.importances
    }

    fn predict_row(&self, x: &[f64]) -> u32 {
        let mut votes = vec![0u32; self.classes.len()];
        for t in &self.trees {
            votes[argmax(t.leaf(x))] += 1;
        }
        self.classes[argmax(&votes)]
    }

    /// Majority vote of the per-tree leaf majorities; ties go to the smallest
    /// label.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<u32>> {
        if x.cols() != self.n_features {
            return Err(AtolError::DimensionMismatch {
                expected: self.n_features,
                found: x.cols(),
            });
        }
        check_features(x)?;
        Ok((0..x.rows())
            .into_par_iter()
            .map(|i| self.predict_row(x.row(i)))
            .collect())
    }

    pub fn accuracy(&self, x: &Matrix, y: &[u32]) -> Result<f64> {
        if x.rows() == 0 {
            return Err(AtolError::EmptyEvaluation);
        }
        if x.rows() != y.len() {
            return Err(AtolError::InvalidConfig(format!(
                "{} rows but {} labels",
                x.rows(),
                y.len()
            )));
        }
        let pred = self.predict(x)?;
        let correct = pred.iter().zip(y).filter(|(a, b)| a == b).count();
        Ok(correct as f64 / y.len() as f64)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Tree count and the node count of every tree.
    pub fn node_counts(&self) -> Vec<usize> {
        self.trees.iter().map(|t| t.nodes.len()).collect()
    }

    /// Class histogram of the leaf that `x` reaches in tree `t`.
    pub fn leaf_counts(&self, t: usize, x: &[f64]) -> Vec<u32> {
        self.trees[t].leaf(x).to_vec()
    }
}
