use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{run_on, Baseline, ExperimentConfig, ExperimentReport};
use crate::error::Result;
use crate::vectorizer::ContrastFamily;

/// Values tried along each axis; every other parameter stays at the base
/// configuration's value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationAxes {
    pub budgets: Vec<usize>,
    pub families: Vec<ContrastFamily>,
    pub fractions: Vec<f64>,
    /// Also run the grid baseline at every budget (budgets below 4 skipped).
    pub include_grid: bool,
}

impl Default for AblationAxes {
    fn default() -> Self {
        Self {
            budgets: vec![4, 16, 36, 100],
            families: vec![ContrastFamily::Laplacian, ContrastFamily::Gaussian],
            fractions: vec![0.10, 1.0],
            include_grid: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    /// `budget`, `family`, `calibration` or `grid`.
    pub axis: String,
    pub value: String,
    pub report: ExperimentReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn find(&self, axis: &str, value: &str) -> Option<&ExperimentReport> {
        self.rows
            .iter()
            .find(|r| r.axis == axis && r.value == value)
            .map(|r| &r.report)
    }

    /// Plain-text table, one row per cell.
    pub fn render(&self) -> String {
        let mut out = format!(
            "{:<12} {:<10} {:>12} {:>10}\n",
            "axis", "value", "accuracy", "time (s)"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<12} {:<10} {:>12} {:>10.3}\n",
                r.axis,
                r.value,
                r.report.summary(),
                r.report.vectorization_seconds
            ));
        }
        out
    }
}

/// Varies one parameter at a time around `base`. Cells that coincide (for
/// example the base budget on the budget axis and the base family on the
/// family axis) are computed once.
pub fn run_ablation(base: &ExperimentConfig, axes: &AblationAxes) -> Result<AblationTable> {
    base.validate()?;
    let data = base.dataset.resolve()?;
    let mut cells: Vec<(String, String, ExperimentConfig)> = Vec::new();
    for &b in &axes.budgets {
        let cfg = ExperimentConfig { budget: b, ..base.clone() };
        cells.push(("budget".into(), b.to_string(), cfg));
    }
    for &f in &axes.families {
        let cfg = ExperimentConfig { family: f, ..base.clone() };
        cells.push(("family".into(), f.to_string(), cfg));
    }
    for &p in &axes.fractions {
        let cfg = ExperimentConfig {
            calibration_fraction: p,
            ..base.clone()
        };
        cells.push(("calibration".into(), format!("{}%", p * 100.0), cfg));
    }
    if axes.include_grid {
        for &b in axes.budgets.iter().filter(|&&b| b >= 4) {
            let cfg = ExperimentConfig {
                budget: b,
                baseline: Baseline::Grid,
                ..base.clone()
            };
            cells.push(("grid".into(), b.to_string(), cfg));
        }
    }

    let mut cache: HashMap<String, ExperimentReport> = HashMap::new();
    let mut rows = Vec::with_capacity(cells.len());
    for (axis, value, cfg) in cells {
        let key = serde_json::to_string(&cfg)?;
        let report = match cache.get(&key) {
            Some(r) => r.clone(),
            None => {
                let r = run_on(&data, &cfg)?;
                cache.insert(key, r.clone());
                r
            }
        };
        rows.push(AblationRow { axis, value, report });
    }
    Ok(AblationTable { rows })
}
