//! Desk-scale experiments: synthetic data, exhaustive posteriors over
//! partitions, the prior-dominance study and the d-sweep.

mod experiments;
mod posterior;

pub use experiments::{
    dominance_curve, selection_sweep, write_dominance_csv, write_selection_csv, DominanceRow, SelectionRow,
    DOMINANCE_COLUMNS, SELECTION_COLUMNS,
};
pub use posterior::{
    plugin_log_lik, posterior_over_partitions, LikelihoodKind, PosteriorEntry, PosteriorTable, MAX_POSTERIOR_N,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmm::Dataset;
use crate::partition::{Assignment, Budget};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    pub seed: u64,
    pub k_true: usize,
    pub n: usize,
    pub dims: usize,
    /// Distance between adjacent true means, in true standard deviations.
    pub separation: f64,
    /// True per-feature variance.
    pub variance: f64,
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_true == 0 || self.n == 0 || self.dims == 0 {
            return Err(Error::InvalidConfig("k_true, n and dims must be positive".into()));
        }
        if self.k_true > self.n {
            return Err(Error::InvalidConfig(format!("k_true={} exceeds n={}", self.k_true, self.n)));
        }
        if !(self.separation.is_finite() && self.separation > 0.0) {
            return Err(Error::InvalidConfig(format!("separation must be positive, got {}", self.separation)));
        }
        if !(self.variance.is_finite() && self.variance > 0.0) {
            return Err(Error::InvalidConfig(format!("variance must be positive, got {}", self.variance)));
        }
        Ok(())
    }

    /// True component means: evenly spaced along the first feature axis and
    /// centred on the origin.
    pub fn true_means(&self) -> Vec<Vec<f64>> {
        let spacing = self.separation * self.variance.sqrt();
        let centre = (self.k_true as f64 - 1.0) / 2.0;
        (0..self.k_true)
            .map(|k| {
                let mut m = vec![0.0; self.dims];
                m[0] = (k as f64 - centre) * spacing;
                m
            })
            .collect()
    }
}

/// Equal-weight mixture sample. Observation `i` comes from component
/// `i mod k_true` (so cluster sizes differ by at most one), drawn with the
/// configured seed.
pub fn generate_gmm_data(cfg: &GenConfig) -> Result<(Dataset, Assignment)> {
    cfg.validate()?;
    let means = cfg.true_means();
    let sd = cfg.variance.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut values = Vec::with_capacity(cfg.n * cfg.dims);
    let mut labels = Vec::with_capacity(cfg.n);
    for i in 0..cfg.n {
        let k = i % cfg.k_true;
        labels.push(k + 1);
        for m in &means[k] {
            let z: f64 = StandardNormal.sample(&mut rng);
            values.push(m + sd * z);
        }
    }
    Ok((Dataset::new(cfg.n, cfg.dims, values)?, Assignment::new(labels, cfg.k_true)?))
}

/// Shared knobs for the exhaustive posterior experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabSettings {
    pub budget: Budget,
    /// Plug-in variance floor as a multiple of each feature's data variance.
    pub plugin_floor_rel: f64,
}

impl LabSettings {
    pub const DEFAULT_PLUGIN_FLOOR_REL: f64 = 0.05;
}

impl Default for LabSettings {
    fn default() -> Self {
        Self { budget: Budget::DEFAULT, plugin_floor_rel: Self::DEFAULT_PLUGIN_FLOOR_REL }
    }
}

fn pairs(n: u64) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index between two labelings of the same items. Labels
/// are arbitrary integers; only co-membership matters.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::InvalidAssignment("labelings must be non-empty and of equal length".into()));
    }
    use std::collections::HashMap;
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| pairs(c)).sum();
    let sum_a: f64 = rows.values().map(|&c| pairs(c)).sum();
    let sum_b: f64 = cols.values().map(|&c| pairs(c)).sum();
    let total = pairs(a.len() as u64);
    let expected = if total > 0.0 { sum_a * sum_b / total } else { 0.0 };
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        // Both labelings are all-singletons or all-one-block.
        return Ok(if sum_a == sum_b { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max - expected))
}
