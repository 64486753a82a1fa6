use serde::Serialize;

use super::LabSettings;
use crate::error::{Error, Result};
use crate::gmm::{component_log_pdf, Dataset};
use crate::partition::{enumerate_partitions, restricted_bell, Partition};
use crate::priors::{log_prior_partition, PriorSpec};
use crate::special::log_sum_exp;

/// Largest `N` for which exhaustive posteriors are computed.
pub const MAX_POSTERIOR_N: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LikelihoodKind {
    PluginMle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorEntry {
    pub partition: Partition,
    pub log_score: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorTable {
    pub entries: Vec<PosteriorEntry>,
    pub prior: PriorSpec,
    pub likelihood_kind: LikelihoodKind,
}

impl PosteriorTable {
    /// Highest-probability entry; ties go to the earliest in enumeration
    /// order.
    pub fn map(&self) -> &PosteriorEntry {
        let mut best = &self.entries[0];
        for e in &self.entries[1..] {
            if e.log_score > best.log_score {
                best = e;
            }
        }
        best
    }

    pub fn total_probability(&self) -> f64 {
        self.entries.iter().map(|e| e.probability).sum()
    }

    /// Half the L1 distance between two tables over the same support.
    pub fn total_variation(&self, other: &PosteriorTable) -> Result<f64> {
        if self.entries.len() != other.entries.len()
            || self.entries.iter().zip(&other.entries).any(|(a, b)| a.partition != b.partition)
        {
            return Err(Error::InvalidConfig("posterior tables have different supports".into()));
        }
        Ok(0.5
            * self.entries.iter().zip(&other.entries).map(|(a, b)| (a.probability - b.probability).abs()).sum::<f64>())
    }

    pub fn probability_of(&self, b: &Partition) -> Option<f64> {
        self.entries.iter().find(|e| &e.partition == b).map(|e| e.probability)
    }
}

/// Sum over blocks of each block's Gaussian log-likelihood at its own MLE
/// (biased variance floored per feature). No mixing-weight term.
pub fn plugin_log_lik(x: &Dataset, b: &Partition, var_floor: &[f64]) -> Result<f64> {
    if b.n() != x.n() {
        return Err(Error::InvalidPartition(format!("partition covers {} elements, data has {}", b.n(), x.n())));
    }
    if var_floor.len() != x.dims() || var_floor.iter().any(|&f| f.is_nan() || f <= 0.0) {
        return Err(Error::InvalidConfig(format!("variance floor must hold {} positive values", x.dims())));
    }
    let dims = x.dims();
    let mut total = 0.0;
    for block in b.blocks() {
        let count = block.len() as f64;
        let mut mean = vec![0.0; dims];
        for &e in block {
            for (m, v) in mean.iter_mut().zip(x.row(e - 1)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= count);
        let mut var = vec![0.0; dims];
        for &e in block {
            for ((s, v), m) in var.iter_mut().zip(x.row(e - 1)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        for (s, f) in var.iter_mut().zip(var_floor) {
            *s = (*s / count).max(*f);
        }
        total += block.iter().map(|&e| component_log_pdf(x.row(e - 1), &mean, &var)).sum::<f64>();
    }
    Ok(total)
}

/// Exhaustive posterior over all partitions of the rows with at most
/// `k_max` blocks, under the plug-in likelihood and the given prior.
pub fn posterior_over_partitions(
    x: &Dataset,
    spec: &PriorSpec,
    k_max: usize,
    settings: &LabSettings,
) -> Result<PosteriorTable> {
    spec.validate()?;
    if x.n() > MAX_POSTERIOR_N {
        return Err(Error::BudgetExceeded { items: restricted_bell(x.n(), k_max), budget: settings.budget.0 });
    }
    let floor = x.variance_floor(settings.plugin_floor_rel);
    let mut entries = Vec::new();
    for b in enumerate_partitions(x.n(), k_max, settings.budget)? {
        let log_score = plugin_log_lik(x, &b, &floor)? + log_prior_partition(spec, &b)?;
        entries.push(PosteriorEntry { partition: b, log_score, probability: 0.0 });
    }
    let scores: Vec<f64> = entries.iter().map(|e| e.log_score).collect();
    let norm = log_sum_exp(&scores);
    for e in &mut entries {
        e.probability = (e.log_score - norm).exp();
    }
    Ok(PosteriorTable { entries, prior: *spec, likelihood_kind: LikelihoodKind::PluginMle })
}
