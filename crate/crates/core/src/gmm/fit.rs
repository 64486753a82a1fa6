use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{fab_e_step, fab_m_step, fab_objective, Dataset, GmmModel, Responsibilities};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Init {
    /// Independent uniform draws per cell, normalized per row.
    #[default]
    RandomResponsibilities,
    /// k-means++ seeding followed by Lloyd iterations, then one-hot rows.
    KmeansStyle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FabConfig {
    pub k_init: usize,
    /// GFIC exponent; 0 disables the shrinkage.
    pub d: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
    /// Variance floor as a multiple of each feature's data variance.
    pub var_floor_rel: f64,
    /// Minimum soft count a component needs to survive; `None` means
    /// `max(d, 1)`.
    pub prune_threshold: Option<f64>,
    pub seed: u64,
    pub init: Init,
}

impl Default for FabConfig {
    fn default() -> Self {
        Self {
            k_init: 10,
            d: 1.0,
            max_iters: 500,
            rel_tol: 1e-6,
            var_floor_rel: 1e-6,
            prune_threshold: None,
            seed: 0,
            init: Init::default(),
        }
    }
}

impl FabConfig {
    pub fn effective_prune_threshold(&self) -> f64 {
        self.prune_threshold.unwrap_or(self.d.max(1.0))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.k_init == 0 {
            return bad("k_init must be at least 1".into());
        }
        if !(self.d.is_finite() && self.d >= 0.0) {
            return bad(format!("d must be a non-negative number, got {}", self.d));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if !(self.rel_tol.is_finite() && self.rel_tol > 0.0) {
            return bad(format!("rel_tol must be positive, got {}", self.rel_tol));
        }
        if !(self.var_floor_rel.is_finite() && self.var_floor_rel > 0.0) {
            return bad(format!("var_floor_rel must be positive, got {}", self.var_floor_rel));
        }
        if let Some(t) = self.prune_threshold {
            if !(t.is_finite() && t >= 0.0) {
                return bad(format!("prune_threshold must be non-negative, got {t}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    /// 0 is the state right after initialization.
    pub iteration: usize,
    pub objective: f64,
    pub live_components: usize,
    /// 1-based ids (initial component order) removed in this iteration.
    pub pruned: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct FitTrace {
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    pub iterations: usize,
    /// 1-based initial ids of the surviving components, in model order.
    pub survivors: Vec<usize>,
}

impl FitTrace {
    pub fn final_objective(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.objective)
    }

    pub fn pruning_events(&self) -> usize {
        self.records.iter().filter(|r| !r.pruned.is_empty()).count()
    }

    /// Iterations without pruning whose objective dropped by more than
    /// `rel_tol` relative to the previous record.
    pub fn monotonicity_violations(&self, rel_tol: f64) -> Vec<usize> {
        self.records
            .windows(2)
            .filter(|w| w[1].pruned.is_empty())
            .filter(|w| w[1].objective < w[0].objective - rel_tol * w[0].objective.abs().max(1.0))
            .map(|w| w[1].iteration)
            .collect()
    }
}

/// What an observer sees after each completed (E, M) iteration.
#[derive(Debug)]
pub struct IterationView<'a> {
    pub iteration: usize,
    pub responsibilities: &'a Responsibilities,
    pub model: &'a GmmModel,
    pub objective: f64,
    pub pruned: &'a [usize],
}

/// Serialized form of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub k: usize,
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
    pub d: f64,
    pub seed: u64,
    pub iterations: usize,
    pub converged: bool,
}

impl ModelDocument {
    pub fn new(model: &GmmModel, cfg: &FabConfig, trace: &FitTrace) -> Self {
        Self {
            k: model.k(),
            weights: model.weights.clone(),
            means: model.means.clone(),
            variances: model.variances.clone(),
            d: cfg.d,
            seed: cfg.seed,
            iterations: trace.iterations,
            converged: trace.converged,
        }
    }

    pub fn model(&self) -> GmmModel {
        GmmModel { weights: self.weights.clone(), means: self.means.clone(), variances: self.variances.clone() }
    }
}

/// The starting responsibilities `fab_fit` uses for this config.
pub fn initial_responsibilities(x: &Dataset, k: usize, init: Init, seed: u64) -> Result<Responsibilities> {
    if k == 0 || k > x.n() {
        return Err(Error::InvalidConfig(format!("k_init={k} must lie in 1..={}", x.n())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = match init {
        Init::RandomResponsibilities => {
            let mut values = Vec::with_capacity(x.n() * k);
            for _ in 0..x.n() {
                // Open interval keeps every entry strictly positive.
                let row: Vec<f64> = (0..k).map(|_| rng.random_range(f64::EPSILON..1.0)).collect();
                let sum: f64 = row.iter().sum();
                values.extend(row.into_iter().map(|v| v / sum));
            }
            values
        }
        Init::KmeansStyle => {
            let labels = kmeans_labels(x, k, &mut rng);
            let mut values = vec![0.0; x.n() * k];
            for (i, l) in labels.into_iter().enumerate() {
                values[i * k + l] = 1.0;
            }
            values
        }
    };
    Responsibilities::new(x.n(), k, values)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

const LLOYD_ITERS: usize = 20;

fn kmeans_labels(x: &Dataset, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut centers: Vec<Vec<f64>> = vec![x.row(rng.random_range(0..x.n())).to_vec()];
    let mut nearest: Vec<f64> = x.rows().map(|r| sq_dist(r, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            nearest
                .iter()
                .position(|&w| {
                    target -= w;
                    target < 0.0
                })
                .unwrap_or(x.n() - 1)
        } else {
            rng.random_range(0..x.n())
        };
        let center = x.row(pick).to_vec();
        for (d, row) in nearest.iter_mut().zip(x.rows()) {
            *d = d.min(sq_dist(row, &center));
        }
        centers.push(center);
    }
    let mut labels = vec![0; x.n()];
    for _ in 0..LLOYD_ITERS {
        let mut changed = false;
        for (i, row) in x.rows().enumerate() {
            let best =
                (0..k).min_by(|&a, &b| sq_dist(row, &centers[a]).total_cmp(&sq_dist(row, &centers[b]))).unwrap_or(0);
            changed |= labels[i] != best;
            labels[i] = best;
        }
        let mut sums = vec![vec![0.0; x.dims()]; k];
        let mut counts = vec![0usize; k];
        for (row, &l) in x.rows().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(row) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        if !changed {
            break;
        }
    }
    labels
}

pub fn fab_fit(x: &Dataset, cfg: &FabConfig) -> Result<(GmmModel, FitTrace)> {
    fab_fit_observed(x, cfg, |_| {})
}

/// [`fab_fit`] that reports every iteration to `observer`.
pub fn fab_fit_observed(
    x: &Dataset,
    cfg: &FabConfig,
    observer: impl FnMut(&IterationView<'_>),
) -> Result<(GmmModel, FitTrace)> {
    cfg.validate()?;
    let q = initial_responsibilities(x, cfg.k_init, cfg.init, cfg.seed)?;
    fab_fit_from(x, cfg, q, observer)
}

/// [`fab_fit_observed`] from explicit starting responsibilities; `cfg.k_init`,
/// `cfg.init` and `cfg.seed` are ignored.
pub fn fab_fit_from(
    x: &Dataset,
    cfg: &FabConfig,
    q0: Responsibilities,
    mut observer: impl FnMut(&IterationView<'_>),
) -> Result<(GmmModel, FitTrace)> {
    cfg.validate()?;
    if q0.n() != x.n() {
        return Err(Error::InvalidConfig(format!("responsibilities have {} rows, data has {}", q0.n(), x.n())));
    }
    if cfg.d > 0.0 {
        let dc = super::component_dimensionality(x.dims()) as f64;
        if let Some(msg) = crate::priors::gfic_range_warning(cfg.d, dc) {
            log::warn!("{msg}");
        }
    }
    let floor = x.variance_floor(cfg.var_floor_rel);
    let threshold = cfg.effective_prune_threshold();

    let mut q = q0;
    let mut ids: Vec<usize> = (1..=q.k()).collect();
    let mut counts = q.soft_counts();
    let mut model = fab_m_step(x, &q, &floor);
    let mut objective = fab_objective(x, &q, &model, cfg.d);
    let mut trace = FitTrace {
        records: vec![IterationRecord { iteration: 0, objective, live_components: model.k(), pruned: vec![] }],
        ..FitTrace::default()
    };

    for iteration in 1..=cfg.max_iters {
        let (mut q_new, mut counts_new) = fab_e_step(x, &model, &counts, cfg.d);

        let mut pruned = Vec::new();
        if model.k() > 1 {
            let largest = (0..model.k()).max_by(|&a, &b| counts_new[a].total_cmp(&counts_new[b])).unwrap_or(0);
            let keep: Vec<usize> = (0..model.k()).filter(|&c| c == largest || counts_new[c] >= threshold).collect();
            if keep.len() < model.k() {
                pruned = (0..model.k()).filter(|c| !keep.contains(c)).map(|c| ids[c]).collect();
                // Re-running the E-step on the survivors renormalizes each row
                // over them exactly.
                let prev: Vec<f64> = keep.iter().map(|&c| counts[c]).collect();
                model = model.select(&keep);
                ids = keep.iter().map(|&c| ids[c]).collect();
                (q_new, counts_new) = fab_e_step(x, &model, &prev, cfg.d);
            }
        }

        q = q_new;
        counts = counts_new;
        model = fab_m_step(x, &q, &floor);
        let next = fab_objective(x, &q, &model, cfg.d);
        observer(&IterationView { iteration, responsibilities: &q, model: &model, objective: next, pruned: &pruned });

        let change = (next - objective).abs() / if objective != 0.0 { objective.abs() } else { 1.0 };
        let was_pruned = !pruned.is_empty();
        trace.records.push(IterationRecord { iteration, objective: next, live_components: model.k(), pruned });
        trace.iterations = iteration;
        objective = next;
        if !was_pruned && change < cfg.rel_tol {
            trace.converged = true;
            break;
        }
    }
    trace.survivors = ids;
    Ok((model, trace))
}
