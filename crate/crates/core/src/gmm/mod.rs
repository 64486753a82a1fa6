//! Diagonal Gaussian mixtures fitted by FAB-EM.
//!
//! FAB-EM is EM on the variational objective
//!
//! ```text
//! Σ_i Σ_k q_ik [ln w_k + ln N(x_i | μ_k, σ²_k)] - d Σ_{ñ_k>0} ln ñ_k + Σ_i H(q_i)
//! ```
//!
//! with `ñ_k = Σ_i q_ik`. The penalty is convex in `ñ`, so its tangent at the
//! previous soft counts minorizes it; maximizing that minorizer over `q` gives
//! the shrunken E-step `q_ik ∝ w_k N(x_i | k) exp(-d / ñ_k)`. Each (E, M)
//! pair is therefore non-decreasing in the objective. With `d = 0` the
//! procedure is plain EM.
//!
//! For this family a component carries `D_c = 2D` parameters (one mean and
//! one variance per feature), so `d = D` recovers the FIC exponent.

mod data;
mod fit;

pub use data::Dataset;
pub use fit::{
    fab_fit, fab_fit_from, fab_fit_observed, initial_responsibilities, FabConfig, FitTrace, Init, IterationRecord,
    IterationView, ModelDocument,
};

use crate::error::{Error, Result};
use crate::partition::{assignment_counts, Assignment};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Parameter dimensionality of one diagonal Gaussian component over `dims`
/// features.
pub fn component_dimensionality(dims: usize) -> usize {
    2 * dims
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
}

impl GmmModel {
    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn dims(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    /// Components whose weight is exactly zero.
    pub fn dead_components(&self) -> Vec<usize> {
        self.weights.iter().enumerate().filter(|(_, &w)| w == 0.0).map(|(k, _)| k).collect()
    }

    /// Keeps only the listed components, in the given order. Weights are
    /// renormalized.
    pub fn select(&self, keep: &[usize]) -> GmmModel {
        let total: f64 = keep.iter().map(|&k| self.weights[k]).sum();
        GmmModel {
            weights: keep
                .iter()
                .map(|&k| if total > 0.0 { self.weights[k] / total } else { 1.0 / keep.len() as f64 })
                .collect(),
            means: keep.iter().map(|&k| self.means[k].clone()).collect(),
            variances: keep.iter().map(|&k| self.variances[k].clone()).collect(),
        }
    }

    /// Most probable component for each row, as a 1-based assignment.
    pub fn predict(&self, x: &Dataset) -> Assignment {
        let labels = x
            .rows()
            .map(|row| {
                let mut best = (f64::NEG_INFINITY, 0);
                for k in 0..self.k() {
                    let s = self.weights[k].ln() + component_log_pdf(row, &self.means[k], &self.variances[k]);
                    if s > best.0 {
                        best = (s, k);
                    }
                }
                best.1 + 1
            })
            .collect();
        Assignment::new(labels, self.k()).expect("labels are within 1..=k")
    }
}

/// Row-stochastic `N x k` matrix of soft assignments.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    n: usize,
    k: usize,
    values: Vec<f64>,
}

impl Responsibilities {
    /// Validates that every row lies on the simplex (within 1e-12).
    pub fn new(n: usize, k: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || k == 0 || values.len() != n * k {
            return Err(Error::InvalidConfig(format!("responsibilities must be {n}x{k}")));
        }
        for (i, row) in values.chunks_exact(k).enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&v| !(0.0..=1.0).contains(&v)) || (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidConfig(format!("responsibility row {} is not on the simplex", i + 1)));
            }
        }
        Ok(Self { n, k, values })
    }

    /// One-hot responsibilities matching `z`, with `z.k_slots()` columns.
    pub fn hard(z: &Assignment) -> Self {
        let k = z.k_slots();
        let mut values = vec![0.0; z.len() * k];
        for (i, &l) in z.labels().iter().enumerate() {
            values[i * k + l - 1] = 1.0;
        }
        Self { n: z.len(), k, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.k..(i + 1) * self.k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.k)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Soft counts `ñ_k = Σ_i q_ik`.
    pub fn soft_counts(&self) -> Vec<f64> {
        let mut counts = vec![0.0; self.k];
        for row in self.rows() {
            for (c, q) in counts.iter_mut().zip(row) {
                *c += q;
            }
        }
        counts
    }
}

/// `Σ_j [-½ ln(2π var_j) - (x_j - mean_j)² / (2 var_j)]`.
pub fn component_log_pdf(x: &[f64], mean: &[f64], variance: &[f64]) -> f64 {
    x.iter()
        .zip(mean)
        .zip(variance)
        .map(|((x, m), v)| {
            let r = x - m;
            -0.5 * (LN_2PI + v.ln()) - r * r / (2.0 * v)
        })
        .sum()
}

/// Per nonempty label: weight `n_k/N`, sample mean, and biased sample
/// variance floored at `var_floor`. Empty slots are dropped, so the
/// result has one component per occupied label, in label order.
pub fn mle_fit_given_assignment(x: &Dataset, z: &Assignment, var_floor: &[f64]) -> Result<GmmModel> {
    if z.len() != x.n() {
        return Err(Error::InvalidAssignment(format!("{} labels for {} observations", z.len(), x.n())));
    }
    check_floor(x, var_floor)?;
    let counts = assignment_counts(z);
    let occupied: Vec<usize> = (0..z.k_slots()).filter(|&k| counts.0[k] > 0).collect();
    let dims = x.dims();
    let mut model = GmmModel {
        weights: Vec::with_capacity(occupied.len()),
        means: Vec::with_capacity(occupied.len()),
        variances: Vec::with_capacity(occupied.len()),
    };
    for &slot in &occupied {
        let members: Vec<&[f64]> =
            x.rows().zip(z.labels()).filter(|(_, &l)| l == slot + 1).map(|(row, _)| row).collect();
        let count = members.len() as f64;
        let mut mean = vec![0.0; dims];
        for row in &members {
            for (m, v) in mean.iter_mut().zip(*row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= count);
        let mut var = vec![0.0; dims];
        for row in &members {
            for ((s, v), m) in var.iter_mut().zip(*row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        for (s, floor) in var.iter_mut().zip(var_floor) {
            *s = (*s / count).max(*floor);
        }
        model.weights.push(count / x.n() as f64);
        model.means.push(mean);
        model.variances.push(var);
    }
    Ok(model)
}

fn check_floor(x: &Dataset, var_floor: &[f64]) -> Result<()> {
    if var_floor.len() != x.dims() || var_floor.iter().any(|&f| !(f.is_finite() && f > 0.0)) {
        return Err(Error::InvalidConfig(format!("variance floor must hold {} positive values", x.dims())));
    }
    Ok(())
}

/// Shrunken E-step. `prev_counts` are the soft counts the penalty is
/// linearized at; a component with zero weight or (when `d > 0`) zero
/// previous count receives no responsibility. Returns the new
/// responsibilities and their soft counts.
pub fn fab_e_step(x: &Dataset, model: &GmmModel, prev_counts: &[f64], d: f64) -> (Responsibilities, Vec<f64>) {
    let k = model.k();
    debug_assert_eq!(prev_counts.len(), k);
    let bias: Vec<f64> = (0..k)
        .map(|c| {
            let log_w = model.weights[c].ln();
            if d == 0.0 {
                log_w
            } else if prev_counts[c] > 0.0 {
                log_w - d / prev_counts[c]
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let mut values = Vec::with_capacity(x.n() * k);
    let mut log_row = vec![0.0; k];
    for row in x.rows() {
        for c in 0..k {
            log_row[c] = bias[c] + component_log_pdf(row, &model.means[c], &model.variances[c]);
        }
        let max = log_row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            // Every component is dead for this row; fall back to uniform.
            values.extend(std::iter::repeat_n(1.0 / k as f64, k));
            continue;
        }
        let sum: f64 = log_row.iter().map(|l| (l - max).exp()).sum();
        let log_norm = max + sum.ln();
        values.extend(log_row.iter().map(|l| (l - log_norm).exp()));
    }
    let q = Responsibilities { n: x.n(), k, values };
    let counts = q.soft_counts();
    (q, counts)
}

/// Weighted MLE. A component with zero soft count gets weight 0, the data
/// mean and the data variance (floored); callers prune it.
pub fn fab_m_step(x: &Dataset, q: &Responsibilities, var_floor: &[f64]) -> GmmModel {
    let k = q.k();
    let dims = x.dims();
    let counts = q.soft_counts();
    let mut means = vec![vec![0.0; dims]; k];
    for (row, qr) in x.rows().zip(q.rows()) {
        for c in 0..k {
            if qr[c] > 0.0 {
                for (m, v) in means[c].iter_mut().zip(row) {
                    *m += qr[c] * v;
                }
            }
        }
    }
    let data_means = x.column_means();
    let data_vars = x.column_variances();
    for c in 0..k {
        if counts[c] > 0.0 {
            means[c].iter_mut().for_each(|m| *m /= counts[c]);
        } else {
            means[c].clone_from(&data_means);
        }
    }
    let mut variances = vec![vec![0.0; dims]; k];
    for (row, qr) in x.rows().zip(q.rows()) {
        for c in 0..k {
            if qr[c] > 0.0 {
                for ((s, v), m) in variances[c].iter_mut().zip(row).zip(&means[c]) {
                    *s += qr[c] * (v - m) * (v - m);
                }
            }
        }
    }
    for c in 0..k {
        for j in 0..dims {
            let raw = if counts[c] > 0.0 { variances[c][j] / counts[c] } else { data_vars[j] };
            variances[c][j] = raw.max(var_floor[j]);
        }
    }
    let weights = counts.iter().map(|c| c / x.n() as f64).collect();
    GmmModel { weights, means, variances }
}

/// The FAB-EM objective. Terms with `q_ik = 0` contribute nothing.
pub fn fab_objective(x: &Dataset, q: &Responsibilities, model: &GmmModel, d: f64) -> f64 {
    let mut expected = 0.0;
    let mut entropy = 0.0;
    for (row, qr) in x.rows().zip(q.rows()) {
        for (c, &qv) in qr.iter().enumerate() {
            if qv > 0.0 {
                expected += qv * (model.weights[c].ln() + component_log_pdf(row, &model.means[c], &model.variances[c]));
                entropy -= qv * qv.ln();
            }
        }
    }
    let penalty: f64 = q.soft_counts().iter().filter(|&&c| c > 0.0).map(|c| c.ln()).sum();
    expected - d * penalty + entropy
}
