//! Log-space scores for the CRP, FIC and GFIC priors over assignments.
//!
//! The CRP is scored in two forms: the per-sequence probability
//! `∏_{n_k>0} (n_k - 1)! / (N! K!)` and the equivalence-class closed form
//! `1 / (K! ∏_{n_k>0} n_k)`. FIC and GFIC are unnormalized penalties
//! `∏ n_k^{-D_c/2}` and `∏ n_k^{-d}`; empty slots never contribute.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{assignment_counts, enumerate_partitions, Assignment, Budget, CountVector, Partition};
use crate::special::{binomial, ln_factorial, log_sum_exp};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PriorSpec {
    Crp,
    Fic { dc: f64 },
    Gfic { d: f64 },
    Uniform,
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PriorSpec::Fic { dc } if !(dc.is_finite() && dc > 0.0) => {
                Err(Error::InvalidPrior(format!("FIC needs dc > 0, got {dc}")))
            }
            PriorSpec::Gfic { d } if !(d.is_finite() && d > 0.0) => {
                Err(Error::InvalidPrior(format!("GFIC needs d > 0, got {d}")))
            }
            _ => Ok(()),
        }
    }

    /// True when scores from this prior are normalized probabilities.
    pub fn normalized(&self) -> bool {
        matches!(self, PriorSpec::Crp | PriorSpec::Uniform)
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            PriorSpec::Crp => "crp",
            PriorSpec::Fic { .. } => "fic",
            PriorSpec::Gfic { .. } => "gfic",
            PriorSpec::Uniform => "uniform",
        }
    }

    /// The single numeric parameter, if the kind has one.
    pub fn param(&self) -> Option<f64> {
        match *self {
            PriorSpec::Fic { dc } => Some(dc),
            PriorSpec::Gfic { d } => Some(d),
            _ => None,
        }
    }
}

/// Returns a message when `d` falls outside the open interval `(1, dc/2)`.
///
/// Both endpoints are legitimate experiment settings (`d = dc/2` is FIC and
/// `d -> 0` removes the penalty), so this is advisory only.
pub fn gfic_range_warning(d: f64, dc: f64) -> Option<String> {
    let upper = dc / 2.0;
    if d > 1.0 && d < upper {
        None
    } else {
        Some(format!("GFIC exponent d={d} lies outside (1, D_c/2) = (1, {upper})"))
    }
}

pub fn crp_sequence_log_prob(z: &Assignment) -> f64 {
    let counts = assignment_counts(z);
    let numerator: f64 = counts.nonempty().map(|c| ln_factorial(c - 1)).sum();
    numerator - ln_factorial(z.len()) - ln_factorial(z.k_slots())
}

pub fn crp_class_log_prob(b: &Partition, k_slots: usize) -> Result<f64> {
    if k_slots < b.num_blocks() {
        return Err(Error::TooFewSlots { k_slots, blocks: b.num_blocks() });
    }
    let sizes: f64 = b.block_sizes().into_iter().map(|s| (s as f64).ln()).sum();
    Ok(-ln_factorial(k_slots) - sizes)
}

/// Calls `visit` with every ordered tuple of `k` non-negative integers
/// summing to `n`.
fn for_each_composition(n: usize, k: usize, visit: &mut impl FnMut(&[usize])) {
    fn rec(rest: usize, slots: usize, buf: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
        if slots == 1 {
            buf.push(rest);
            visit(buf);
            buf.pop();
            return;
        }
        for first in 0..=rest {
            buf.push(first);
            rec(rest - first, slots - 1, buf, visit);
            buf.pop();
        }
    }
    let mut buf = Vec::with_capacity(k);
    rec(n, k, &mut buf, visit);
}

fn check_normalizer_args(n: usize, k: usize) -> Result<()> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidConfig("normalizer needs n >= 1 and k >= 1".into()));
    }
    Ok(())
}

fn composition_count(n: usize, k: usize) -> u128 {
    binomial((n + k - 1) as u128, (k - 1) as u128).unwrap_or(u128::MAX)
}

/// `ln Z_K` with `Z_K` summed over ordered count tuples `(n_1..n_k)`,
/// `n_j >= 0`, `Σ n_j = n`, of `1/∏_{n_j>0} n_j`.
pub fn crp_fixed_k_log_normalizer_compositions(n: usize, k: usize, budget: Budget) -> Result<f64> {
    check_normalizer_args(n, k)?;
    budget.check(composition_count(n, k))?;
    let mut terms = Vec::new();
    for_each_composition(n, k, &mut |parts| {
        terms.push(-parts.iter().filter(|&&p| p > 0).map(|&p| (p as f64).ln()).sum::<f64>());
    });
    Ok(log_sum_exp(&terms))
}

/// `ln` of the same sum taken over set partitions with at most `k` blocks.
pub fn crp_fixed_k_log_normalizer_partitions(n: usize, k: usize, budget: Budget) -> Result<f64> {
    check_normalizer_args(n, k)?;
    let terms: Vec<f64> = enumerate_partitions(n, k, budget)?
        .map(|b| -b.block_sizes().into_iter().map(|s| (s as f64).ln()).sum::<f64>())
        .collect();
    Ok(log_sum_exp(&terms))
}

fn inverse_product(sizes: impl Iterator<Item = usize>) -> BigRational {
    let denom = sizes.fold(BigInt::one(), |acc, s| acc * BigInt::from(s));
    BigRational::new(BigInt::one(), denom)
}

/// Exact rational value of the composition-sum normalizer.
pub fn crp_fixed_k_normalizer_compositions_exact(n: usize, k: usize, budget: Budget) -> Result<BigRational> {
    check_normalizer_args(n, k)?;
    budget.check(composition_count(n, k))?;
    let mut total = BigRational::zero();
    for_each_composition(n, k, &mut |parts| {
        total += inverse_product(parts.iter().copied().filter(|&p| p > 0));
    });
    Ok(total)
}

/// Exact rational value of the partition-sum normalizer.
pub fn crp_fixed_k_normalizer_partitions_exact(n: usize, k: usize, budget: Budget) -> Result<BigRational> {
    check_normalizer_args(n, k)?;
    let mut total = BigRational::zero();
    for b in enumerate_partitions(n, k, budget)? {
        total += inverse_product(b.block_sizes().into_iter());
    }
    Ok(total)
}

fn penalty(sizes: impl Iterator<Item = usize>, exponent: f64) -> f64 {
    let log_sum: f64 = sizes.filter(|&s| s > 0).map(|s| (s as f64).ln()).sum();
    -exponent * log_sum
}

/// `ln ∏_{n_k>0} n_k^{-dc/2}`.
pub fn fic_log_score(counts: &CountVector, dc: f64) -> f64 {
    gfic_log_score(counts, dc / 2.0)
}

/// `ln ∏_{n_k>0} n_k^{-d}`.
pub fn gfic_log_score(counts: &CountVector, d: f64) -> f64 {
    penalty(counts.nonempty(), d)
}

pub fn log_prior(spec: &PriorSpec, z: &Assignment) -> Result<f64> {
    spec.validate()?;
    Ok(match *spec {
        PriorSpec::Crp => crp_sequence_log_prob(z),
        PriorSpec::Fic { dc } => fic_log_score(&assignment_counts(z), dc),
        PriorSpec::Gfic { d } => gfic_log_score(&assignment_counts(z), d),
        PriorSpec::Uniform => 0.0,
    })
}

/// Prior score of a partition. CRP uses the class form with one slot per
/// block; FIC and GFIC penalize the block sizes.
pub fn log_prior_partition(spec: &PriorSpec, b: &Partition) -> Result<f64> {
    spec.validate()?;
    Ok(match *spec {
        PriorSpec::Crp => crp_class_log_prob(b, b.num_blocks())?,
        PriorSpec::Fic { dc } => penalty(b.block_sizes().into_iter(), dc / 2.0),
        PriorSpec::Gfic { d } => penalty(b.block_sizes().into_iter(), d),
        PriorSpec::Uniform => 0.0,
    })
}
