//! Exhaustive checks of the relationships between the CRP, FIC and GFIC
//! scores at small `N`, plus the fixed-K normalizer audit.

use std::collections::HashMap;
use std::fmt;

use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::partition::{
    assignment_counts, class_size, enumerate_assignments, enumerate_partitions, partition_of, Budget, Partition,
};
use crate::priors::{
    crp_class_log_prob, crp_fixed_k_normalizer_compositions_exact, crp_fixed_k_normalizer_partitions_exact,
    crp_sequence_log_prob, fic_log_score, gfic_log_score,
};
use crate::special::ln_factorial;

/// Largest `n_max` accepted by [`verify_priors`].
pub const VERIFY_MAX_N: usize = 8;

pub const EQ1_TOLERANCE: f64 = 1e-10;
pub const DC2_TOLERANCE: f64 = 1e-12;
pub const ENDPOINT_TOLERANCE: f64 = 1e-15;
pub const ENDPOINT_DCS: [f64; 4] = [1.0, 2.0, 4.0, 10.0];

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub instances: u64,
    pub max_deviation: f64,
    pub tolerance: f64,
}

impl IdentityCheck {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self { name, instances: 0, max_deviation: 0.0, tolerance }
    }

    fn record(&mut self, deviation: f64) {
        self.instances += 1;
        // NaN must register as a failure.
        if deviation.is_nan() || deviation > self.max_deviation {
            self.max_deviation = if deviation.is_nan() { f64::INFINITY } else { deviation };
        }
    }

    pub fn passed(&self) -> bool {
        self.instances > 0 && self.max_deviation <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizerRow {
    pub n: usize,
    pub k: usize,
    pub compositions: BigRational,
    pub partitions: BigRational,
}

/// How sums over `{z : partition_of(z) = b}` compare with the class closed
/// form `1 / (K! ∏ n_k)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabelClassAudit {
    pub cases: u64,
    pub mismatches: u64,
    /// First mismatch: partition, K, label-class sum, closed form.
    pub example: Option<(String, usize, f64, f64)>,
    /// Largest relative deviation of the label-class sum from
    /// `∏ (n_j - 1)! / ((K - m)! N!)`, `m` the number of blocks.
    pub falling_factorial_max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub n_max: usize,
    pub k_max: usize,
    pub identities: Vec<IdentityCheck>,
    pub normalizers: Vec<NormalizerRow>,
    pub label_class: LabelClassAudit,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.identities.iter().all(IdentityCheck::passed)
    }

    pub fn identity(&self, name: &str) -> Option<&IdentityCheck> {
        self.identities.iter().find(|c| c.name == name)
    }
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Runs every identity exhaustively over `n <= n_max`, `k <= k_max`:
///
/// * `eq1-class-sum`: for each partition `b` with at most `k` blocks, the
///   sum of the sequence probabilities over the assignments sharing `b`'s
///   ordered count vector (block sizes in canonical order, padded with
///   empty slots) equals `1 / (k! ∏ n_j)`, relative;
/// * `class-size`: that class has exactly `n! / ∏ n_j!` members;
/// * `dc2-equivalence`: `fic(counts(z), 2) - crp_class(partition_of(z), k)`
///   equals `ln k!` for every assignment;
/// * `gfic-endpoint`: `gfic(c, dc/2) == fic(c, dc)` for every count vector
///   met and `dc` in {1, 2, 4, 10}.
pub fn verify_priors(n_max: usize, k_max: usize, budget: Budget) -> Result<VerifyReport> {
    if n_max == 0 || k_max == 0 {
        return Err(Error::InvalidConfig("n_max and k_max must be at least 1".into()));
    }
    if n_max > VERIFY_MAX_N {
        let items = (k_max as u128).checked_pow(n_max as u32).unwrap_or(u128::MAX);
        return Err(Error::BudgetExceeded { items, budget: budget.0 });
    }
    let mut eq1 = IdentityCheck::new("eq1-class-sum", EQ1_TOLERANCE);
    let mut sizes = IdentityCheck::new("class-size", 0.0);
    let mut dc2 = IdentityCheck::new("dc2-equivalence", DC2_TOLERANCE);
    let mut endpoint = IdentityCheck::new("gfic-endpoint", ENDPOINT_TOLERANCE);
    let mut audit = LabelClassAudit::default();

    for n in 1..=n_max {
        for k in 1..=k_max {
            let mut by_counts: HashMap<Vec<usize>, (f64, u64)> = HashMap::new();
            let mut by_partition: HashMap<Partition, f64> = HashMap::new();
            for z in enumerate_assignments(n, k, budget)? {
                let p = crp_sequence_log_prob(&z).exp();
                let counts = assignment_counts(&z);
                let b = partition_of(&z);

                let diff = fic_log_score(&counts, 2.0) - crp_class_log_prob(&b, k)?;
                dc2.record((diff - ln_factorial(k)).abs());

                for dc in ENDPOINT_DCS {
                    endpoint.record((gfic_log_score(&counts, dc / 2.0) - fic_log_score(&counts, dc)).abs());
                }

                let slot = by_counts.entry(counts.0).or_insert((0.0, 0));
                slot.0 += p;
                slot.1 += 1;
                *by_partition.entry(b).or_insert(0.0) += p;
            }

            for b in enumerate_partitions(n, k, budget)? {
                let closed = crp_class_log_prob(&b, k)?.exp();
                let key = crate::partition::assignment_counts(&b.canonical_assignment(k)?).0;
                let (sum, members) = by_counts.get(&key).copied().unwrap_or((0.0, 0));
                eq1.record(relative(sum, closed));
                let expected = class_size(&b, n)?;
                sizes.record((members as f64 - expected as f64).abs());

                let label_sum = by_partition.get(&b).copied().unwrap_or(0.0);
                audit.cases += 1;
                if relative(label_sum, closed) > EQ1_TOLERANCE {
                    audit.mismatches += 1;
                    if audit.example.is_none() {
                        audit.example = Some((b.to_string(), k, label_sum, closed));
                    }
                }
                let falling = b.block_sizes().into_iter().map(|s| ln_factorial(s - 1)).sum::<f64>()
                    - ln_factorial(k - b.num_blocks())
                    - ln_factorial(n);
                audit.falling_factorial_max_deviation =
                    audit.falling_factorial_max_deviation.max(relative(label_sum, falling.exp()));
            }
        }
    }

    Ok(VerifyReport {
        n_max,
        k_max,
        identities: vec![eq1, sizes, dc2, endpoint],
        normalizers: normalizer_audit(n_max, k_max, budget)?,
        label_class: audit,
    })
}

/// Exact composition-sum and partition-sum fixed-K normalizers for every
/// `n <= n_max`, `k <= k_max`.
pub fn normalizer_audit(n_max: usize, k_max: usize, budget: Budget) -> Result<Vec<NormalizerRow>> {
    let mut rows = Vec::new();
    for n in 1..=n_max {
        for k in 1..=k_max {
            rows.push(NormalizerRow {
                n,
                k,
                compositions: crp_fixed_k_normalizer_compositions_exact(n, k, budget)?,
                partitions: crp_fixed_k_normalizer_partitions_exact(n, k, budget)?,
            });
        }
    }
    Ok(rows)
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "prior identities (n <= {}, k <= {})", self.n_max, self.k_max)?;
        writeln!(f, "{:<18} {:>10} {:>14} {:>10}  result", "identity", "instances", "max deviation", "tolerance")?;
        for c in &self.identities {
            writeln!(
                f,
                "{:<18} {:>10} {:>14.3e} {:>10.0e}  {}",
                c.name,
                c.instances,
                c.max_deviation,
                c.tolerance,
                if c.passed() { "PASS" } else { "FAIL" }
            )?;
        }
        writeln!(f)?;
        let a = &self.label_class;
        write!(
            f,
            "label-class sums (over z with partition_of(z) = b) differ from 1/(K! prod n_k) in {} of {} cases",
            a.mismatches, a.cases
        )?;
        if let Some((b, k, got, closed)) = &a.example {
            write!(f, "; e.g. {b} with K={k}: {got:.6} vs {closed:.6}")?;
        }
        writeln!(f)?;
        writeln!(
            f,
            "label-class sums match prod (n_j-1)!/((K-m)! N!) within {:.3e} relative",
            a.falling_factorial_max_deviation
        )?;
        writeln!(f)?;
        writeln!(f, "fixed-K normalizer Z_K: ordered count tuples vs set partitions")?;
        writeln!(f, "{:>3} {:>3} {:>24} {:>24}  agree", "n", "k", "compositions", "partitions")?;
        for r in &self.normalizers {
            writeln!(
                f,
                "{:>3} {:>3} {:>24} {:>24}  {}",
                r.n,
                r.k,
                r.compositions.to_string(),
                r.partitions.to_string(),
                if r.compositions == r.partitions { "yes" } else { "no" }
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    #[test]
    fn tiny_run_has_one_instance_each() {
        let r = verify_priors(1, 1, Budget::DEFAULT).unwrap();
        assert!(r.passed());
        assert!(r.identities.iter().filter(|c| c.name != "gfic-endpoint").all(|c| c.instances == 1));
        assert_eq!(r.identity("gfic-endpoint").unwrap().instances, 4);
    }

    #[test]
    fn small_run_passes() {
        let r = verify_priors(5, 3, Budget::DEFAULT).unwrap();
        assert!(r.passed(), "{r}");
        assert!(r.label_class.mismatches > 0);
        assert!(r.label_class.falling_factorial_max_deviation < 1e-10);
    }

    #[test]
    fn too_large_is_a_budget_error() {
        assert!(verify_priors(20, 4, Budget::DEFAULT).unwrap_err().is_budget());
    }

    #[test]
    fn normalizer_rows_are_exact() {
        let rows = normalizer_audit(3, 2, Budget::DEFAULT).unwrap();
        let row = rows.iter().find(|r| r.n == 2 && r.k == 2).unwrap();
        assert_eq!(row.compositions, BigRational::from_integer(BigInt::from(2)));
        assert_eq!(row.partitions, BigRational::new(BigInt::from(3), BigInt::from(2)));
        // With one slot both supports hold a single term.
        assert!(rows.iter().filter(|r| r.k == 1).all(|r| r.compositions == r.partitions));
    }

    #[test]
    fn report_renders() {
        let text = verify_priors(2, 2, Budget::DEFAULT).unwrap().to_string();
        assert!(text.contains("dc2-equivalence"));
        assert!(text.contains("  2   2                        2                      3/2  no"));
    }
}
