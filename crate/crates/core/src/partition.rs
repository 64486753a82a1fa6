//! Assignments, canonical set partitions, and exhaustive enumeration.
//!
//! An [`Assignment`] is a vector of 1-based labels over `k_slots` slots. The
//! [`Partition`] it induces forgets the labels: blocks are the nonempty label
//! classes, stored in canonical order (ascending by minimum element, elements
//! ascending within a block) so that structural equality is partition
//! equality.

use std::fmt;

use crate::error::{Error, Result};
use crate::special::binomial;

/// Cap on the number of items an exhaustive enumeration may produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget(pub u64);

impl Budget {
    pub const DEFAULT: Budget = Budget(10_000_000);
    pub const ENV_VAR: &'static str = "FABLAB_BUDGET";

    /// Reads `FABLAB_BUDGET`, falling back to the default when unset.
    pub fn from_env() -> Result<Budget> {
        match std::env::var(Self::ENV_VAR) {
            Ok(raw) => raw.trim().parse::<u64>().map(Budget).map_err(|_| {
                Error::InvalidConfig(format!("{} must be a non-negative integer, got {raw:?}", Self::ENV_VAR))
            }),
            Err(_) => Ok(Budget::DEFAULT),
        }
    }

    pub fn check(self, items: u128) -> Result<()> {
        if items > self.0 as u128 {
            Err(Error::BudgetExceeded { items, budget: self.0 })
        } else {
            Ok(())
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::DEFAULT
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    labels: Vec<usize>,
    k_slots: usize,
}

impl Assignment {
    pub fn new(labels: Vec<usize>, k_slots: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidAssignment("N must be at least 1".into()));
        }
        if k_slots == 0 {
            return Err(Error::InvalidAssignment("K must be at least 1".into()));
        }
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l == 0 || l > k_slots) {
            return Err(Error::InvalidAssignment(format!("label {l} at position {} is outside 1..={k_slots}", i + 1)));
        }
        Ok(Self { labels, k_slots })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k_slots(&self) -> usize {
        self.k_slots
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Per-slot occupancy `n_k` of an assignment.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CountVector(pub Vec<usize>);

impl CountVector {
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn nonempty(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied().filter(|&c| c > 0)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Builds a partition of `{1..n}` from arbitrary blocks, canonicalizing
    /// their order.
    pub fn from_blocks(mut blocks: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPartition("N must be at least 1".into()));
        }
        let mut seen = vec![false; n];
        for block in &mut blocks {
            if block.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            block.sort_unstable();
            for &e in block.iter() {
                if e == 0 || e > n {
                    return Err(Error::InvalidPartition(format!("element {e} outside 1..={n}")));
                }
                if std::mem::replace(&mut seen[e - 1], true) {
                    return Err(Error::InvalidPartition(format!("element {e} appears twice")));
                }
            }
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(Error::InvalidPartition(format!("element {} not covered", missing + 1)));
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Ok(Self { blocks })
    }

    /// Partition from a restricted growth string (0-based block ids, first
    /// occurrences in increasing order).
    pub(crate) fn from_rgs(rgs: &[usize]) -> Self {
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (i, &b) in rgs.iter().enumerate() {
            if b == blocks.len() {
                blocks.push(Vec::new());
            }
            blocks[b].push(i + 1);
        }
        Self { blocks }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Size of the ground set.
    pub fn n(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    /// The assignment that labels block `j` (canonical order) with `j + 1`,
    /// over `k_slots` slots.
    pub fn canonical_assignment(&self, k_slots: usize) -> Result<Assignment> {
        if k_slots < self.num_blocks() {
            return Err(Error::TooFewSlots { k_slots, blocks: self.num_blocks() });
        }
        let mut labels = vec![0; self.n()];
        for (j, block) in self.blocks.iter().enumerate() {
            for &e in block {
                labels[e - 1] = j + 1;
            }
        }
        Assignment::new(labels, k_slots)
    }
}

impl fmt::Display for Partition {
    /// Canonical string form, e.g. `{1,2}|{3,4}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, block) in self.blocks.iter().enumerate() {
            if j > 0 {
                f.write_str("|")?;
            }
            f.write_str("{")?;
            for (i, e) in block.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{e}")?;
            }
            f.write_str("}")?;
        }
        Ok(())
    }
}

pub fn assignment_counts(z: &Assignment) -> CountVector {
    let mut counts = vec![0; z.k_slots];
    for &l in &z.labels {
        counts[l - 1] += 1;
    }
    CountVector(counts)
}

pub fn partition_of(z: &Assignment) -> Partition {
    // Relabel by first occurrence; that yields the restricted growth string.
    let mut relabel = vec![usize::MAX; z.k_slots];
    let mut next = 0;
    let rgs: Vec<usize> = z
        .labels
        .iter()
        .map(|&l| {
            let slot = &mut relabel[l - 1];
            if *slot == usize::MAX {
                *slot = next;
                next += 1;
            }
            *slot
        })
        .collect();
    Partition::from_rgs(&rgs)
}

/// `n! / ∏ n_k!` over the block sizes of `b`: the number of label sequences
/// whose ordered count vector equals `b`'s block sizes.
pub fn class_size(b: &Partition, n: usize) -> Result<u128> {
    if b.n() != n {
        return Err(Error::InvalidPartition(format!("partition covers {} elements, expected {n}", b.n())));
    }
    let mut placed: u128 = 0;
    let mut acc: u128 = 1;
    for size in b.block_sizes() {
        placed += size as u128;
        let ways = binomial(placed, size as u128).ok_or_else(|| Error::Overflow(format!("class size for n={n}")))?;
        acc = acc.checked_mul(ways).ok_or_else(|| Error::Overflow(format!("class size for n={n}")))?;
    }
    Ok(acc)
}

/// `ln(n! / ∏ n_k!)`, valid for any `n`.
pub fn log_class_size(b: &Partition) -> f64 {
    use crate::special::ln_factorial;
    ln_factorial(b.n()) - b.block_sizes().into_iter().map(ln_factorial).sum::<f64>()
}

/// All `k^n` assignments in lexicographic order (last position varies
/// fastest).
pub fn enumerate_assignments(n: usize, k: usize, budget: Budget) -> Result<AssignmentIter> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidAssignment("enumeration needs n >= 1 and k >= 1".into()));
    }
    let total = (k as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    budget.check(total)?;
    Ok(AssignmentIter { k, current: Some(vec![1; n]) })
}

#[derive(Debug, Clone)]
pub struct AssignmentIter {
    k: usize,
    current: Option<Vec<usize>>,
}

impl Iterator for AssignmentIter {
    type Item = Assignment;

    fn next(&mut self) -> Option<Assignment> {
        let labels = self.current.as_mut()?;
        let out = Assignment { labels: labels.clone(), k_slots: self.k };
        match labels.iter().rposition(|&l| l < self.k) {
            Some(i) => {
                labels[i] += 1;
                labels[i + 1..].iter_mut().for_each(|l| *l = 1);
            }
            None => self.current = None,
        }
        Some(out)
    }
}

/// Largest ground set accepted by [`enumerate_partitions`].
pub const MAX_PARTITION_N: usize = 12;

/// Stirling numbers of the second kind `S(n, j)` for `j = 0..=n`.
pub fn stirling2_row(n: usize) -> Vec<u128> {
    let mut row = vec![1u128];
    for m in 1..=n {
        let mut next = vec![0u128; m + 1];
        for j in 1..=m {
            let stay = if j < row.len() { (j as u128).saturating_mul(row[j]) } else { 0 };
            next[j] = stay.saturating_add(row[j - 1]);
        }
        row = next;
    }
    row
}

/// Number of set partitions of `{1..n}` with at most `k_max` blocks.
pub fn restricted_bell(n: usize, k_max: usize) -> u128 {
    stirling2_row(n).into_iter().take(k_max + 1).fold(0u128, u128::saturating_add)
}

/// Every set partition of `{1..n}` with at most `k_max` blocks, in
/// restricted-growth-string order.
pub fn enumerate_partitions(n: usize, k_max: usize, budget: Budget) -> Result<PartitionIter> {
    if n == 0 || k_max == 0 {
        return Err(Error::InvalidPartition("enumeration needs n >= 1 and k_max >= 1".into()));
    }
    let total = restricted_bell(n, k_max);
    if n > MAX_PARTITION_N {
        return Err(Error::BudgetExceeded { items: total, budget: budget.0 });
    }
    budget.check(total)?;
    Ok(PartitionIter { k_max, rgs: Some(vec![0; n]) })
}

#[derive(Debug, Clone)]
pub struct PartitionIter {
    k_max: usize,
    rgs: Option<Vec<usize>>,
}

impl PartitionIter {
    fn advance(rgs: &mut [usize], k_max: usize) -> bool {
        let n = rgs.len();
        let mut prefix_max = vec![0; n];
        for i in 1..n {
            prefix_max[i] = prefix_max[i - 1].max(rgs[i - 1]);
        }
        for i in (1..n).rev() {
            let limit = (prefix_max[i] + 1).min(k_max - 1);
            if rgs[i] < limit {
                rgs[i] += 1;
                rgs[i + 1..].iter_mut().for_each(|v| *v = 0);
                return true;
            }
        }
        false
    }
}

impl Iterator for PartitionIter {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        let rgs = self.rgs.as_mut()?;
        let out = Partition::from_rgs(rgs);
        if !Self::advance(rgs, self.k_max) {
            self.rgs = None;
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn z(labels: &[usize], k: usize) -> Assignment {
        Assignment::new(labels.to_vec(), k).unwrap()
    }

    fn p(blocks: &[&[usize]], n: usize) -> Partition {
        Partition::from_blocks(blocks.iter().map(|b| b.to_vec()).collect(), n).unwrap()
    }

    #[test]
    fn assignment_rejects_bad_labels() {
        assert!(Assignment::new(vec![], 1).is_err());
        assert!(Assignment::new(vec![1], 0).is_err());
        assert!(Assignment::new(vec![0], 1).is_err());
        assert!(Assignment::new(vec![1, 3], 2).is_err());
    }

    #[test]
    fn counts_examples() {
        assert_eq!(assignment_counts(&z(&[1], 1)).0, vec![1]);
        assert_eq!(assignment_counts(&z(&[1, 1, 2], 2)).0, vec![2, 1]);
        assert_eq!(assignment_counts(&z(&[1, 1], 3)).0, vec![2, 0, 0]);
    }

    #[test]
    fn partition_examples() {
        assert_eq!(partition_of(&z(&[1], 1)), p(&[&[1]], 1));
        assert_eq!(partition_of(&z(&[2, 2, 1], 2)), p(&[&[1, 2], &[3]], 3));
        assert_eq!(partition_of(&z(&[1, 1, 2], 2)), partition_of(&z(&[2, 2, 1], 2)));
        assert_eq!(p(&[&[4, 3], &[2, 1]], 4).to_string(), "{1,2}|{3,4}");
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::from_blocks(vec![vec![1], vec![]], 1).is_err());
        assert!(Partition::from_blocks(vec![vec![1, 2], vec![2]], 2).is_err());
        assert!(Partition::from_blocks(vec![vec![1]], 2).is_err());
        assert!(Partition::from_blocks(vec![vec![1, 3]], 2).is_err());
    }

    #[test]
    fn class_size_examples() {
        assert_eq!(class_size(&p(&[&[1, 2, 3]], 3), 3).unwrap(), 1);
        assert_eq!(class_size(&p(&[&[1, 2], &[3]], 3), 3).unwrap(), 3);
        assert_eq!(class_size(&p(&[&[1], &[2], &[3]], 3), 3).unwrap(), 6);
        assert!(class_size(&p(&[&[1, 2, 3]], 3), 4).is_err());
    }

    #[test]
    fn class_size_is_exact_at_twenty() {
        let singletons: Vec<Vec<usize>> = (1..=20).map(|i| vec![i]).collect();
        let b = Partition::from_blocks(singletons, 20).unwrap();
        assert_eq!(class_size(&b, 20).unwrap(), 2_432_902_008_176_640_000);
        assert!((log_class_size(&b) - (2_432_902_008_176_640_000f64).ln()).abs() < 1e-9);
    }

    #[test]
    fn assignment_enumeration_counts() {
        let b = Budget::DEFAULT;
        assert_eq!(enumerate_assignments(2, 2, b).unwrap().count(), 4);
        assert_eq!(enumerate_assignments(3, 2, b).unwrap().count(), 8);
        assert_eq!(enumerate_assignments(1, 5, b).unwrap().count(), 5);
        let all: HashSet<_> = enumerate_assignments(3, 3, b).unwrap().collect();
        assert_eq!(all.len(), 27);
    }

    #[test]
    fn assignment_enumeration_budget() {
        let err = enumerate_assignments(10, 10, Budget::DEFAULT).unwrap_err();
        assert!(err.is_budget());
        assert!(err.to_string().contains("10000000000"));
        assert!(enumerate_assignments(3, 2, Budget(7)).is_err());
        assert!(enumerate_assignments(3, 2, Budget(8)).is_ok());
    }

    #[test]
    fn partition_enumeration_counts() {
        let b = Budget::DEFAULT;
        assert_eq!(enumerate_partitions(3, 3, b).unwrap().count(), 5);
        assert_eq!(enumerate_partitions(3, 2, b).unwrap().count(), 4);
        assert_eq!(enumerate_partitions(1, 1, b).unwrap().count(), 1);
        assert!(enumerate_partitions(13, 13, b).unwrap_err().is_budget());
        assert!(enumerate_partitions(8, 8, Budget(100)).unwrap_err().is_budget());
    }

    /// Bell numbers from the Bell triangle, independent of the Stirling
    /// recurrence used by the enumerator's budget check.
    fn bell_triangle(n_max: usize) -> Vec<u128> {
        let mut bells = vec![1u128];
        let mut row = vec![1u128];
        for _ in 1..=n_max {
            let mut next = vec![*row.last().unwrap()];
            for v in &row {
                next.push(next.last().unwrap() + v);
            }
            bells.push(next[0]);
            row = next;
        }
        bells
    }

    #[test]
    fn partition_enumeration_matches_bell_numbers() {
        let bells = bell_triangle(10);
        for (n, &bell) in bells.iter().enumerate().skip(1) {
            let parts: Vec<Partition> = enumerate_partitions(n, n, Budget::DEFAULT).unwrap().collect();
            assert_eq!(parts.len() as u128, bell, "n={n}");
            assert_eq!(restricted_bell(n, n), bell);
            if n <= 7 {
                let distinct: HashSet<_> = parts.iter().collect();
                assert_eq!(distinct.len(), parts.len());
                for b in &parts {
                    assert_eq!(Partition::from_blocks(b.blocks().to_vec(), n).unwrap(), *b);
                }
            }
        }
    }

    #[test]
    fn restricted_enumeration_respects_block_cap() {
        for n in 1..=7 {
            for k in 1..=n {
                let parts: Vec<_> = enumerate_partitions(n, k, Budget::DEFAULT).unwrap().collect();
                assert!(parts.iter().all(|b| b.num_blocks() <= k));
                assert_eq!(parts.len() as u128, restricted_bell(n, k));
            }
        }
    }

    #[test]
    fn partitions_of_all_assignments_cover_support() {
        // Every partition with <= k blocks is hit by some assignment over k slots.
        let from_z: HashSet<_> =
            enumerate_assignments(5, 3, Budget::DEFAULT).unwrap().map(|z| partition_of(&z)).collect();
        let direct: HashSet<_> = enumerate_partitions(5, 3, Budget::DEFAULT).unwrap().collect();
        assert_eq!(from_z, direct);
    }

    proptest! {
        #[test]
        fn counts_sum_to_n(k in 1usize..6, raw in prop::collection::vec(0usize..100, 1..30)) {
            let labels: Vec<usize> = raw.iter().map(|r| r % k + 1).collect();
            let n = labels.len();
            let z = Assignment::new(labels, k).unwrap();
            prop_assert_eq!(assignment_counts(&z).total(), n);
        }

        #[test]
        fn partition_is_label_permutation_invariant(
            k in 1usize..6,
            raw in prop::collection::vec(0usize..100, 1..20),
            shift in 0usize..6,
            flip in any::<bool>(),
        ) {
            let labels: Vec<usize> = raw.iter().map(|r| r % k + 1).collect();
            let perm = |l: usize| {
                let shifted = (l - 1 + shift) % k;
                if flip { k - shifted } else { shifted + 1 }
            };
            let permuted: Vec<usize> = labels.iter().map(|&l| perm(l)).collect();
            let a = partition_of(&Assignment::new(labels, k).unwrap());
            let b = partition_of(&Assignment::new(permuted, k).unwrap());
            prop_assert_eq!(a, b);
        }
    }
}
