//! Small numeric helpers shared across modules.

const EXACT_FACTORIALS: usize = 21;

const fn factorial_table() -> [u64; EXACT_FACTORIALS] {
    let mut table = [1u64; EXACT_FACTORIALS];
    let mut i = 1;
    while i < EXACT_FACTORIALS {
        table[i] = table[i - 1] * i as u64;
        i += 1;
    }
    table
}

const FACTORIALS: [u64; EXACT_FACTORIALS] = factorial_table();

/// `n!` for `n <= 20`, `None` beyond.
pub fn factorial(n: usize) -> Option<u64> {
    FACTORIALS.get(n).copied()
}

/// `ln n!`, from the exact integer table up to 20 and by summing logs
/// beyond.
pub fn ln_factorial(n: usize) -> f64 {
    match factorial(n) {
        Some(f) => (f as f64).ln(),
        None => {
            let base = (FACTORIALS[EXACT_FACTORIALS - 1] as f64).ln();
            base + (EXACT_FACTORIALS..=n).map(|i| (i as f64).ln()).sum::<f64>()
        }
    }
}

/// Binomial coefficient with overflow detection.
pub fn binomial(n: u128, k: u128) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) after the multiplication.
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// Numerically stable `ln Σ exp(v)`. Returns `-inf` for an empty slice or
/// when every entry is `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}
