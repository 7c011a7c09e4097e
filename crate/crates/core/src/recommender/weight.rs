//! Exact representation of sums of logarithms of rationals.
//!
//! A headline score is a sum of `count * ln(n / df)` terms. Writing each
//! logarithm over prime factors turns the sum into integer coefficients on
//! `ln p`, and since logarithms of distinct primes are linearly independent
//! over the rationals, two scores are mathematically equal exactly when
//! their coefficient vectors are equal. Ranking uses this to keep tie groups
//! stable no matter how the float sums round.

use std::collections::BTreeMap;

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct LogCombination {
    // prime -> coefficient, zero coefficients removed
    coefficients: BTreeMap<u64, i64>,
}

impl LogCombination {
    /// Adds `times * ln(numerator / denominator)`.
    pub(crate) fn add_log_ratio(&mut self, numerator: u64, denominator: u64, times: i64) {
        for (p, e) in factorize(numerator) {
            self.add(p, times * i64::from(e));
        }
        for (p, e) in factorize(denominator) {
            self.add(p, -times * i64::from(e));
        }
    }

    fn add(&mut self, prime: u64, delta: i64) {
        if delta == 0 {
            return;
        }
        let c = self.coefficients.entry(prime).or_insert(0);
        *c += delta;
        if *c == 0 {
            self.coefficients.remove(&prime);
        }
    }

    /// Natural-log value, summed in ascending prime order.
    pub(crate) fn ln_value(&self) -> f64 {
        self.coefficients
            .iter()
            .map(|(&p, &c)| c as f64 * (p as f64).ln())
            .sum()
    }
}

fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        let mut e = 0;
        while n.is_multiple_of(p) {
            n /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}
