//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

/// Exact law of δ for a parent with `d` zero-bits out of `n`, by enumerating
/// all 2^n flip masks. Probabilities are accumulated as integer numerators
/// over the common denominator n^n and converted once at the end.
pub fn brute_delta_pmf(n: usize, d: usize) -> BTreeMap<i64, f64> {
    assert!((1..=16).contains(&n) && d <= n);
    let weight: Vec<u128> = (0..=n).map(|k| ((n - 1) as u128).pow((n - k) as u32)).collect();
    let denom = (n as u128).pow(n as u32) as f64;
    let zeros = (1u32 << d) - 1;
    let mut num: BTreeMap<i64, u128> = BTreeMap::new();
    for mask in 0u32..(1 << n) {
        let a = (mask & zeros).count_ones() as i64;
        let b = (mask & !zeros).count_ones() as i64;
        *num.entry(a - b).or_default() += weight[mask.count_ones() as usize];
    }
    num.into_iter().map(|(k, v)| (k, v as f64 / denom)).collect()
}

/// Offspring fitness law of a parent at fitness `f`, indexed 0..=n.
pub fn brute_offspring_pmf(n: usize, f: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for (delta, p) in brute_delta_pmf(n, n - f) {
        out[(f as i64 + delta) as usize] += p;
    }
    out
}

/// Whether the law `hi` dominates `lo`: every survival value of `hi` is at
/// least that of `lo`, up to `slack`.
pub fn dominates(hi: &[f64], lo: &[f64], slack: f64) -> bool {
    let (mut sh, mut sl) = (0.0, 0.0);
    for k in (0..hi.len()).rev() {
        sh += hi[k];
        sl += lo[k];
        if sl > sh + slack {
            return false;
        }
    }
    true
}

/// Exact Pr(X ≥ x) for X ~ Bin(m, p) with rational p = num/den.
pub fn binomial_upper_tail_exact(m: u64, num: u64, den: u64, x: u64) -> f64 {
    use num_bigint::BigUint;
    use num_traits::{One, ToPrimitive, Zero};
    let mut total = BigUint::zero();
    let mut c = BigUint::one();
    for k in 0..=m {
        if k > 0 {
            c = c * BigUint::from(m - k + 1) / BigUint::from(k);
        }
        if k >= x {
            total += &c * BigUint::from(num).pow(k as u32) * BigUint::from(den - num).pow((m - k) as u32);
        }
    }
    let d = BigUint::from(den).pow(m as u32);
    // Ratio of two big integers through their leading 60 bits.
    let shift = d.bits().saturating_sub(60);
    let t = (&total >> shift).to_f64().unwrap();
    let dd = (&d >> shift).to_f64().unwrap();
    t / dd
}
