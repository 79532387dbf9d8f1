//! Exact single-mutation fitness transitions and binomial facts.
//!
//! By the symmetry of OneMax, the law of the fitness change δ = f(M(x)) − f(x)
//! depends only on `n` and the distance `d = n − f(x)`: mutation flips
//! `a ~ Bin(d, 1/n)` of the zero-bits and, independently, `b ~ Bin(n−d, 1/n)`
//! of the one-bits, and δ = a − b.

use std::collections::BTreeMap;

use serde::Serialize;
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::stats::compensated_sum;

/// Largest `n` for which [`delta_pmf_exact`] runs.
pub const EXACT_PMF_MAX_N: usize = 64;

/// Smallest `mp` above which `E[ln(1+X)] ≥ ln(1+mp) − (11/12)(1−p)/(mp)` held
/// on the scanned grid (p ∈ {0.1, …, 0.9}, 1 ≤ mp ≤ 200, integer m). This is an
/// empirical value produced by [`scan_s_min`], not a proven constant.
pub const EMPIRICAL_S_MIN: u32 = 1;

/// Distance-to-optimum view of an individual.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FitnessState {
    n: usize,
    d: usize,
}

impl FitnessState {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        if d > n {
            return Err(Error::InvalidParameter(format!("distance {d} exceeds n = {n}")));
        }
        Ok(Self { n, d })
    }

    pub fn from_fitness(n: usize, fitness: usize) -> Result<Self> {
        if fitness > n {
            return Err(Error::InvalidParameter(format!("fitness {fitness} exceeds n = {n}")));
        }
        Self::new(n, n - fitness)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn fitness(&self) -> usize {
        self.n - self.d
    }
}

/// Parameters of Bin(m, p).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BinomialSpec {
    m: u64,
    p: f64,
}

impl BinomialSpec {
    pub fn new(m: u64, p: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("binomial m must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("probability {p} outside [0, 1]")));
        }
        Ok(Self { m, p })
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn mean(&self) -> f64 {
        self.m as f64 * self.p
    }

    /// Full pmf, indexed `0..=m`.
    pub fn pmf(&self) -> Vec<f64> {
        binom_pmf_vec(self.m as usize, self.p)
    }
}

/// `k · ln(base)` with the convention 0 · ln 0 = 0.
#[inline]
fn ln_pow(ln_base: f64, k: u64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * ln_base
    }
}

/// ln of the Bin(m, p) pmf at k, in log space.
fn ln_binom_pmf(m: u64, p: f64, k: u64) -> f64 {
    ln_binomial(m, k) + ln_pow(p.ln(), k) + ln_pow((-p).ln_1p(), m - k)
}

/// Bin(m, p) pmf for k = 0..=m.
pub fn binom_pmf_vec(m: usize, p: f64) -> Vec<f64> {
    let m64 = m as u64;
    (0..=m64).map(|k| ln_binom_pmf(m64, p, k).exp()).collect()
}

/// `(Pr[X = k], Pr[X ≤ k])` for X ~ Bin(m, p). Out-of-range `k` gives pmf 0
/// and a CDF clamped to 0 or 1.
pub fn binom_pmf_cdf(spec: &BinomialSpec, k: i64) -> (f64, f64) {
    if k < 0 {
        return (0.0, 0.0);
    }
    let k = k as u64;
    if k > spec.m {
        return (0.0, 1.0);
    }
    let pmf = spec.pmf();
    let cdf = compensated_sum(pmf[..=k as usize].iter().copied()).min(1.0);
    (pmf[k as usize], cdf)
}

/// Pr[X ≥ k] by direct summation of the upper tail.
pub fn binom_upper_tail(spec: &BinomialSpec, k: i64) -> f64 {
    if k <= 0 {
        return 1.0;
    }
    let k = k as u64;
    if k > spec.m {
        return 0.0;
    }
    compensated_sum(spec.pmf()[k as usize..].iter().copied()).min(1.0)
}

/// Upper bound `C(d, k) (1/n)^k` on Pr[δ = k], for k ≥ 1. Zero when k > d.
pub fn delta_up_bound(state: &FitnessState, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter("improvement k must be at least 1".into()));
    }
    if k > state.d {
        return Ok(0.0);
    }
    Ok((ln_binomial(state.d as u64, k as u64) - k as f64 * (state.n as f64).ln()).exp())
}

/// ln of the probability that a mutation flips exactly `a` of the `d`
/// zero-bits and `b` of the `n − d` one-bits.
fn ln_flip_pattern(n: usize, d: usize, a: usize, b: usize) -> f64 {
    let nf = n as f64;
    let ln_q = (-1.0 / nf).ln_1p();
    ln_binomial(d as u64, a as u64) + ln_binomial((n - d) as u64, b as u64)
        - (a + b) as f64 * nf.ln()
        + ln_pow(ln_q, (n - a - b) as u64)
}

/// Exact Pr[δ = 0]: `Σ_k C(d,k) C(n−d,k) n^{−2k} (1−1/n)^{n−2k}`.
pub fn delta_zero_exact(state: &FitnessState) -> f64 {
    let (n, d) = (state.n, state.d);
    let kmax = d.min(n - d);
    compensated_sum((0..=kmax).map(|k| ln_flip_pattern(n, d, k, k).exp()))
}

/// Exact law of δ as a map from δ to probability. Requires n ≤ 64.
pub fn delta_pmf_exact(state: &FitnessState) -> Result<BTreeMap<i64, f64>> {
    let (n, d) = (state.n, state.d);
    if n > EXACT_PMF_MAX_N {
        return Err(Error::Guard(format!(
            "exact transition pmf limited to n <= {EXACT_PMF_MAX_N}, got {n}"
        )));
    }
    let mut terms: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for a in 0..=d {
        for b in 0..=(n - d) {
            let delta = a as i64 - b as i64;
            terms
                .entry(delta)
                .or_default()
                .push(ln_flip_pattern(n, d, a, b).exp());
        }
    }
    Ok(terms
        .into_iter()
        .map(|(delta, ts)| (delta, compensated_sum(ts)))
        .collect())
}

/// Pr[X ≥ E[X]] for X ~ Bin(m, p) and whether it exceeds 1/4. Requires
/// p > 1/m.
pub fn check_mean_exceedance(spec: &BinomialSpec) -> Result<(f64, bool)> {
    let m = spec.m as f64;
    if spec.p <= 1.0 / m {
        return Err(Error::OutsideHypothesis(format!(
            "mean-exceedance bound needs p > 1/m, got p = {} with m = {}",
            spec.p, spec.m
        )));
    }
    let mean = spec.mean();
    // m·p is often an integer up to rounding (e.g. 60 · 0.05); snap it.
    let threshold = if (mean - mean.round()).abs() < 1e-9 {
        mean.round()
    } else {
        mean.ceil()
    };
    let prob = binom_upper_tail(spec, threshold as i64);
    Ok((prob, prob > 0.25))
}

/// `(E[ln(1+X)], ln(1+mp) − (11/12)(1−p)/(mp), E ≥ bound)`.
pub fn check_log1p_bound(spec: &BinomialSpec) -> (f64, f64, bool) {
    let pmf = spec.pmf();
    let expectation = compensated_sum(
        pmf.iter()
            .enumerate()
            .map(|(k, &q)| q * (k as f64).ln_1p()),
    );
    let mp = spec.mean();
    let bound = mp.ln_1p() - (11.0 / 12.0) * (1.0 - spec.p) / mp;
    (expectation, bound, expectation >= bound)
}

/// One grid point of the S_min scan.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Log1pPoint {
    pub m: u64,
    pub p: f64,
    pub mp: f64,
    pub expectation: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SminReport {
    /// Smallest integer s such that every grid point with mp ≥ s satisfies
    /// the inequality.
    pub s_min: u32,
    pub points: usize,
    pub failures: Vec<Log1pPoint>,
    /// Whether all points with mp ≥ s_min hold (true by construction; kept
    /// so the report is self-checking).
    pub holds_above: bool,
}

/// Scans p ∈ `ps` and every integer m with `1 ≤ m·p ≤ max_mp`.
pub fn scan_s_min(ps: &[f64], max_mp: f64) -> SminReport {
    let mut failures = Vec::new();
    let mut points = Vec::new();
    for &p in ps {
        let m_max = (max_mp / p + 1e-9).floor() as u64;
        for m in 1..=m_max {
            let mp = m as f64 * p;
            if mp < 1.0 - 1e-9 {
                continue;
            }
            let spec = BinomialSpec::new(m, p).expect("grid parameters are valid");
            let (expectation, bound, holds) = check_log1p_bound(&spec);
            let pt = Log1pPoint {
                m,
                p,
                mp,
                expectation,
                bound,
                holds,
            };
            if !holds {
                failures.push(pt.clone());
            }
            points.push(pt);
        }
    }
    let worst = failures.iter().map(|f| f.mp).fold(0.0f64, f64::max);
    let s_min = if failures.is_empty() {
        1
    } else {
        worst.floor() as u32 + 1
    };
    let holds_above = points
        .iter()
        .filter(|pt| pt.mp >= s_min as f64)
        .all(|pt| pt.holds);
    SminReport {
        s_min,
        points: points.len(),
        failures,
        holds_above,
    }
}

/// The default S_min grid: p ∈ {0.1, …, 0.9}, 1 ≤ mp ≤ 200.
pub fn default_s_min_scan() -> SminReport {
    let ps: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    scan_s_min(&ps, 200.0)
}

/// Chernoff bounds compared against the exact binomial tails.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChernoffReport {
    /// `exp(−δ² mp / 2)`, bounding Pr[X ≤ (1−δ) mp].
    pub lower_bound: f64,
    /// `exp(−δ² mp / 3)`, bounding Pr[X ≥ (1+δ) mp].
    pub upper_bound: f64,
    pub exact_lower_tail: f64,
    pub exact_upper_tail: f64,
    pub pass: bool,
}

/// `(exp(−δ²mp/2), exp(−δ²mp/3))`.
pub fn chernoff_bounds(spec: &BinomialSpec, delta: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!("delta {delta} outside [0, 1]")));
    }
    let mp = spec.mean();
    Ok(((-delta * delta * mp / 2.0).exp(), (-delta * delta * mp / 3.0).exp()))
}

pub fn chernoff_check(spec: &BinomialSpec, delta: f64) -> Result<ChernoffReport> {
    let (lower_bound, upper_bound) = chernoff_bounds(spec, delta)?;
    let mp = spec.mean();
    let lo = (1.0 - delta) * mp;
    let hi = (1.0 + delta) * mp;
    // Pr[X ≤ lo] sums k ≤ floor(lo); Pr[X ≥ hi] sums k ≥ ceil(hi).
    let lo_k = (lo + 1e-9).floor() as i64;
    let hi_k = (hi - 1e-9).ceil() as i64;
    let exact_lower_tail = binom_pmf_cdf(spec, lo_k).1;
    let exact_upper_tail = binom_upper_tail(spec, hi_k);
    let slack = 1e-12;
    Ok(ChernoffReport {
        lower_bound,
        upper_bound,
        exact_lower_tail,
        exact_upper_tail,
        pass: exact_lower_tail <= lower_bound + slack && exact_upper_tail <= upper_bound + slack,
    })
}

/// Offspring fitness pmf for a parent of fitness `f`, indexed `0..=n`.
pub fn offspring_fitness_pmf(n: usize, f: usize) -> Result<Vec<f64>> {
    let state = FitnessState::from_fitness(n, f)?;
    let mut out = vec![0.0; n + 1];
    for (delta, p) in delta_pmf_exact(&state)? {
        out[(f as i64 + delta) as usize] += p;
    }
    Ok(out)
}

/// Whether the offspring fitness of a parent at `fy` stochastically
/// dominates that of a parent at `fx` (fx ≤ fy), compared survival function
/// by survival function.
pub fn domination_check(n: usize, fx: usize, fy: usize) -> Result<bool> {
    if fx > fy {
        return Err(Error::InvalidParameter(format!(
            "domination check needs fx <= fy, got {fx} > {fy}"
        )));
    }
    let px = offspring_fitness_pmf(n, fx)?;
    let py = offspring_fitness_pmf(n, fy)?;
    let mut sx = 0.0;
    let mut sy = 0.0;
    for k in (0..=n).rev() {
        sx += px[k];
        sy += py[k];
        if sx > sy + 1e-12 {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(n: usize, d: usize) -> FitnessState {
        FitnessState::new(n, d).unwrap()
    }

    #[test]
    fn up_bound_examples() {
        assert!((delta_up_bound(&st(4, 2), 1).unwrap() - 0.5).abs() < 1e-15);
        assert!((delta_up_bound(&st(4, 2), 2).unwrap() - 0.0625).abs() < 1e-15);
        assert_eq!(delta_up_bound(&st(4, 2), 3).unwrap(), 0.0);
        assert!(delta_up_bound(&st(4, 2), 0).is_err());
    }

    #[test]
    fn zero_change_examples() {
        assert!((delta_zero_exact(&st(2, 1)) - 0.5).abs() < 1e-15);
        for n in [1usize, 2, 5, 40] {
            let q = (1.0 - 1.0 / n as f64).powi(n as i32);
            assert!((delta_zero_exact(&st(n, 0)) - q).abs() < 1e-15);
        }
    }

    #[test]
    fn pmf_n2_d1() {
        let pmf = delta_pmf_exact(&st(2, 1)).unwrap();
        assert!((pmf[&-1] - 0.25).abs() < 1e-15);
        assert!((pmf[&0] - 0.5).abs() < 1e-15);
        assert!((pmf[&1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn optimum_cannot_improve() {
        for n in [1usize, 7, 30, 64] {
            let pmf = delta_pmf_exact(&st(n, 0)).unwrap();
            assert!(pmf.keys().all(|&k| k <= 0));
        }
    }

    #[test]
    fn pmf_guard() {
        assert!(matches!(delta_pmf_exact(&st(65, 3)), Err(Error::Guard(_))));
    }

    #[test]
    fn pmf_normalised_and_consistent() {
        for n in 1..=64 {
            for d in 0..=n {
                let s = st(n, d);
                let pmf = delta_pmf_exact(&s).unwrap();
                let total = compensated_sum(pmf.values().copied());
                assert!((total - 1.0).abs() < 1e-12, "n={n} d={d} total={total}");
                assert!((pmf[&0] - delta_zero_exact(&s)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn binom_examples() {
        let (p, c) = binom_pmf_cdf(&BinomialSpec::new(1, 0.5).unwrap(), 0);
        assert!((p - 0.5).abs() < 1e-15 && (c - 0.5).abs() < 1e-15);
        let (p, c) = binom_pmf_cdf(&BinomialSpec::new(4, 0.5).unwrap(), 2);
        assert!((p - 6.0 / 16.0).abs() < 1e-15);
        assert!((c - 11.0 / 16.0).abs() < 1e-15);
        let spec = BinomialSpec::new(60, 0.3).unwrap();
        assert!((compensated_sum(spec.pmf()) - 1.0).abs() < 1e-10);
        assert_eq!(binom_pmf_cdf(&spec, -1), (0.0, 0.0));
        assert_eq!(binom_pmf_cdf(&spec, 61), (0.0, 1.0));
    }

    #[test]
    fn degenerate_probabilities() {
        let zero = BinomialSpec::new(5, 0.0).unwrap();
        assert_eq!(zero.pmf()[0], 1.0);
        let one = BinomialSpec::new(5, 1.0).unwrap();
        assert_eq!(one.pmf()[5], 1.0);
        assert!(BinomialSpec::new(0, 0.5).is_err());
        assert!(BinomialSpec::new(3, 1.5).is_err());
    }

    #[test]
    fn mean_exceedance_examples() {
        let (p, ok) = check_mean_exceedance(&BinomialSpec::new(2, 0.6).unwrap()).unwrap();
        assert!((p - 0.36).abs() < 1e-15 && ok);
        let (p, ok) = check_mean_exceedance(&BinomialSpec::new(2, 1.0).unwrap()).unwrap();
        assert!((p - 1.0).abs() < 1e-15 && ok);
        assert!(check_mean_exceedance(&BinomialSpec::new(4, 0.25).unwrap()).is_err());
    }

    #[test]
    fn log1p_examples() {
        let (e, b, ok) = check_log1p_bound(&BinomialSpec::new(1, 1.0).unwrap());
        assert!((e - 2f64.ln()).abs() < 1e-15 && (b - 2f64.ln()).abs() < 1e-15 && ok);
        let (_, _, ok) = check_log1p_bound(&BinomialSpec::new(100, 0.5).unwrap());
        assert!(ok);
    }

    #[test]
    fn chernoff_examples() {
        let s = BinomialSpec::new(10, 0.3).unwrap();
        assert_eq!(chernoff_bounds(&s, 0.0).unwrap(), (1.0, 1.0));
        let r = chernoff_check(&BinomialSpec::new(100, 0.5).unwrap(), 0.2).unwrap();
        assert!((r.lower_bound - (-1f64).exp()).abs() < 1e-15);
        assert!(r.exact_lower_tail <= r.lower_bound && r.pass);
        let r = chernoff_check(&BinomialSpec::new(50, 0.2).unwrap(), 1.0).unwrap();
        assert!((r.upper_bound - (-10.0f64 / 3.0).exp()).abs() < 1e-15);
        assert!(r.exact_upper_tail <= r.upper_bound && r.pass);
        assert!(chernoff_bounds(&s, 1.5).is_err());
    }

    #[test]
    fn domination_examples() {
        assert!(domination_check(8, 3, 3).unwrap());
        assert!(domination_check(8, 3, 7).unwrap());
        assert!(domination_check(8, 7, 3).is_err());
    }
}
