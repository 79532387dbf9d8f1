//! Rational approximation of e: continued fraction, convergents and the gap
//! between λ/μ and e.
//!
//! e is held as a fixed-point integer `E ≈ e · 10^P` with `P = 80` digits, 20
//! of them guard digits beyond the 60 the checks rely on.

use std::io::{self, Write};
use std::sync::OnceLock;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::report::{fmt_f64, SCAN_HEADER};

/// Fixed-point digits of the working precision.
pub const PRECISION_DIGITS: u32 = 80;

struct FixedE {
    scale: BigInt,
    e: BigInt,
}

fn fixed_e() -> &'static FixedE {
    static CELL: OnceLock<FixedE> = OnceLock::new();
    CELL.get_or_init(|| {
        let scale = BigInt::from(10u32).pow(PRECISION_DIGITS);
        // Σ 1/k!, each term truncated; 70 terms push the tail below 10^-100.
        let mut term = scale.clone();
        let mut e = BigInt::zero();
        for k in 1..=70u32 {
            e += &term;
            term /= k;
        }
        FixedE { scale, e }
    })
}

/// e as a decimal string with `digits` digits after the point (truncated).
pub fn e_decimal(digits: u32) -> String {
    let digits = digits.min(PRECISION_DIGITS - 10);
    let fe = fixed_e();
    let shifted = &fe.e / BigInt::from(10u32).pow(PRECISION_DIGITS - digits);
    let s = shifted.to_string();
    format!("{}.{}", &s[..1], &s[1..])
}

/// The first `k` partial quotients of e from the pattern
/// `[2; 1, 2, 1, 1, 4, 1, 1, 6, …]`.
pub fn e_continued_fraction(k: usize) -> Result<Vec<u64>> {
    if k == 0 {
        return Err(Error::InvalidParameter("need at least one term".into()));
    }
    Ok((0..k as u64)
        .map(|i| match i {
            0 => 2,
            i if i % 3 == 2 => 2 * (i + 1) / 3,
            _ => 1,
        })
        .collect())
}

/// The first `k` partial quotients of the fixed-point value of e, by the
/// Euclidean algorithm. Agrees with the true expansion while the fixed-point
/// error stays below the convergent gaps (well past 40 terms at 80 digits).
pub fn e_continued_fraction_numeric(k: usize) -> Vec<u64> {
    let fe = fixed_e();
    let (mut a, mut b) = (fe.e.clone(), fe.scale.clone());
    let mut out = Vec::with_capacity(k);
    while out.len() < k && !b.is_zero() {
        let (q, r) = a.div_rem(&b);
        out.push(q.to_u64().expect("partial quotients of e are small"));
        a = b;
        b = r;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Convergent {
    #[serde(serialize_with = "ser_bigint")]
    pub p: BigInt,
    #[serde(serialize_with = "ser_bigint")]
    pub q: BigInt,
    pub index: usize,
}

fn ser_bigint<S: serde::Serializer>(v: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

impl Convergent {
    /// `|e − p/q|`.
    pub fn error(&self) -> f64 {
        let fe = fixed_e();
        let diff = (&fe.e * &self.q - &self.p * &fe.scale).abs();
        ratio_to_f64(&diff, &(&fe.scale * &self.q))
    }

    /// Whether `p/q` lies above e.
    pub fn is_above(&self) -> bool {
        let fe = fixed_e();
        &self.p * &fe.scale > &fe.e * &self.q
    }

    /// Whether `|e − p/q| < 1/q²`, decided in exact integer arithmetic.
    pub fn within_inverse_square(&self) -> bool {
        let fe = fixed_e();
        let diff = (&fe.e * &self.q - &self.p * &fe.scale).abs();
        // |E q − p S| · q < S, allowing one unit of fixed-point error per q.
        (diff + &self.q) * &self.q < fe.scale
    }
}

/// `a / b` as `f64` for positive big integers of any size.
fn ratio_to_f64(a: &BigInt, b: &BigInt) -> f64 {
    if a.is_zero() {
        return 0.0;
    }
    let shift = a.bits().max(b.bits()).saturating_sub(900) as usize;
    let a = (a >> shift).to_f64().unwrap_or(f64::INFINITY);
    let b = (b >> shift).to_f64().unwrap_or(f64::INFINITY);
    a / b
}

/// Convergents `p_k/q_k` of a continued fraction.
pub fn convergents(terms: &[u64]) -> Vec<Convergent> {
    let (mut p2, mut p1) = (BigInt::zero(), BigInt::one());
    let (mut q2, mut q1) = (BigInt::one(), BigInt::zero());
    terms
        .iter()
        .enumerate()
        .map(|(index, &a)| {
            let a = BigInt::from(a);
            let p = &a * &p1 + &p2;
            let q = &a * &q1 + &q2;
            p2 = std::mem::replace(&mut p1, p.clone());
            q2 = std::mem::replace(&mut q1, q.clone());
            Convergent { p, q, index }
        })
        .collect()
}

/// `μe − λ` scaled by `10^P`, exactly.
fn scaled_offset(mu: u64, lambda: u64) -> BigInt {
    let fe = fixed_e();
    &fe.e * BigInt::from(mu) - BigInt::from(lambda) * &fe.scale
}

/// `(μe − λ)/(μe)`, for `0 < λ ≤ μe`.
pub fn epsilon_gap(mu: u64, lambda: u64) -> Result<f64> {
    if mu == 0 || lambda == 0 {
        return Err(Error::InvalidParameter("mu and lambda must be positive".into()));
    }
    let offset = scaled_offset(mu, lambda);
    if offset.sign() == Sign::Minus {
        return Err(Error::OutsideHypothesis(format!(
            "lambda = {lambda} exceeds mu*e for mu = {mu}"
        )));
    }
    Ok(ratio_to_f64(&offset, &(&fixed_e().e * BigInt::from(mu))))
}

/// `|e − λ/μ|`.
pub fn approximation_gap(mu: u64, lambda: u64) -> f64 {
    let offset = scaled_offset(mu, lambda).abs();
    ratio_to_f64(&offset, &(&fixed_e().scale * BigInt::from(mu)))
}

/// `⌊μe⌋`.
pub fn floor_mu_e(mu: u64) -> u64 {
    let fe = fixed_e();
    (&fe.e * BigInt::from(mu) / &fe.scale)
        .to_u64()
        .expect("mu*e fits in u64")
}

/// The λ minimizing `|e − λ/μ|` by exhaustive search over `1..=3μ`.
pub fn best_lambda_exhaustive(mu: u64) -> u64 {
    (1..=3 * mu)
        .min_by_key(|&l| scaled_offset(mu, l).abs())
        .expect("range is non-empty")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub mu: u64,
    pub lambda: u64,
    /// `|e − λ/μ|`.
    pub gap: f64,
    pub mu_pow_d_times_gap: f64,
    pub is_exception: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanReport {
    pub d: f64,
    pub mu_max: u64,
    pub min_value: f64,
    pub argmin_mu: u64,
    /// μ with `μ^d |e − ⌊μe⌋/μ| < 1`.
    pub exceptions: Vec<u64>,
    #[serde(skip)]
    pub rows: Vec<ScanRow>,
}

impl ScanReport {
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "{SCAN_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.mu,
                r.lambda,
                fmt_f64(r.gap),
                fmt_f64(r.mu_pow_d_times_gap),
                r.is_exception
            )?;
        }
        Ok(())
    }
}

/// For every μ in `1..=μ_max` with `λ = ⌊μe⌋`, computes `μ^d |e − λ/μ|` and
/// lists the μ where it falls below 1.
pub fn gap_bound_scan(mu_max: u64, d: f64) -> Result<ScanReport> {
    if !(d > 2.0) {
        return Err(Error::InvalidParameter(format!("exponent d must exceed 2, got {d}")));
    }
    if mu_max == 0 {
        return Err(Error::InvalidParameter("mu_max must be positive".into()));
    }
    let rows: Vec<ScanRow> = (1..=mu_max)
        .map(|mu| {
            let lambda = floor_mu_e(mu);
            let gap = approximation_gap(mu, lambda);
            let v = (mu as f64).powf(d) * gap;
            ScanRow {
                mu,
                lambda,
                gap,
                mu_pow_d_times_gap: v,
                is_exception: v < 1.0,
            }
        })
        .collect();
    let best = rows
        .iter()
        .min_by(|a, b| a.mu_pow_d_times_gap.total_cmp(&b.mu_pow_d_times_gap))
        .expect("non-empty scan");
    Ok(ScanReport {
        d,
        mu_max,
        min_value: best.mu_pow_d_times_gap,
        argmin_mu: best.mu,
        exceptions: rows.iter().filter(|r| r.is_exception).map(|r| r.mu).collect(),
        rows,
    })
}

/// One μ of the small-μ scaling check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    pub mu: u64,
    pub epsilon: f64,
    pub threshold: f64,
    pub exception: bool,
    pub holds: bool,
}

/// For `μ ≤ n^{1/4−c}` and `λ = ⌊μe⌋`, whether the gap `ε(μ,λ)` exceeds
/// `n^{−1/2}`; exceptional μ from `scan` are marked but still evaluated.
pub fn small_mu_gap_check(n: f64, c: f64, scan: &ScanReport) -> Vec<ScalingRow> {
    let mu_cap = n.powf(0.25 - c).floor() as u64;
    let threshold = n.powf(-0.5);
    (1..=mu_cap)
        .map(|mu| {
            let lambda = floor_mu_e(mu).max(1);
            let epsilon = epsilon_gap(mu, lambda).expect("floor keeps lambda <= mu*e");
            ScalingRow {
                mu,
                epsilon,
                threshold,
                exception: scan.exceptions.contains(&mu),
                holds: epsilon > threshold,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_digits() {
        assert_eq!(
            e_decimal(60),
            "2.718281828459045235360287471352662497757247093699959574966967"
        );
    }

    #[test]
    fn cf_prefixes() {
        assert_eq!(e_continued_fraction(1).unwrap(), [2]);
        assert_eq!(e_continued_fraction(6).unwrap(), [2, 1, 2, 1, 1, 4]);
        assert_eq!(e_continued_fraction_numeric(20), e_continued_fraction(20).unwrap());
        assert!(e_continued_fraction(0).is_err());
    }

    #[test]
    fn fifth_convergent() {
        let c = convergents(&e_continued_fraction(5).unwrap());
        let last = c.last().unwrap();
        assert_eq!((last.p.clone(), last.q.clone()), (BigInt::from(19), BigInt::from(7)));
        assert!((last.error() - 3.996e-3).abs() < 1e-6);
        assert!(last.error() < 1.0 / 49.0);
    }

    #[test]
    fn gaps() {
        assert!((epsilon_gap(1, 1).unwrap() - (1.0 - 1.0 / std::f64::consts::E)).abs() < 1e-15);
        assert!((epsilon_gap(10, 27).unwrap() - 6.7256e-3).abs() < 1e-7);
        assert!((epsilon_gap(7, 19).unwrap() - 1.470e-3).abs() < 1e-6);
        assert!(epsilon_gap(10, 28).is_err());
    }

    #[test]
    fn worst_lambda_for_seven() {
        let best = (1..=19u64)
            .min_by(|&a, &b| epsilon_gap(7, a).unwrap().total_cmp(&epsilon_gap(7, b).unwrap()))
            .unwrap();
        assert_eq!(best, 19);
    }

    #[test]
    fn floor_values() {
        assert_eq!(floor_mu_e(1), 2);
        assert_eq!(floor_mu_e(10), 27);
        assert_eq!(floor_mu_e(25), 67);
        assert_eq!(floor_mu_e(256), 695);
    }
}
