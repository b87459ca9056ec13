//! Rational scalar helpers: parsing and formatting of `num/den` strings,
//! integer roots, dyadic root enclosures, and decimal rendering.
//!
//! Inexact branch norms (the general `lp` family) are represented as dyadic
//! rationals: values rounded down to a multiple of 2^-FRAC_BITS at the oracle
//! boundary and carried exactly afterwards. Every computation downstream of
//! the rounding point is ordinary rational arithmetic, so results are
//! deterministic bit for bit and the only error is the documented rounding
//! error at the boundary.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

/// Fractional bits kept by dyadic roundings. 2^-128 is far below the
/// documented comparison tolerance of 1e-12.
pub const FRAC_BITS: u32 = 128;

/// Comparison tolerance for inexact values, as an exact rational (1e-12).
pub fn tolerance() -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(10u64).pow(12))
}

pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(num: i64) -> BigRational {
    BigRational::from(BigInt::from(num))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational `{input}`: {reason}")]
pub struct RatioParseError {
    pub input: String,
    pub reason: String,
}

/// Parses `num`, `num/den`, or `1e-k` into an exact rational.
/// Denominators must be nonzero; decimal points are rejected.
pub fn parse_ratio(s: &str) -> Result<BigRational, RatioParseError> {
    let err = |reason: &str| RatioParseError {
        input: s.to_string(),
        reason: reason.to_string(),
    };
    let t = s.trim();
    if t.is_empty() {
        return Err(err("empty"));
    }
    if t.contains('.') {
        return Err(err("decimal notation is not accepted; use num/den"));
    }
    if let Some((m, e)) = t.split_once(['e', 'E']) {
        let mantissa: BigInt = m.parse().map_err(|_| err("bad mantissa"))?;
        let exp: i32 = e.parse().map_err(|_| err("bad exponent"))?;
        let p = BigInt::from(10u32).pow(exp.unsigned_abs());
        return Ok(if exp < 0 {
            BigRational::new(mantissa, p)
        } else {
            BigRational::from(mantissa * p)
        });
    }
    match t.split_once('/') {
        None => {
            let n: BigInt = t.parse().map_err(|_| err("bad integer"))?;
            Ok(BigRational::from(n))
        }
        Some((n, d)) => {
            let n: BigInt = n.parse().map_err(|_| err("bad numerator"))?;
            let d: BigInt = d.parse().map_err(|_| err("bad denominator"))?;
            if d.is_zero() {
                return Err(err("zero denominator"));
            }
            Ok(BigRational::new(n, d))
        }
    }
}

/// Canonical `num/den` form, reduced, denominator always present and positive.
pub fn format_ratio(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// floor(sqrt(n)) exactly.
pub fn floor_sqrt(n: &BigUint) -> BigUint {
    n.sqrt()
}

/// ceil(sqrt(n)) exactly.
pub fn ceil_sqrt(n: &BigUint) -> BigUint {
    let r = n.sqrt();
    if &r * &r == *n {
        r
    } else {
        r + 1u32
    }
}

/// Some(sqrt(n)) when n is a perfect square.
pub fn exact_sqrt(n: &BigUint) -> Option<BigUint> {
    let r = n.sqrt();
    if &r * &r == *n {
        Some(r)
    } else {
        None
    }
}

/// Smallest perfect square >= n, returned as (root, square).
pub fn next_square_at_least(n: &BigUint) -> (BigUint, BigUint) {
    let r = ceil_sqrt(n);
    let sq = &r * &r;
    (r, sq)
}

fn biguint_of(r: &BigRational) -> (BigUint, BigUint) {
    debug_assert!(!r.is_negative());
    (
        r.numer().magnitude().clone(),
        r.denom().magnitude().clone(),
    )
}

/// floor(x^(1/b) * 2^frac_bits) / 2^frac_bits for x >= 0.
///
/// The result q satisfies q <= x^(1/b) < q + 2^(1-frac_bits).
pub fn dyadic_root(x: &BigRational, b: u32, frac_bits: u32) -> BigRational {
    assert!(b >= 1, "root order must be positive");
    assert!(!x.is_negative(), "dyadic_root needs a nonnegative argument");
    if b == 1 || x.is_zero() {
        return x.clone();
    }
    let (n, d) = biguint_of(x);
    // (n/d)^(1/b) = (n * d^(b-1))^(1/b) / d
    let w = &n * d.pow(b - 1);
    let shifted = w << (b as u64 * frac_bits as u64);
    let root = shifted.nth_root(b); // floor((w << b*s)^(1/b)) = floor(w^(1/b) * 2^s)
    let q = root / &d; // floor(w^(1/b) * 2^s / d)
    BigRational::new(
        BigInt::from_biguint(Sign::Plus, q),
        BigInt::one() << frac_bits,
    )
}

/// x^(a/b) for x >= 0, rounded down to a dyadic with `frac_bits` fractional
/// bits (exact when b == 1).
pub fn dyadic_pow(x: &BigRational, a: u32, b: u32, frac_bits: u32) -> BigRational {
    assert!(!x.is_negative());
    let powered = pow_rational(x, a);
    dyadic_root(&powered, b, frac_bits)
}

/// x^a exactly, for a >= 0.
pub fn pow_rational(x: &BigRational, a: u32) -> BigRational {
    if a == 0 {
        return BigRational::one();
    }
    BigRational::new(x.numer().pow(a), x.denom().pow(a))
}

/// Rational enclosure [lo, hi] of sqrt(n) with hi - lo <= 2^(1-frac_bits).
pub fn sqrt_enclosure(n: &BigUint, frac_bits: u32) -> (BigRational, BigRational) {
    if let Some(r) = exact_sqrt(n) {
        let exact = BigRational::from(BigInt::from_biguint(Sign::Plus, r));
        return (exact.clone(), exact);
    }
    let shifted = n << (2 * frac_bits as u64);
    let root = shifted.sqrt();
    let den: BigInt = BigInt::one() << frac_bits;
    let lo = BigRational::new(BigInt::from_biguint(Sign::Plus, root.clone()), den.clone());
    let hi = BigRational::new(BigInt::from_biguint(Sign::Plus, root + 1u32), den);
    (lo, hi)
}

/// Truncated decimal rendering of a rational with a fixed number of
/// fractional digits. Pure integer arithmetic, so byte-stable.
pub fn decimal_string(r: &BigRational, digits: u32) -> String {
    let neg = r.is_negative();
    let scale = BigUint::from(10u32).pow(digits);
    let num = r.numer().magnitude() * &scale;
    let q = num / r.denom().magnitude();
    decimal_from_scaled(&q, digits, neg)
}

/// Truncated decimal rendering of sqrt(r) for r >= 0.
pub fn decimal_sqrt_string(r: &BigRational, digits: u32) -> String {
    assert!(!r.is_negative(), "square root of a negative value");
    let (n, d) = biguint_of(r);
    // floor(sqrt(n/d) * 10^digits) = floor(isqrt(n * d * 10^(2*digits)) / d)
    let m = &n * &d * BigUint::from(10u32).pow(2 * digits);
    let q = m.sqrt() / &d;
    decimal_from_scaled(&q, digits, false)
}

fn decimal_from_scaled(q: &BigUint, digits: u32, neg: bool) -> String {
    let s = q.to_string();
    let digits = digits as usize;
    let (int_part, frac_part) = if s.len() > digits {
        let split = s.len() - digits;
        (s[..split].to_string(), s[split..].to_string())
    } else {
        ("0".to_string(), format!("{:0>width$}", s, width = digits))
    };
    let sign = if neg && (int_part != "0" || frac_part.bytes().any(|b| b != b'0')) {
        "-"
    } else {
        ""
    };
    if digits == 0 {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{frac_part}")
    }
}

/// Least common multiple of the denominators of a collection of rationals.
pub fn denominator_lcm<'a>(values: impl IntoIterator<Item = &'a BigRational>) -> BigInt {
    // Most inputs repeat a handful of denominators; scan a small table of
    // distinct ones before folding.
    let mut distinct: Vec<BigInt> = Vec::new();
    for v in values {
        let d = v.denom();
        if !distinct.iter().any(|x| x == d) {
            if distinct.len() < 64 {
                distinct.push(d.clone());
            } else {
                distinct[0] = distinct[0].lcm(d);
            }
        }
    }
    distinct
        .into_iter()
        .fold(BigInt::one(), |acc, d| acc.lcm(&d))
}

/// A nonnegative value known either exactly through its square, or as a
/// dyadic approximation of the value itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueSq {
    /// Squared value: exact, or the square of the dyadic approximation.
    pub sq: BigRational,
    /// Whether `sq` is the exact square of the mathematical value.
    pub exact: bool,
}

impl ValueSq {
    pub fn zero_exact() -> Self {
        ValueSq {
            sq: BigRational::zero(),
            exact: true,
        }
    }

    pub fn from_exact_sq(sq: BigRational) -> Self {
        debug_assert!(!sq.is_negative());
        ValueSq { sq, exact: true }
    }

    /// A squared value that is itself exact arithmetic over rounded inputs,
    /// hence an approximation of the mathematical square.
    pub fn from_approx_sq(sq: BigRational) -> Self {
        debug_assert!(!sq.is_negative());
        ValueSq { sq, exact: false }
    }

    pub fn from_dyadic_value(value: BigRational) -> Self {
        debug_assert!(!value.is_negative());
        ValueSq {
            sq: &value * &value,
            exact: false,
        }
    }

    /// Value as f64 (square root of the stored square).
    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.sq).sqrt()
    }

    /// Truncated decimal rendering of the value.
    pub fn decimal(&self, digits: u32) -> String {
        decimal_sqrt_string(&self.sq, digits)
    }
}

impl fmt::Display for ValueSq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.decimal(12))
    }
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_plain_and_fraction() {
        assert_eq!(parse_ratio("3").unwrap(), rat_int(3));
        assert_eq!(parse_ratio("-7/2").unwrap(), rat(-7, 2));
        assert_eq!(parse_ratio("6/4").unwrap(), rat(3, 2));
        assert_eq!(parse_ratio("1e-3").unwrap(), rat(1, 1000));
        assert!(parse_ratio("1/0").is_err());
        assert!(parse_ratio("0.5").is_err());
        assert!(parse_ratio("").is_err());
    }

    #[test]
    fn format_is_reduced_with_positive_denominator() {
        assert_eq!(format_ratio(&rat(6, -4)), "-3/2");
        assert_eq!(format_ratio(&rat_int(25)), "25/1");
    }

    #[test]
    fn integer_square_roots() {
        let n = BigUint::from(1024u32);
        assert_eq!(exact_sqrt(&n).unwrap(), BigUint::from(32u32));
        assert_eq!(ceil_sqrt(&BigUint::from(17u32)), BigUint::from(5u32));
        let (root, sq) = next_square_at_least(&BigUint::from(7u32));
        assert_eq!(root, BigUint::from(3u32));
        assert_eq!(sq, BigUint::from(9u32));
    }

    #[test]
    fn dyadic_root_is_a_tight_lower_bound() {
        let x = rat_int(2);
        let r = dyadic_root(&x, 2, FRAC_BITS);
        assert!(&r * &r <= x);
        let gap = &x - &r * &r;
        // (sqrt(2) + e)^2 - 2 < 4e for the rounding error e
        assert!(gap < rat_int(4) * BigRational::new(BigInt::one(), BigInt::one() << 126));
    }

    #[test]
    fn dyadic_root_exact_cases() {
        assert_eq!(dyadic_root(&rat_int(9), 2, 16), rat_int(3));
        assert_eq!(dyadic_root(&rat(1, 4), 2, 16), rat(1, 2));
        assert_eq!(dyadic_root(&rat(27, 8), 3, 16), rat(3, 2));
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(decimal_string(&rat(1, 4), 4), "0.2500");
        assert_eq!(decimal_string(&rat(-1, 3), 5), "-0.33333");
        assert_eq!(decimal_sqrt_string(&rat_int(25), 3), "5.000");
        assert_eq!(decimal_sqrt_string(&rat_int(2), 6), "1.414213");
        assert_eq!(decimal_string(&rat_int(0), 2), "0.00");
    }

    #[test]
    fn sqrt_enclosure_brackets_the_root() {
        let (lo, hi) = sqrt_enclosure(&BigUint::from(2u32), 64);
        assert!(&lo * &lo < rat_int(2));
        assert!(&hi * &hi > rat_int(2));
        assert!(&hi - &lo <= BigRational::new(BigInt::one(), BigInt::one() << 63));
        let (lo, hi) = sqrt_enclosure(&BigUint::from(144u32), 64);
        assert_eq!(lo, rat_int(12));
        assert_eq!(hi, rat_int(12));
    }

    #[test]
    fn denominator_lcm_over_mixed_entries() {
        let vals = [rat(1, 6), rat(3, 4), rat(5, 1)];
        assert_eq!(denominator_lcm(vals.iter()), BigInt::from(12));
    }
}
