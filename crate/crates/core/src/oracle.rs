//! Branch norms: the per-branch evaluation models that a tree norm is built
//! from. A model sees the coefficient sequence along one branch, keyed by
//! depth, and returns its norm in the underlying sequence space.
//!
//! Built-in models are the spreading ones: `c0` (sup of magnitudes) and `lp`
//! for p >= 1 (power sums). They are 1-unconditional, so dropping entries or
//! restricting to a depth interval never increases the value; that is what
//! justifies evaluating segments through their supported nodes only.
//! Squared `c0` and `l2` values are exact rationals; the other `lp` values
//! are dyadic approximations with 128 fractional bits, carried exactly once
//! rounded.

use crate::numeric::{
    decimal_sqrt_string, dyadic_pow, format_ratio, pow_rational, ratio_to_f64, tolerance, ValueSq,
    FRAC_BITS,
};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("invalid parameter: {detail}")]
    InvalidParameter { detail: String },
    #[error("branch entries must have strictly increasing depths >= 1 (position {position})")]
    InvalidCoefficients { position: usize },
}

/// One coefficient on a branch, keyed by depth (1-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchEntry {
    pub depth: u32,
    pub coeff: BigRational,
}

/// Coefficient sequence along a branch: depths strictly increasing, all >= 1.
/// Zero coefficients are allowed and contribute nothing.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BranchCoefficients {
    entries: Vec<BranchEntry>,
}

impl BranchCoefficients {
    pub fn new(entries: Vec<BranchEntry>) -> Result<BranchCoefficients, OracleError> {
        let mut last = 0u32;
        for (i, e) in entries.iter().enumerate() {
            if e.depth == 0 || e.depth <= last {
                return Err(OracleError::InvalidCoefficients { position: i });
            }
            last = e.depth;
        }
        Ok(BranchCoefficients { entries })
    }

    pub fn from_pairs(pairs: &[(u32, BigRational)]) -> Result<BranchCoefficients, OracleError> {
        BranchCoefficients::new(
            pairs
                .iter()
                .map(|(d, c)| BranchEntry {
                    depth: *d,
                    coeff: c.clone(),
                })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[BranchEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Restriction to a closed depth interval.
    pub fn depth_interval(&self, lo: u32, hi: u32) -> BranchCoefficients {
        BranchCoefficients {
            entries: self
                .entries
                .iter()
                .filter(|e| lo <= e.depth && e.depth <= hi)
                .cloned()
                .collect(),
        }
    }

    /// Coefficientwise sum, aligned by depth.
    pub fn add(&self, other: &BranchCoefficients) -> BranchCoefficients {
        let mut entries = Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut i, mut j) = (0, 0);
        while i < self.entries.len() && j < other.entries.len() {
            let a = &self.entries[i];
            let b = &other.entries[j];
            match a.depth.cmp(&b.depth) {
                std::cmp::Ordering::Less => {
                    entries.push(a.clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    entries.push(b.clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    entries.push(BranchEntry {
                        depth: a.depth,
                        coeff: &a.coeff + &b.coeff,
                    });
                    i += 1;
                    j += 1;
                }
            }
        }
        entries.extend(self.entries[i..].iter().cloned());
        entries.extend(other.entries[j..].iter().cloned());
        BranchCoefficients { entries }
    }

    pub fn scale(&self, factor: &BigRational) -> BranchCoefficients {
        BranchCoefficients {
            entries: self
                .entries
                .iter()
                .map(|e| BranchEntry {
                    depth: e.depth,
                    coeff: &e.coeff * factor,
                })
                .collect(),
        }
    }
}

/// A branch norm, reported either through its exact square or as a dyadic
/// approximation of the value itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BranchValue {
    ExactSq(BigRational),
    Dyadic(BigRational),
}

impl BranchValue {
    pub fn is_exact(&self) -> bool {
        matches!(self, BranchValue::ExactSq(_))
    }

    pub fn sq(&self) -> BigRational {
        match self {
            BranchValue::ExactSq(s) => s.clone(),
            BranchValue::Dyadic(v) => v * v,
        }
    }

    pub fn to_value_sq(&self) -> ValueSq {
        match self {
            BranchValue::ExactSq(s) => ValueSq::from_exact_sq(s.clone()),
            BranchValue::Dyadic(v) => ValueSq::from_dyadic_value(v.clone()),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            BranchValue::ExactSq(s) => ratio_to_f64(s).sqrt(),
            BranchValue::Dyadic(v) => ratio_to_f64(v),
        }
    }

    pub fn decimal(&self, digits: u32) -> String {
        decimal_sqrt_string(&self.sq(), digits)
    }
}

/// Streaming evaluation state. Pushes follow a branch downward; `pop`
/// undoes the most recent push, which lets tree walks backtrack.
pub trait BranchAccumulator {
    fn push(&mut self, depth: u32, coeff: &BigRational);
    fn pop(&mut self);
    fn value(&self) -> BranchValue;
}

/// Integer fast-path kernels: for some models, squared branch values of
/// integer coefficient vectors reduce to machine-integer folds. The engine
/// uses these to avoid big-rational traffic in hot loops; results are
/// identical to the generic path by exact homogeneity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegerKernel {
    /// Squared value = (max |c|)^2 — the c0 model.
    MaxAbs,
    /// Squared value = sum of c^2 — the l2 model.
    SumSquares,
}

/// A branch norm model. Implementations must be normalized (singletons with
/// coefficient 1 have norm 1), homogeneous, satisfy the triangle inequality,
/// and be bi-monotone along every branch; `validate_oracle` probes exactly
/// these axioms.
pub trait BranchNormOracle: Send + Sync {
    /// Selector-style name: "c0", "l1", "l2", "lp:3/2".
    fn name(&self) -> String;

    /// Whether squared values are exact rationals for every input.
    fn is_exact(&self) -> bool;

    /// Norm of a coefficient sequence along one branch.
    fn value(&self, coeffs: &BranchCoefficients) -> BranchValue;

    /// Fresh streaming accumulator; None when streaming is unsupported.
    fn accumulator(&self) -> Option<Box<dyn BranchAccumulator>>;

    /// Machine-integer kernel computing the squared value on integer
    /// coefficients, when one exists. Only exact models may offer one.
    fn integer_kernel(&self) -> Option<IntegerKernel> {
        None
    }

    /// Exact squared norm, when the square is rational-valued.
    fn exact_sq(&self, coeffs: &BranchCoefficients) -> Option<BigRational> {
        match self.value(coeffs) {
            BranchValue::ExactSq(s) => Some(s),
            BranchValue::Dyadic(_) => None,
        }
    }
}

// ---------------------------------------------------------------------------
// c0 spreading model: norm = max |coefficient|.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Default)]
pub struct C0Spreading;

/// The c0 spreading model.
pub fn c0_spreading() -> C0Spreading {
    C0Spreading
}

impl BranchNormOracle for C0Spreading {
    fn name(&self) -> String {
        "c0".to_string()
    }

    fn is_exact(&self) -> bool {
        true
    }

    fn value(&self, coeffs: &BranchCoefficients) -> BranchValue {
        let mut best = BigRational::zero();
        for e in coeffs.entries() {
            let a = e.coeff.abs();
            if a > best {
                best = a;
            }
        }
        BranchValue::ExactSq(&best * &best)
    }

    fn accumulator(&self) -> Option<Box<dyn BranchAccumulator>> {
        Some(Box::new(C0Accumulator { maxes: Vec::new() }))
    }

    fn integer_kernel(&self) -> Option<IntegerKernel> {
        Some(IntegerKernel::MaxAbs)
    }
}

struct C0Accumulator {
    maxes: Vec<BigRational>,
}

impl BranchAccumulator for C0Accumulator {
    fn push(&mut self, _depth: u32, coeff: &BigRational) {
        let a = coeff.abs();
        let next = match self.maxes.last() {
            Some(m) if *m >= a => m.clone(),
            _ => a,
        };
        self.maxes.push(next);
    }

    fn pop(&mut self) {
        self.maxes.pop().expect("pop without matching push");
    }

    fn value(&self) -> BranchValue {
        match self.maxes.last() {
            Some(m) => BranchValue::ExactSq(m * m),
            None => BranchValue::ExactSq(BigRational::zero()),
        }
    }
}

// ---------------------------------------------------------------------------
// lp spreading model: norm = (sum |coefficient|^p)^(1/p), p >= 1 rational.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct LpSpreading {
    /// p = num/den, reduced, p >= 1.
    p_num: u32,
    p_den: u32,
}

/// The lp spreading model for rational p = num/den >= 1.
pub fn lp_spreading(p_num: u32, p_den: u32) -> Result<LpSpreading, OracleError> {
    if p_den == 0 || p_num == 0 {
        return Err(OracleError::InvalidParameter {
            detail: "p must be a positive rational".to_string(),
        });
    }
    let g = p_num.gcd(&p_den);
    let (p_num, p_den) = (p_num / g, p_den / g);
    if p_num < p_den {
        return Err(OracleError::InvalidParameter {
            detail: format!("p = {p_num}/{p_den} is below 1"),
        });
    }
    Ok(LpSpreading { p_num, p_den })
}

/// The l1 spreading model.
pub fn l1_spreading() -> LpSpreading {
    lp_spreading(1, 1).unwrap()
}

/// The l2 spreading model (exact squared values).
pub fn l2_spreading() -> LpSpreading {
    lp_spreading(2, 1).unwrap()
}

impl LpSpreading {
    fn is_l2(&self) -> bool {
        self.p_num == 2 && self.p_den == 1
    }

    /// |c|^p, rounded down to FRAC_BITS fractional bits when p is not an
    /// integer.
    fn term(&self, coeff: &BigRational) -> BigRational {
        let a = coeff.abs();
        if self.p_den == 1 {
            pow_rational(&a, self.p_num)
        } else {
            dyadic_pow(&a, self.p_num, self.p_den, FRAC_BITS)
        }
    }

    fn finish(&self, power_sum: &BigRational) -> BranchValue {
        if self.is_l2() {
            BranchValue::ExactSq(power_sum.clone())
        } else if self.p_num == self.p_den {
            BranchValue::Dyadic(power_sum.clone())
        } else {
            BranchValue::Dyadic(dyadic_pow(power_sum, self.p_den, self.p_num, FRAC_BITS))
        }
    }
}

impl BranchNormOracle for LpSpreading {
    fn name(&self) -> String {
        match (self.p_num, self.p_den) {
            (1, 1) => "l1".to_string(),
            (2, 1) => "l2".to_string(),
            (n, 1) => format!("lp:{n}"),
            (n, d) => format!("lp:{n}/{d}"),
        }
    }

    fn is_exact(&self) -> bool {
        self.is_l2()
    }

    fn value(&self, coeffs: &BranchCoefficients) -> BranchValue {
        let mut sum = BigRational::zero();
        for e in coeffs.entries() {
            sum += self.term(&e.coeff);
        }
        self.finish(&sum)
    }

    fn accumulator(&self) -> Option<Box<dyn BranchAccumulator>> {
        Some(Box::new(LpAccumulator {
            model: *self,
            sums: Vec::new(),
        }))
    }

    fn integer_kernel(&self) -> Option<IntegerKernel> {
        self.is_l2().then_some(IntegerKernel::SumSquares)
    }
}

struct LpAccumulator {
    model: LpSpreading,
    sums: Vec<BigRational>,
}

impl BranchAccumulator for LpAccumulator {
    fn push(&mut self, _depth: u32, coeff: &BigRational) {
        let term = self.model.term(coeff);
        let next = match self.sums.last() {
            Some(s) => s + term,
            None => term,
        };
        self.sums.push(next);
    }

    fn pop(&mut self) {
        self.sums.pop().expect("pop without matching push");
    }

    fn value(&self) -> BranchValue {
        match self.sums.last() {
            Some(s) => self.model.finish(s),
            None => self.model.finish(&BigRational::zero()),
        }
    }
}

/// Parses a basis selector: "c0" | "l1" | "l2" | "lp:<num>[/<den>]".
pub fn oracle_for_selector(selector: &str) -> Result<Box<dyn BranchNormOracle>, OracleError> {
    match selector {
        "c0" => Ok(Box::new(c0_spreading())),
        "l1" => Ok(Box::new(l1_spreading())),
        "l2" => Ok(Box::new(l2_spreading())),
        _ => {
            let Some(p) = selector.strip_prefix("lp:") else {
                return Err(OracleError::InvalidParameter {
                    detail: format!("unknown basis selector `{selector}`"),
                });
            };
            let (num, den) = match p.split_once('/') {
                Some((n, d)) => (n, d),
                None => (p, "1"),
            };
            let bad = |_| OracleError::InvalidParameter {
                detail: format!("bad lp exponent `{p}`"),
            };
            let num: u32 = num.parse().map_err(bad)?;
            let den: u32 = den.parse().map_err(bad)?;
            Ok(Box::new(lp_spreading(num, den)?))
        }
    }
}

// ---------------------------------------------------------------------------
// Oracle validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    Normalization,
    Homogeneity,
    Triangle,
    BiMonotone,
    StreamingAgreement,
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub axiom: Axiom,
    pub detail: String,
}

/// Outcome of probing an oracle against its contract. Violations are
/// report content, not errors.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub oracle: String,
    pub samples: u32,
    pub checks: u64,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn values_close(a: &BranchValue, b: &BranchValue, tol: &BigRational) -> bool {
    match (a, b) {
        (BranchValue::ExactSq(x), BranchValue::ExactSq(y)) => x == y,
        (x, y) => (x.sq() - y.sq()).abs() <= tol * (x.sq() + y.sq() + BigRational::one()),
    }
}

/// Probes normalization, homogeneity, the triangle inequality,
/// bi-monotonicity over all depth intervals, and streaming agreement on all
/// prefixes, over seeded random coefficient sequences.
pub fn validate_oracle(
    oracle: &dyn BranchNormOracle,
    max_depth: u32,
    samples: u32,
    seed: u64,
) -> ValidationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = Vec::new();
    let mut checks = 0u64;
    let tol = tolerance();
    let max_depth = max_depth.max(1);

    let random_coeff = |rng: &mut ChaCha8Rng| {
        let num = rng.random_range(-9i64..=9);
        let den = rng.random_range(1i64..=9);
        crate::numeric::rat(num, den)
    };
    let random_branch = |rng: &mut ChaCha8Rng| {
        let len = rng.random_range(0..=max_depth.min(6));
        let mut depths: Vec<u32> = (1..=max_depth).collect();
        for i in (1..depths.len()).rev() {
            depths.swap(i, rng.random_range(0..=i));
        }
        depths.truncate(len as usize);
        depths.sort_unstable();
        let entries = depths
            .into_iter()
            .map(|d| BranchEntry {
                depth: d,
                coeff: random_coeff(rng),
            })
            .collect();
        BranchCoefficients::new(entries).unwrap()
    };

    for sample in 0..samples {
        // Normalization on a random depth.
        let d = rng.random_range(1..=max_depth);
        let single =
            BranchCoefficients::from_pairs(&[(d, BigRational::one())]).unwrap();
        let v = oracle.value(&single);
        checks += 1;
        if !values_close(&v, &BranchValue::ExactSq(BigRational::one()), &tol) {
            violations.push(Violation {
                axiom: Axiom::Normalization,
                detail: format!("unit coefficient at depth {d} has norm^2 {}", v.sq()),
            });
        }

        let b = random_branch(&mut rng);
        let vb = oracle.value(&b);

        // Homogeneity.
        let lambda = random_coeff(&mut rng);
        let scaled = oracle.value(&b.scale(&lambda));
        let expected_sq = &lambda * &lambda * vb.sq();
        checks += 1;
        let homogeneous = if oracle.is_exact() {
            scaled.sq() == expected_sq
        } else {
            (scaled.sq() - &expected_sq).abs()
                <= &tol * (expected_sq + BigRational::one())
        };
        if !homogeneous {
            violations.push(Violation {
                axiom: Axiom::Homogeneity,
                detail: format!("sample {sample}: scaling by {} broke homogeneity", lambda),
            });
        }

        // Triangle inequality.
        let c = random_branch(&mut rng);
        let vc = oracle.value(&c);
        let vsum = oracle.value(&b.add(&c));
        checks += 1;
        let triangle_ok = {
            // |b+c| <= |b| + |c|, via squares to stay rational:
            // S <= B + C + 2 sqrt(B C)  <=>  S - B - C <= 0 or (S-B-C)^2 <= 4 B C,
            // with tolerance slack folded in for dyadic models.
            let s = vsum.sq();
            let bb = vb.sq();
            let cc = vc.sq();
            let gap = &s - &bb - &cc;
            let slack = if oracle.is_exact() {
                BigRational::zero()
            } else {
                &tol * (&s + &bb + &cc + BigRational::one())
            };
            let gs = &gap - &slack;
            gap <= slack || &gs * &gs <= crate::numeric::rat(4, 1) * bb * cc + slack
        };
        if !triangle_ok {
            violations.push(Violation {
                axiom: Axiom::Triangle,
                detail: format!("sample {sample}: triangle inequality failed"),
            });
        }

        // Bi-monotonicity over every depth interval.
        let full_sq = vb.sq();
        for i in 0..b.len() {
            for j in i..b.len() {
                let lo = b.entries()[i].depth;
                let hi = b.entries()[j].depth;
                let sub = oracle.value(&b.depth_interval(lo, hi));
                checks += 1;
                let slack = if oracle.is_exact() {
                    BigRational::zero()
                } else {
                    &tol * (&full_sq + BigRational::one())
                };
                if sub.sq() > &full_sq + slack {
                    violations.push(Violation {
                        axiom: Axiom::BiMonotone,
                        detail: format!(
                            "sample {sample}: interval [{lo},{hi}] projection grew the norm"
                        ),
                    });
                }
            }
        }

        // Streaming agreement on every prefix.
        if let Some(mut acc) = oracle.accumulator() {
            for k in 0..=b.len() {
                if k > 0 {
                    let e = &b.entries()[k - 1];
                    acc.push(e.depth, &e.coeff);
                }
                let prefix = BranchCoefficients::new(b.entries()[..k].to_vec()).unwrap();
                checks += 1;
                if acc.value() != oracle.value(&prefix) {
                    violations.push(Violation {
                        axiom: Axiom::StreamingAgreement,
                        detail: format!("sample {sample}: prefix {k} diverged from direct value"),
                    });
                }
            }
        }
    }

    ValidationReport {
        oracle: oracle.name(),
        samples,
        checks,
        violations,
    }
}

pub fn format_branch_value(v: &BranchValue) -> String {
    match v {
        BranchValue::ExactSq(sq) => format!("sqrt({})", format_ratio(sq)),
        BranchValue::Dyadic(d) => format_ratio(d),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;

    fn coeffs(pairs: &[(u32, i64, i64)]) -> BranchCoefficients {
        BranchCoefficients::from_pairs(
            &pairs
                .iter()
                .map(|&(d, n, m)| (d, rat(n, m)))
                .collect::<Vec<_>>(),
        )
        .unwrap()
    }

    #[test]
    fn entries_must_strictly_increase_in_depth() {
        assert!(BranchCoefficients::from_pairs(&[(1, rat(1, 1)), (1, rat(2, 1))]).is_err());
        assert!(BranchCoefficients::from_pairs(&[(2, rat(1, 1)), (1, rat(2, 1))]).is_err());
        assert!(BranchCoefficients::from_pairs(&[(0, rat(1, 1))]).is_err());
        assert!(BranchCoefficients::from_pairs(&[(1, rat(1, 1)), (5, rat(2, 1))]).is_ok());
    }

    #[test]
    fn c0_takes_the_max_magnitude() {
        let o = c0_spreading();
        let v = o.value(&coeffs(&[(1, 3, 1), (2, -4, 1)]));
        assert_eq!(v, BranchValue::ExactSq(rat(16, 1)));
        assert_eq!(o.value(&coeffs(&[])), BranchValue::ExactSq(rat(0, 1)));
    }

    #[test]
    fn l2_sums_squares_exactly() {
        let o = l2_spreading();
        assert!(o.is_exact());
        let v = o.value(&coeffs(&[(1, 3, 1), (4, 4, 1)]));
        assert_eq!(v, BranchValue::ExactSq(rat(25, 1)));
    }

    #[test]
    fn l1_reports_dyadic_but_is_internally_exact() {
        let o = l1_spreading();
        assert!(!o.is_exact());
        let v = o.value(&coeffs(&[(1, 1, 1), (2, 1, 1), (3, 1, 1)]));
        assert_eq!(v, BranchValue::Dyadic(rat(3, 1)), "integer p takes no rounding");
        assert_eq!(o.exact_sq(&coeffs(&[(1, 1, 1)])), None);
    }

    #[test]
    fn fractional_p_rounds_down_at_the_boundary() {
        // A singleton coefficient has norm |c| in every lp; with fractional
        // p the two dyadic roundings (|c|^p, then the 1/p root) land the
        // value just below the ideal 2, never above it.
        let o = lp_spreading(3, 2).unwrap();
        let v = o.value(&coeffs(&[(1, 2, 1)]));
        let BranchValue::Dyadic(d) = v else {
            panic!("fractional p must be dyadic")
        };
        assert!(d < rat(2, 1), "rounded strictly below the exact value");
        let slack = BigRational::new(1.into(), num_bigint::BigInt::from(2).pow(126));
        assert!(d > rat(2, 1) - slack, "within 2^-126 of the exact value");
    }

    #[test]
    fn lp_rejects_p_below_one() {
        assert!(lp_spreading(1, 2).is_err());
        assert!(lp_spreading(0, 1).is_err());
        assert!(lp_spreading(3, 0).is_err());
        assert_eq!(lp_spreading(4, 2).unwrap().name(), "l2", "4/2 reduces to 2");
    }

    #[test]
    fn selector_round_trip() {
        for sel in ["c0", "l1", "l2", "lp:3/2", "lp:3"] {
            let o = oracle_for_selector(sel).unwrap();
            assert_eq!(o.name(), sel);
        }
        assert!(oracle_for_selector("linf").is_err());
        assert!(oracle_for_selector("lp:1/2").is_err());
    }

    #[test]
    fn zero_entries_do_not_change_values() {
        for o in [
            Box::new(c0_spreading()) as Box<dyn BranchNormOracle>,
            Box::new(l2_spreading()),
            Box::new(lp_spreading(3, 2).unwrap()),
        ] {
            let with_zeros = coeffs(&[(1, 0, 1), (2, 5, 2), (3, 0, 1), (4, -1, 3)]);
            let without = coeffs(&[(2, 5, 2), (4, -1, 3)]);
            assert_eq!(o.value(&with_zeros), o.value(&without), "{}", o.name());
        }
    }

    #[test]
    fn accumulator_pop_restores_previous_state() {
        let o = l2_spreading();
        let mut acc = o.accumulator().unwrap();
        acc.push(1, &rat(3, 1));
        let before = acc.value();
        acc.push(2, &rat(4, 1));
        assert_eq!(acc.value(), BranchValue::ExactSq(rat(25, 1)));
        acc.pop();
        assert_eq!(acc.value(), before);
        acc.pop();
        assert_eq!(acc.value(), BranchValue::ExactSq(rat(0, 1)));
    }

    #[test]
    fn builtin_oracles_validate_clean() {
        for o in [
            Box::new(c0_spreading()) as Box<dyn BranchNormOracle>,
            Box::new(l1_spreading()),
            Box::new(l2_spreading()),
            Box::new(lp_spreading(3, 2).unwrap()),
        ] {
            let report = validate_oracle(o.as_ref(), 8, 60, 1);
            assert!(
                report.passed(),
                "{} violations: {:?}",
                report.oracle,
                report.violations
            );
        }
    }

    /// A deliberately broken model: doubles every value.
    struct DoubledC0;
    impl BranchNormOracle for DoubledC0 {
        fn name(&self) -> String {
            "c0x2".to_string()
        }
        fn is_exact(&self) -> bool {
            true
        }
        fn value(&self, coeffs: &BranchCoefficients) -> BranchValue {
            BranchValue::ExactSq(crate::numeric::rat(4, 1) * c0_spreading().value(coeffs).sq())
        }
        fn accumulator(&self) -> Option<Box<dyn BranchAccumulator>> {
            None
        }
    }

    #[test]
    fn validator_flags_a_planted_normalization_fault() {
        let report = validate_oracle(&DoubledC0, 6, 20, 3);
        assert!(!report.passed());
        assert!(report
            .violations
            .iter()
            .all(|v| v.axiom == Axiom::Normalization));
    }

    /// A model whose accumulator ignores pushes.
    struct StuckStream;
    impl BranchNormOracle for StuckStream {
        fn name(&self) -> String {
            "stuck".to_string()
        }
        fn is_exact(&self) -> bool {
            true
        }
        fn value(&self, coeffs: &BranchCoefficients) -> BranchValue {
            c0_spreading().value(coeffs)
        }
        fn accumulator(&self) -> Option<Box<dyn BranchAccumulator>> {
            struct Stuck;
            impl BranchAccumulator for Stuck {
                fn push(&mut self, _d: u32, _c: &BigRational) {}
                fn pop(&mut self) {}
                fn value(&self) -> BranchValue {
                    BranchValue::ExactSq(BigRational::zero())
                }
            }
            Some(Box::new(Stuck))
        }
    }

    #[test]
    fn validator_flags_a_stuck_accumulator() {
        let report = validate_oracle(&StuckStream, 6, 20, 4);
        assert!(report
            .violations
            .iter()
            .any(|v| v.axiom == Axiom::StreamingAgreement));
    }
}
