//! Finite quantitative certificates.
//!
//! This module validates block sequences, checks the segment-projection
//! decay condition, samples unconditionality and upper-ℓ₂ ratios, and
//! forges sequences that provably satisfy the decay hypothesis. The
//! checkers are independent of the generators: they consult only the norm
//! engine, so a forged sequence is re-certified from scratch.
//!
//! Decay condition. For a normalized block sequence (w_n), writing
//! k_i = |supp(w_i)|, the requirement on w_n for n ≥ 1 is
//!
//! ```text
//!     ‖w_n‖_{T0}  ≤  1 / ( (√k_0 + … + √k_{n−1}) · 2^{n+2} )
//! ```
//!
//! carried exactly as a comparison of squared rationals. The square roots
//! of non-square sizes are handled without irrational arithmetic: first a
//! conservative integer over-approximation Σ⌈√k_i⌉, then a dyadic interval
//! enclosure when the conservative test is inconclusive. Each record states
//! which mode decided it.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::norm::{norm_pair, EngineError, Evaluator, INT_COEFF_LIMIT};
use crate::numeric::{
    ceil_sqrt, exact_sqrt, next_square_at_least, sqrt_enclosure, tolerance, ValueSq, FRAC_BITS,
};
use crate::oracle::{c0_spreading, BranchNormOracle};
use crate::project::range_of;
use crate::segment::RangeInterval;
use crate::tree::{bfs_enumeration, FiniteTree, NodeEnumeration, NodeId};
use crate::vector::TreeVector;

#[derive(Debug, Error)]
pub enum CertError {
    #[error("sequence must contain at least one vector")]
    EmptySequence,
    #[error("vector {index} is not normalized: family norm squared is {t2_sq}")]
    NotNormalized { index: usize, t2_sq: String },
    #[error("vectors {first} and {second} are not successive blocks: enumeration ranges must strictly increase")]
    NotBlock { first: usize, second: usize },
    #[error("length must be at least 1")]
    InvalidLength,
    #[error("base antichain size must be a positive perfect square, got {k0}")]
    InvalidBaseSize { k0: u64 },
    #[error("epsilon must satisfy 0 < epsilon <= 1")]
    InvalidEpsilon,
    #[error("trials must be at least 1")]
    InvalidTrials,
    #[error(
        "tree too small: forging {length} blocks needs {required_leaves} leaves \
         (a full binary tree of depth >= {required_depth}); this tree has {available_leaves}"
    )]
    TreeTooSmall {
        length: usize,
        required_leaves: BigUint,
        required_depth: u64,
        available_leaves: u64,
    },
    #[error(
        "tree too narrow: no antichain of {required} pairwise incomparable nodes exists \
         (the tree has {available} leaves, and every antichain injects into the leaves)"
    )]
    TreeTooNarrow { required: BigUint, available: u64 },
    #[error("antichain of {required} nodes exceeds the budget of {budget}")]
    BudgetExceeded { required: BigUint, budget: u64 },
    #[error("internal verification failed: {details}")]
    VerificationFailed { details: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

// ---------------------------------------------------------------------------
// Block sequences
// ---------------------------------------------------------------------------

/// A validated normalized block sequence: every vector has family norm 1
/// and the support ranges under the fixed enumeration strictly increase.
/// Construction goes through [`check_block`].
#[derive(Debug, Clone)]
pub struct BlockSequence {
    vectors: Vec<TreeVector>,
    enumeration: NodeEnumeration,
    ranges: Vec<RangeInterval>,
}

impl BlockSequence {
    pub fn vectors(&self) -> &[TreeVector] {
        &self.vectors
    }

    pub fn enumeration(&self) -> &NodeEnumeration {
        &self.enumeration
    }

    /// Support ranges, strictly increasing across the sequence.
    pub fn ranges(&self) -> &[RangeInterval] {
        &self.ranges
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Validates a normalized block sequence: each vector must have family norm
/// exactly 1 (within the fixed tolerance for rounding models) and the
/// support ranges must strictly increase under `enumeration`.
pub fn check_block(
    tree: &FiniteTree,
    oracle: &dyn BranchNormOracle,
    vectors: Vec<TreeVector>,
    enumeration: NodeEnumeration,
) -> Result<BlockSequence, CertError> {
    if vectors.is_empty() {
        return Err(CertError::EmptySequence);
    }
    let one = BigRational::one();
    let mut ranges = Vec::with_capacity(vectors.len());
    for (index, v) in vectors.iter().enumerate() {
        let (t2, _t0) = norm_pair(tree, v, oracle)?;
        let normalized = if t2.exact {
            t2.sq == one
        } else {
            (&t2.sq - &one).abs() <= tolerance()
        };
        if !normalized {
            return Err(CertError::NotNormalized {
                index,
                t2_sq: crate::numeric::format_ratio(&t2.sq),
            });
        }
        // A normalized vector is nonzero, so its range exists.
        let range = range_of(v, &enumeration).map_err(|_| CertError::NotNormalized {
            index,
            t2_sq: "0/1".to_owned(),
        })?;
        ranges.push(range);
    }
    for i in 1..ranges.len() {
        if ranges[i - 1].hi >= ranges[i].lo {
            return Err(CertError::NotBlock {
                first: i - 1,
                second: i,
            });
        }
    }
    Ok(BlockSequence {
        vectors,
        enumeration,
        ranges,
    })
}

// ---------------------------------------------------------------------------
// Decay certificates
// ---------------------------------------------------------------------------

/// How a decay record was decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayMode {
    /// All support sizes are perfect squares; the bound is an exact rational
    /// and the comparison is decided both ways.
    Exact,
    /// Proved via the integer over-approximation Σ⌈√k_i⌉ (pass only).
    Conservative,
    /// Decided by a dyadic interval enclosure of Σ√k_i.
    Interval,
    /// The enclosure at the working precision could not separate the two
    /// sides; reported as not holding.
    Inconclusive,
}

impl DecayMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DecayMode::Exact => "exact",
            DecayMode::Conservative => "conservative",
            DecayMode::Interval => "interval",
            DecayMode::Inconclusive => "inconclusive",
        }
    }
}

/// Outcome of the decay test for one index n ≥ 1.
#[derive(Debug, Clone)]
pub struct DecayRecord {
    pub n: usize,
    /// Segment norm of w_n (squared), from the engine.
    pub t0: ValueSq,
    /// Certified rational lower bound on the true bound, squared. Equals
    /// the exact bound squared in `Exact` mode.
    pub bound_sq: BigRational,
    /// Whether `bound_sq` is the exact squared bound.
    pub bound_exact: bool,
    pub mode: DecayMode,
    pub holds: bool,
}

/// Per-index decay outcomes plus the overall verdict.
#[derive(Debug, Clone)]
pub struct DecayCertificate {
    pub oracle: String,
    pub records: Vec<DecayRecord>,
    pub holds: bool,
}

/// Checks the decay condition on a validated block sequence. Support sizes
/// enter through their square roots; comparisons stay rational throughout.
pub fn check_decay(
    tree: &FiniteTree,
    oracle: &dyn BranchNormOracle,
    seq: &BlockSequence,
) -> Result<DecayCertificate, CertError> {
    let sizes: Vec<BigUint> = seq
        .vectors()
        .iter()
        .map(|v| BigUint::from(v.support_len()))
        .collect();
    let mut records = Vec::new();
    let mut holds = true;
    for n in 1..seq.len() {
        let (_t2, t0) = norm_pair(tree, &seq.vectors()[n], oracle)?;
        let record = decay_record(n, &t0, &sizes[..n]);
        holds &= record.holds;
        records.push(record);
    }
    Ok(DecayCertificate {
        oracle: oracle.name(),
        records,
        holds,
    })
}

/// Compares t0(w_n)² against 1 / ((Σ_{i<n} √k_i)² · 4^{n+2}).
fn decay_record(n: usize, t0: &ValueSq, sizes: &[BigUint]) -> DecayRecord {
    let four_pow = BigInt::from(4u32).pow(n as u32 + 2);
    let slack = if t0.exact {
        BigRational::zero()
    } else {
        tolerance()
    };

    // Exact mode: every size a perfect square.
    let roots: Option<Vec<BigUint>> = sizes.iter().map(exact_sqrt).collect();
    if let Some(roots) = roots {
        let s: BigUint = roots.iter().sum();
        let bound_sq = inverse_bound_sq(&s.into(), &four_pow);
        let holds = t0.sq <= &bound_sq + &slack;
        return DecayRecord {
            n,
            t0: t0.clone(),
            bound_sq,
            bound_exact: true,
            mode: DecayMode::Exact,
            holds,
        };
    }

    // Conservative mode: Σ√k_i ≤ Σ⌈√k_i⌉ gives a rational lower bound on
    // the true bound; sufficient for a pass, never for a refutation.
    let s_up: BigUint = sizes.iter().map(ceil_sqrt).sum();
    let bound_lo_sq = inverse_bound_sq(&s_up.into(), &four_pow);
    if t0.sq <= &bound_lo_sq + &slack {
        return DecayRecord {
            n,
            t0: t0.clone(),
            bound_sq: bound_lo_sq,
            bound_exact: false,
            mode: DecayMode::Conservative,
            holds: true,
        };
    }

    // Interval mode: dyadic enclosures of each √k_i.
    let mut s_lo = BigRational::zero();
    let mut s_hi = BigRational::zero();
    for k in sizes {
        let (lo, hi) = sqrt_enclosure(k, FRAC_BITS);
        s_lo += lo;
        s_hi += hi;
    }
    let bound_lo_sq = rational_inverse_bound_sq(&s_hi, &four_pow);
    let bound_hi_sq = rational_inverse_bound_sq(&s_lo, &four_pow);
    let (mode, holds) = if t0.sq <= &bound_lo_sq + &slack {
        (DecayMode::Interval, true)
    } else if t0.sq > &bound_hi_sq + &slack {
        (DecayMode::Interval, false)
    } else {
        (DecayMode::Inconclusive, false)
    };
    DecayRecord {
        n,
        t0: t0.clone(),
        bound_sq: bound_lo_sq,
        bound_exact: false,
        mode,
        holds,
    }
}

/// 1 / (s² · four_pow) for an integer root sum s.
fn inverse_bound_sq(s: &BigInt, four_pow: &BigInt) -> BigRational {
    BigRational::new(BigInt::one(), s * s * four_pow)
}

/// 1 / (s² · four_pow) for a rational enclosure endpoint s.
fn rational_inverse_bound_sq(s: &BigRational, four_pow: &BigInt) -> BigRational {
    (s * s * BigRational::from(four_pow.clone())).recip()
}

// ---------------------------------------------------------------------------
// Forge
// ---------------------------------------------------------------------------

/// Forges a normalized block sequence satisfying the decay condition with
/// equality, under the c₀ spreading model.
///
/// Block n is an antichain of k_n leaves with equal coefficients 1/√k_n,
/// where √k_0 = 2 and √k_n = (Σ_{i<n} √k_i) · 2^{n+2}; every k_n is a
/// perfect square, so all coefficients are rational and the decay
/// certificate is decided in exact mode. Blocks occupy consecutive runs of
/// leaves in enumeration order, so their supports live in disjoint subtrees
/// and the ranges strictly increase. The seed picks the starting leaf
/// offset among the feasible positions; sizes and feasibility do not depend
/// on it.
pub fn forge_decaying_sequence(
    tree: &FiniteTree,
    length: usize,
    seed: u64,
) -> Result<BlockSequence, CertError> {
    forge_with_base_size(tree, length, seed, 4)
}

/// [`forge_decaying_sequence`] with an explicit base antichain size k_0,
/// which must be a positive perfect square.
pub fn forge_with_base_size(
    tree: &FiniteTree,
    length: usize,
    seed: u64,
    k0: u64,
) -> Result<BlockSequence, CertError> {
    if length == 0 {
        return Err(CertError::InvalidLength);
    }
    if k0 == 0 {
        return Err(CertError::InvalidBaseSize { k0 });
    }
    let s0 = exact_sqrt(&BigUint::from(k0)).ok_or(CertError::InvalidBaseSize { k0 })?;

    // Plan the sizes: √k_n = (Σ_{i<n} √k_i) · 2^{n+2}, all integers.
    let mut roots: Vec<BigUint> = vec![s0.clone()];
    let mut root_sum = s0;
    for n in 1..length {
        let s_n = &root_sum << (n as u32 + 2);
        root_sum += &s_n;
        roots.push(s_n);
    }
    let sizes: Vec<BigUint> = roots.iter().map(|s| s * s).collect();
    let total: BigUint = sizes.iter().sum();

    // Leaves in enumeration order; every antichain injects into the leaves,
    // so leaves are the roomiest antichain available.
    let enumeration = bfs_enumeration(tree);
    let mut leaves: Vec<NodeId> = tree.node_ids().filter(|&v| tree.is_leaf(v)).collect();
    leaves.sort_unstable_by_key(|&v| enumeration.position(v));

    let available = leaves.len() as u64;
    if total > BigUint::from(available) {
        // Minimal depth d with 2^d leaves >= total, for a full binary forest.
        let required_depth = (&total - 1u32).bits().max(1);
        return Err(CertError::TreeTooSmall {
            length,
            required_leaves: total,
            required_depth,
            available_leaves: available,
        });
    }
    let total = total.to_usize().expect("fits: bounded by leaf count");

    let slack = leaves.len() - total;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = rng.random_range(0..=slack as u64) as usize;

    let mut vectors = Vec::with_capacity(length);
    let mut next = offset;
    for (s_n, k_n) in roots.iter().zip(&sizes) {
        let k = k_n.to_usize().expect("block fits in leaf count");
        let coeff = BigRational::new(BigInt::one(), BigInt::from(s_n.clone()));
        let entries = leaves[next..next + k]
            .iter()
            .map(|&v| (v, coeff.clone()))
            .collect();
        vectors.push(TreeVector::new(entries).expect("distinct leaves, nonzero coefficient"));
        next += k;
    }

    // Re-validate through the independent checker rather than trusting the
    // construction.
    let oracle = c0_spreading();
    check_block(tree, &oracle, vectors, enumeration)
}

// ---------------------------------------------------------------------------
// Trial sampling
// ---------------------------------------------------------------------------

/// Coefficient grid denominator: trial coefficients are g/8 with
/// g ∈ {−8,…,−1, 1,…,8}.
const GRID_DEN: i64 = 8;

/// Pre-mapped combination evaluator over a block sequence: one shared
/// skeleton, per-entry integer bases when an integer kernel applies, and a
/// scratch buffer reused across trials.
struct SequenceSampler<'t> {
    evaluator: Evaluator<'t>,
    len: usize,
    /// (skeleton position, block index), sorted by position.
    template: Vec<(u32, u32)>,
    /// Parallel to `template`: w_block(node) as a rational.
    bases_rat: Vec<BigRational>,
    /// Parallel to `template`: w_block(node) · lcm-of-denominators, when on
    /// the integer fast path.
    bases_int: Vec<i64>,
    int_path: bool,
    /// Denominator for the integer path: GRID_DEN · lcm of all entry
    /// denominators.
    den: BigInt,
    scratch_int: Vec<(u32, i64)>,
    scratch_rat: Vec<(u32, BigRational)>,
}

impl<'t> SequenceSampler<'t> {
    fn new(
        tree: &'t FiniteTree,
        oracle: &'t dyn BranchNormOracle,
        seq: &BlockSequence,
    ) -> Result<SequenceSampler<'t>, CertError> {
        let evaluator = Evaluator::new(
            tree,
            oracle,
            seq.vectors().iter().flat_map(|v| v.support()),
        )?;
        let den_lcm = crate::numeric::denominator_lcm(
            seq.vectors().iter().flat_map(|v| v.iter().map(|(_, c)| c)),
        );
        let den_lcm_ratio = BigRational::from(den_lcm.clone());

        let mut rows: Vec<(u32, u32, BigRational, Option<i64>)> = Vec::new();
        // Integer entries stay within the machine limit after multiplying by
        // a grid numerator of size at most GRID_DEN.
        let base_limit = INT_COEFF_LIMIT / GRID_DEN;
        for (b, v) in seq.vectors().iter().enumerate() {
            for (node, c) in v.iter() {
                let pos = self_position(&evaluator, node)?;
                let scaled = (c * &den_lcm_ratio).to_integer();
                let fits = scaled.to_i64().filter(|x| x.abs() <= base_limit);
                rows.push((pos, b as u32, c.clone(), fits));
            }
        }
        rows.sort_unstable_by_key(|&(pos, ..)| pos);

        let int_path = evaluator_has_int_kernel(oracle) && rows.iter().all(|r| r.3.is_some());
        let capacity = rows.len();
        let mut template = Vec::with_capacity(capacity);
        let mut bases_rat = Vec::with_capacity(capacity);
        let mut bases_int = Vec::with_capacity(capacity);
        for (pos, b, c, fits) in rows {
            template.push((pos, b));
            bases_rat.push(c);
            bases_int.push(fits.unwrap_or(0));
        }
        Ok(SequenceSampler {
            evaluator,
            len: seq.len(),
            template,
            bases_rat,
            bases_int,
            int_path,
            den: BigInt::from(GRID_DEN) * den_lcm,
            scratch_int: Vec::with_capacity(capacity),
            scratch_rat: Vec::with_capacity(capacity),
        })
    }

    /// Evaluates (t2², t0²) of Σ_n (g_n / GRID_DEN) · w_n; blocks with
    /// g_n = 0 are dropped. The zero combination short-circuits to (0, 0).
    fn eval_combination(&mut self, g: &[i64]) -> Result<(ValueSq, ValueSq), CertError> {
        debug_assert_eq!(g.len(), self.len);
        if self.int_path {
            self.scratch_int.clear();
            for (row, &base) in self.template.iter().zip(&self.bases_int) {
                let gn = g[row.1 as usize];
                if gn != 0 {
                    self.scratch_int.push((row.0, gn * base));
                }
            }
            let out = self
                .evaluator
                .eval_int_positions(&self.scratch_int, &self.den)
                .expect("integer path checked at construction");
            Ok(out)
        } else {
            self.scratch_rat.clear();
            let grid = BigInt::from(GRID_DEN);
            for (row, base) in self.template.iter().zip(&self.bases_rat) {
                let gn = g[row.1 as usize];
                if gn != 0 {
                    let coeff = base * BigRational::new(BigInt::from(gn), grid.clone());
                    self.scratch_rat.push((row.0, coeff));
                }
            }
            Ok(self.evaluator.eval_rational_positions(&self.scratch_rat))
        }
    }
}

fn self_position(evaluator: &Evaluator<'_>, node: NodeId) -> Result<u32, CertError> {
    evaluator
        .position_of(node)
        .ok_or(CertError::Engine(EngineError::SupportOutsideSkeleton {
            node,
        }))
}

fn evaluator_has_int_kernel(oracle: &dyn BranchNormOracle) -> bool {
    oracle.integer_kernel().is_some()
}

/// Grid coefficients for one trial: structured extremes first (all ones,
/// alternating signs, single spikes), then uniform draws from the grid.
fn trial_coefficients(trial: u64, len: usize, rng: &mut ChaCha8Rng) -> Vec<i64> {
    if trial == 0 {
        return vec![GRID_DEN; len];
    }
    if trial == 1 {
        return (0..len)
            .map(|n| if n % 2 == 0 { GRID_DEN } else { -GRID_DEN })
            .collect();
    }
    let spike_base = 2u64;
    if trial >= spike_base && trial < spike_base + len as u64 {
        let mut g = vec![0i64; len];
        g[(trial - spike_base) as usize] = GRID_DEN;
        return g;
    }
    (0..len)
        .map(|_| {
            let mag = rng.random_range(1..=GRID_DEN);
            if rng.random_bool(0.5) {
                mag
            } else {
                -mag
            }
        })
        .collect()
}

fn check(cond: bool, details: &str) -> Result<(), CertError> {
    if cond {
        Ok(())
    } else {
        Err(CertError::VerificationFailed {
            details: details.to_owned(),
        })
    }
}

// ---------------------------------------------------------------------------
// Unconditionality report
// ---------------------------------------------------------------------------

/// Sampled unconditionality ratios ‖Σ_{n∈F} a_n w_n‖ / ‖Σ_n a_n w_n‖
/// against the √3 threshold.
#[derive(Debug, Clone)]
pub struct UnconditionalityReport {
    pub oracle: String,
    pub trials: u64,
    pub seed: u64,
    /// Largest sampled ratio, squared.
    pub max_ratio: ValueSq,
    pub attaining_coeffs: Vec<BigRational>,
    pub attaining_subset: Vec<usize>,
    /// Threshold squared: 3.
    pub threshold_sq: BigRational,
    /// Count of trials violating ‖Σ_F‖² ≤ 3·‖Σ‖² (plus tolerance when the
    /// model rounds).
    pub violations: u64,
    /// True when every trial's comparison was carried on exact rationals.
    pub exact: bool,
    /// Standing limitation of the method.
    pub note: String,
}

const SAMPLING_NOTE: &str = "sampling has refutation power only: the bound is universal over \
     real coefficients and finitely many trials cannot establish it";

/// Samples unconditionality ratios of a block sequence. Deterministic given
/// the seed; trial 0 forces the full subset (ratio exactly 1) and trial 1
/// the empty subset (ratio 0), and every trial re-checks the empty-subset
/// endpoint through the engine's zero path.
pub fn unconditionality_sample(
    tree: &FiniteTree,
    oracle: &dyn BranchNormOracle,
    seq: &BlockSequence,
    trials: u64,
    seed: u64,
) -> Result<UnconditionalityReport, CertError> {
    if trials == 0 {
        return Err(CertError::InvalidTrials);
    }
    let mut sampler = SequenceSampler::new(tree, oracle, seq)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = seq.len();
    let threshold_sq = BigRational::from(BigInt::from(3));

    let mut max_ratio_sq = BigRational::zero();
    let mut max_exact = true;
    let mut attaining_coeffs: Vec<BigRational> = Vec::new();
    let mut attaining_subset: Vec<usize> = Vec::new();
    let mut violations = 0u64;
    let mut all_exact = true;

    let zero_g = vec![0i64; len];
    for trial in 0..trials {
        let g = trial_coefficients(trial, len, &mut rng);
        let subset: Vec<bool> = match trial {
            0 => vec![true; len],
            1 => vec![false; len],
            _ => (0..len).map(|_| rng.random_bool(0.5)).collect(),
        };

        // Endpoint: the empty combination is exactly zero.
        let (empty_t2, empty_t0) = sampler.eval_combination(&zero_g)?;
        check(
            empty_t2.sq.is_zero() && empty_t0.sq.is_zero(),
            "empty combination must have zero norm",
        )?;

        let (total, _) = sampler.eval_combination(&g)?;
        check(
            total.sq.is_positive(),
            "denominator combination must be nonzero",
        )?;
        let masked: Vec<i64> = g
            .iter()
            .zip(&subset)
            .map(|(&gn, &inc)| if inc { gn } else { 0 })
            .collect();
        let (part, _) = sampler.eval_combination(&masked)?;

        let exact_trial = total.exact && part.exact;
        all_exact &= exact_trial;

        // Endpoint: the full subset reproduces the denominator exactly.
        if subset.iter().all(|&b| b) {
            check(
                part.sq == total.sq,
                "full subset must reproduce the total norm",
            )?;
        }

        let slack = if exact_trial {
            BigRational::zero()
        } else {
            tolerance()
        };
        if part.sq > &threshold_sq * &total.sq + slack {
            violations += 1;
        }

        let ratio_sq = &part.sq / &total.sq;
        if ratio_sq > max_ratio_sq {
            max_ratio_sq = ratio_sq;
            max_exact = exact_trial;
            attaining_coeffs = g
                .iter()
                .map(|&gn| BigRational::new(BigInt::from(gn), BigInt::from(GRID_DEN)))
                .collect();
            attaining_subset = subset
                .iter()
                .enumerate()
                .filter_map(|(n, &inc)| inc.then_some(n))
                .collect();
        }
    }

    let max_ratio = if max_exact {
        ValueSq::from_exact_sq(max_ratio_sq)
    } else {
        ValueSq::from_approx_sq(max_ratio_sq)
    };
    Ok(UnconditionalityReport {
        oracle: oracle.name(),
        trials,
        seed,
        max_ratio,
        attaining_coeffs,
        attaining_subset,
        threshold_sq,
        violations,
        exact: all_exact,
        note: SAMPLING_NOTE.to_owned(),
    })
}

// ---------------------------------------------------------------------------
// Upper-ℓ₂ report
// ---------------------------------------------------------------------------

/// Sampled ratios ‖Σ a_n w_n‖ / (Σ a_n²)^{1/2} plus the ℓ₁-incompatibility
/// probe ‖Σ w_n‖ / Σ‖w_n‖.
#[derive(Debug, Clone)]
pub struct UpperL2Report {
    pub oracle: String,
    pub trials: u64,
    pub seed: u64,
    /// Largest sampled ratio, squared.
    pub max_ratio: ValueSq,
    pub attaining_coeffs: Vec<BigRational>,
    /// ‖Σ_n w_n‖² / (Σ_n ‖w_n‖)², with Σ‖w_n‖ = sequence length by
    /// normalization.
    pub l1_probe: ValueSq,
    pub l1_probe_below_one: bool,
    /// True when every sampled comparison was carried on exact rationals.
    pub exact: bool,
    pub note: String,
}

const UPPER_L2_NOTE: &str = "no theoretical constant is asserted; the measured maximum is a \
     seed-reproducible regression value";

/// Samples upper-ℓ₂ ratios of a block sequence; deterministic given the
/// seed.
pub fn upper_l2_sample(
    tree: &FiniteTree,
    oracle: &dyn BranchNormOracle,
    seq: &BlockSequence,
    trials: u64,
    seed: u64,
) -> Result<UpperL2Report, CertError> {
    if trials == 0 {
        return Err(CertError::InvalidTrials);
    }
    let mut sampler = SequenceSampler::new(tree, oracle, seq)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = seq.len();

    let mut max_ratio_sq = BigRational::zero();
    let mut max_exact = true;
    let mut attaining_coeffs: Vec<BigRational> = Vec::new();
    let mut all_exact = true;

    for trial in 0..trials {
        let g = trial_coefficients(trial, len, &mut rng);
        let (total, _) = sampler.eval_combination(&g)?;
        all_exact &= total.exact;
        // Σ a_n² with a_n = g_n/GRID_DEN.
        let weight = BigRational::new(
            BigInt::from(g.iter().map(|&x| x * x).sum::<i64>()),
            BigInt::from(GRID_DEN * GRID_DEN),
        );
        check(weight.is_positive(), "trial coefficients must not all vanish")?;
        let ratio_sq = &total.sq / &weight;
        if ratio_sq > max_ratio_sq {
            max_ratio_sq = ratio_sq;
            max_exact = total.exact;
            attaining_coeffs = g
                .iter()
                .map(|&gn| BigRational::new(BigInt::from(gn), BigInt::from(GRID_DEN)))
                .collect();
        }
    }

    // ℓ₁ probe: all-ones coefficients against Σ‖w_n‖ = len.
    let ones = vec![GRID_DEN; len];
    let (probe_total, _) = sampler.eval_combination(&ones)?;
    let len_sq = BigRational::from(BigInt::from((len * len) as u64));
    let probe_sq = &probe_total.sq / &len_sq;
    let probe_below_one = if probe_total.exact {
        probe_sq < BigRational::one()
    } else {
        probe_sq < BigRational::one() + tolerance()
    };
    let l1_probe = if probe_total.exact {
        ValueSq::from_exact_sq(probe_sq)
    } else {
        ValueSq::from_approx_sq(probe_sq)
    };

    let max_ratio = if max_exact {
        ValueSq::from_exact_sq(max_ratio_sq)
    } else {
        ValueSq::from_approx_sq(max_ratio_sq)
    };
    Ok(UpperL2Report {
        oracle: oracle.name(),
        trials,
        seed,
        max_ratio,
        attaining_coeffs,
        l1_probe,
        l1_probe_below_one: probe_below_one,
        exact: all_exact,
        note: UPPER_L2_NOTE.to_owned(),
    })
}

// ---------------------------------------------------------------------------
// Singular witness
// ---------------------------------------------------------------------------

/// Builds a unit vector (family norm exactly 1) whose every segment
/// projection has norm at most ε: equal coefficients 1/√k on an antichain
/// of k leaves, k the smallest perfect square at least ⌈1/ε²⌉. The output
/// is re-verified through the engine before being returned.
pub fn singular_witness(
    tree: &FiniteTree,
    oracle: &dyn BranchNormOracle,
    epsilon: &BigRational,
    budget: u64,
) -> Result<TreeVector, CertError> {
    if !epsilon.is_positive() || epsilon > &BigRational::one() {
        return Err(CertError::InvalidEpsilon);
    }
    let needed = (epsilon * epsilon).recip().ceil().to_integer();
    let needed = needed.to_biguint().expect("positive by construction");
    let (root, k) = next_square_at_least(&needed);
    if k > BigUint::from(budget) {
        return Err(CertError::BudgetExceeded {
            required: k,
            budget,
        });
    }

    let mut leaves: Vec<NodeId> = tree.node_ids().filter(|&v| tree.is_leaf(v)).collect();
    leaves.sort_unstable();
    let available = leaves.len() as u64;
    let k_usize = match k.to_usize() {
        Some(k_usize) if k_usize <= leaves.len() => k_usize,
        _ => {
            return Err(CertError::TreeTooNarrow {
                required: k,
                available,
            })
        }
    };

    let coeff = BigRational::new(BigInt::one(), BigInt::from(root));
    let entries = leaves[..k_usize]
        .iter()
        .map(|&v| (v, coeff.clone()))
        .collect();
    let witness = TreeVector::new(entries).expect("distinct leaves, nonzero coefficient");

    // Verify both norm claims before handing the vector out.
    let (t2, t0) = norm_pair(tree, &witness, oracle)?;
    let eps_sq = epsilon * epsilon;
    let one = BigRational::one();
    let ok = if t2.exact && t0.exact {
        t2.sq == one && t0.sq <= eps_sq
    } else {
        (&t2.sq - &one).abs() <= tolerance() && t0.sq <= eps_sq + tolerance()
    };
    check(ok, "witness norms must be 1 and at most epsilon")?;
    Ok(witness)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;
    use crate::oracle::{c0_spreading, l1_spreading, l2_spreading};
    use crate::tree::FiniteTree as Ft;

    fn unit_singletons(_tree: &FiniteTree, nodes: &[NodeId]) -> Vec<TreeVector> {
        nodes
            .iter()
            .map(|&v| TreeVector::from_pairs(&[(v, 1, 1)]).unwrap())
            .collect()
    }

    #[test]
    fn check_block_accepts_increasing_singletons() {
        let t = Ft::full_binary(2);
        let oracle = c0_spreading();
        let e = bfs_enumeration(&t);
        // Nodes 0 and 2 sit at BFS positions 0 and 2.
        let seq = check_block(&t, &oracle, unit_singletons(&t, &[0, 2]), e).unwrap();
        assert_eq!(seq.len(), 2);
        assert!(seq.ranges()[0].hi < seq.ranges()[1].lo);
    }

    #[test]
    fn check_block_rejects_overlapping_ranges() {
        let t = Ft::full_binary(2);
        let oracle = c0_spreading();
        let e = bfs_enumeration(&t);
        let err = check_block(&t, &oracle, unit_singletons(&t, &[2, 0]), e).unwrap_err();
        assert!(matches!(err, CertError::NotBlock { first: 0, second: 1 }));
    }

    #[test]
    fn check_block_rejects_unnormalized_vector() {
        let t = Ft::full_binary(2);
        let oracle = c0_spreading();
        let e = bfs_enumeration(&t);
        let vectors = vec![TreeVector::from_pairs(&[(0, 2, 1)]).unwrap()];
        let err = check_block(&t, &oracle, vectors, e).unwrap_err();
        assert!(matches!(err, CertError::NotNormalized { index: 0, .. }));
    }

    #[test]
    fn check_block_rejects_empty_sequence() {
        let t = Ft::full_binary(2);
        let oracle = c0_spreading();
        let e = bfs_enumeration(&t);
        assert!(matches!(
            check_block(&t, &oracle, Vec::new(), e).unwrap_err(),
            CertError::EmptySequence
        ));
    }

    #[test]
    fn decay_vacuous_for_single_vector() {
        let t = Ft::full_binary(3);
        let oracle = c0_spreading();
        let seq = forge_decaying_sequence(&t, 1, 0).unwrap();
        let cert = check_decay(&t, &oracle, &seq).unwrap();
        assert!(cert.holds);
        assert!(cert.records.is_empty());
    }

    #[test]
    fn decay_rejects_shifted_copy_with_large_segment_norm() {
        // One chain of 8 nodes: w_0 on the top four with coefficients
        // (1, 1/2, 1/2, 1/2), w_1 the same pattern on the bottom four. Both
        // have family norm 1 (a chain admits only single-segment families)
        // and segment norm 1, but the bound for n = 1 is
        // 1/(√4 · 2³) = 1/16 < 1.
        let t = FiniteTree::build(&[
            None,
            Some(0),
            Some(1),
            Some(2),
            Some(3),
            Some(4),
            Some(5),
            Some(6),
        ])
        .unwrap();
        let oracle = c0_spreading();
        let coeffs = [(0u32, 1i64), (1, 2), (2, 2), (3, 2)];
        let w0 = TreeVector::new(
            coeffs
                .iter()
                .map(|&(v, d)| (v, rat(1, d)))
                .collect(),
        )
        .unwrap();
        let w1 = TreeVector::new(
            coeffs
                .iter()
                .map(|&(v, d)| (v + 4, rat(1, d)))
                .collect(),
        )
        .unwrap();
        let e = bfs_enumeration(&t);
        let seq = check_block(&t, &oracle, vec![w0, w1], e).unwrap();
        let cert = check_decay(&t, &oracle, &seq).unwrap();
        assert!(!cert.holds);
        let record = &cert.records[0];
        assert_eq!(record.mode, DecayMode::Exact);
        assert_eq!(record.bound_sq, rat(1, 256));
        assert_eq!(record.t0.sq, rat(1, 1));
        assert!(!record.holds);
    }

    #[test]
    fn forge_length_one_is_a_unit_antichain_of_four() {
        let t = Ft::full_binary(3);
        let seq = forge_decaying_sequence(&t, 1, 0).unwrap();
        assert_eq!(seq.len(), 1);
        let w0 = &seq.vectors()[0];
        assert_eq!(w0.support_len(), 4);
        for (_, c) in w0.iter() {
            assert_eq!(*c, rat(1, 2));
        }
    }

    #[test]
    fn forge_length_two_selects_256() {
        // √k_1 = (√k_0) · 2³ = 16, so k_1 = 256: the smallest perfect
        // square whose root is at least the required multiple.
        let t = Ft::full_binary(9);
        let seq = forge_decaying_sequence(&t, 2, 0).unwrap();
        assert_eq!(seq.vectors()[1].support_len(), 256);
        let oracle = c0_spreading();
        let cert = check_decay(&t, &oracle, &seq).unwrap();
        assert!(cert.holds);
        let record = &cert.records[0];
        assert_eq!(record.mode, DecayMode::Exact);
        // Equality: the forge meets the bound exactly.
        assert_eq!(record.t0.sq, record.bound_sq);
        assert_eq!(record.t0.sq, rat(1, 256));
    }

    #[test]
    fn forge_reports_required_depth_when_tree_too_small() {
        let t = Ft::full_binary(3);
        let err = forge_decaying_sequence(&t, 2, 0).unwrap_err();
        match err {
            CertError::TreeTooSmall {
                length,
                required_leaves,
                required_depth,
                available_leaves,
            } => {
                assert_eq!(length, 2);
                assert_eq!(required_leaves, BigUint::from(260u32));
                // 2^9 = 512 is the first leaf level holding 260 leaves.
                assert_eq!(required_depth, 9);
                assert_eq!(available_leaves, 8);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn forge_is_deterministic_and_seed_sensitive() {
        let t = Ft::full_binary(9);
        let a = forge_decaying_sequence(&t, 2, 7).unwrap();
        let b = forge_decaying_sequence(&t, 2, 7).unwrap();
        assert_eq!(a.vectors(), b.vectors());
        // A different seed shifts the leaf offset (not guaranteed in
        // general, but stable for this tree and these seeds).
        let c = forge_decaying_sequence(&t, 2, 8).unwrap();
        assert_ne!(a.vectors(), c.vectors());
    }

    #[test]
    fn forge_with_custom_base_size() {
        let t = Ft::full_binary(8);
        let seq = forge_with_base_size(&t, 2, 0, 1).unwrap();
        assert_eq!(seq.vectors()[0].support_len(), 1);
        // √k_1 = 1 · 2³ = 8 → k_1 = 64.
        assert_eq!(seq.vectors()[1].support_len(), 64);
        assert!(matches!(
            forge_with_base_size(&t, 1, 0, 3).unwrap_err(),
            CertError::InvalidBaseSize { k0: 3 }
        ));
    }

    #[test]
    fn decay_conservative_mode_passes_non_square_sizes() {
        // w_0 supported on two incomparable leaves with coefficients
        // (3/5, 4/5): family norm 1, support size 2 (not a square).
        // w_1 a singleton far below bound_1 = 1/(√2·8) needs t0 ≤ 0.088;
        // use an antichain of 256 leaves with coefficients 1/16:
        // t0 = 1/16 = 0.0625 ≤ 1/(⌈√2⌉·8) = 1/16 — the conservative
        // over-approximation already proves it.
        let t = Ft::full_binary(9);
        let oracle = c0_spreading();
        let e = bfs_enumeration(&t);
        let leaves: Vec<NodeId> = t.node_ids().filter(|&v| t.is_leaf(v)).collect();
        let w0 = TreeVector::new(vec![
            (leaves[0], rat(3, 5)),
            (leaves[1], rat(4, 5)),
        ])
        .unwrap();
        let w1 = TreeVector::new(
            leaves[2..258]
                .iter()
                .map(|&v| (v, rat(1, 16)))
                .collect(),
        )
        .unwrap();
        let seq = check_block(&t, &oracle, vec![w0, w1], e).unwrap();
        let cert = check_decay(&t, &oracle, &seq).unwrap();
        assert!(cert.holds);
        assert_eq!(cert.records[0].mode, DecayMode::Conservative);
    }

    #[test]
    fn decay_interval_mode_decides_tight_cases() {
        // Same non-square first block, second block with t0 = 1/12:
        // 1/(⌈√2⌉·8) = 1/16 < 1/12 < 1/(√2·8) ≈ 0.0884, so the
        // conservative test is inconclusive and the enclosure must prove it.
        let t = Ft::full_binary(9);
        let oracle = c0_spreading();
        let e = bfs_enumeration(&t);
        let leaves: Vec<NodeId> = t.node_ids().filter(|&v| t.is_leaf(v)).collect();
        let w0 = TreeVector::new(vec![
            (leaves[0], rat(3, 5)),
            (leaves[1], rat(4, 5)),
        ])
        .unwrap();
        let w1 = TreeVector::new(
            leaves[2..146]
                .iter()
                .map(|&v| (v, rat(1, 12)))
                .collect(),
        )
        .unwrap();
        let seq = check_block(&t, &oracle, vec![w0, w1], e).unwrap();
        let cert = check_decay(&t, &oracle, &seq).unwrap();
        assert!(cert.holds);
        assert_eq!(cert.records[0].mode, DecayMode::Interval);
        // And a certified refutation through the same enclosure: t0 = 1/8
        // exceeds 1/(√2·8) from above.
        let w1_big = TreeVector::new(
            leaves[2..66]
                .iter()
                .map(|&v| (v, rat(1, 8)))
                .collect(),
        )
        .unwrap();
        let w0_again = TreeVector::new(vec![
            (leaves[0], rat(3, 5)),
            (leaves[1], rat(4, 5)),
        ])
        .unwrap();
        let seq = check_block(&t, &oracle, vec![w0_again, w1_big], bfs_enumeration(&t)).unwrap();
        let cert = check_decay(&t, &oracle, &seq).unwrap();
        assert!(!cert.holds);
        assert_eq!(cert.records[0].mode, DecayMode::Interval);
    }

    #[test]
    fn unconditionality_endpoints_and_flat_ratios() {
        let t = Ft::full_binary(9);
        let oracle = c0_spreading();
        let seq = forge_decaying_sequence(&t, 2, 0).unwrap();
        let report = unconditionality_sample(&t, &oracle, &seq, 64, 5).unwrap();
        assert_eq!(report.trials, 64);
        assert!(report.exact);
        assert_eq!(report.violations, 0);
        // Disjoint incomparable supports make every subset ratio at most 1,
        // and the forced full-subset trial attains exactly 1.
        assert_eq!(report.max_ratio.sq, rat(1, 1));
        assert!(report.max_ratio.exact);
    }

    #[test]
    fn unconditionality_requires_trials() {
        let t = Ft::full_binary(3);
        let oracle = c0_spreading();
        let seq = forge_decaying_sequence(&t, 1, 0).unwrap();
        assert!(matches!(
            unconditionality_sample(&t, &oracle, &seq, 0, 0).unwrap_err(),
            CertError::InvalidTrials
        ));
    }

    #[test]
    fn unconditionality_rational_path_matches_integer_path() {
        // The ℓ₂ model also has an integer kernel; the ℓ₁ model forces the
        // rational path. On a single-block sequence the ratio structure is
        // identical: subset ratios are 0 or 1.
        let t = Ft::full_binary(3);
        let l1 = l1_spreading();
        let seq = forge_decaying_sequence(&t, 1, 0).unwrap();
        // Re-validate the same vectors under ℓ₁: an antichain of four
        // leaves with coefficients 1/2 still has family norm 1, since every
        // segment meets at most one support node.
        let seq_l1 =
            check_block(&t, &l1, seq.vectors().to_vec(), bfs_enumeration(&t)).unwrap();
        let report = unconditionality_sample(&t, &l1, &seq_l1, 16, 3).unwrap();
        assert_eq!(report.violations, 0);
        assert_eq!(report.max_ratio.sq, rat(1, 1));
    }

    #[test]
    fn upper_l2_single_vector_ratio_is_one() {
        let t = Ft::full_binary(3);
        let oracle = c0_spreading();
        let seq = forge_decaying_sequence(&t, 1, 0).unwrap();
        let report = upper_l2_sample(&t, &oracle, &seq, 32, 11).unwrap();
        assert_eq!(report.max_ratio.sq, rat(1, 1));
        assert!(report.exact);
        // Single vector: probe ratio is exactly 1, not below 1.
        assert_eq!(report.l1_probe.sq, rat(1, 1));
        assert!(!report.l1_probe_below_one);
    }

    #[test]
    fn upper_l2_two_blocks_probe_below_one() {
        let t = Ft::full_binary(9);
        let oracle = c0_spreading();
        let seq = forge_decaying_sequence(&t, 2, 0).unwrap();
        let report = upper_l2_sample(&t, &oracle, &seq, 32, 11).unwrap();
        // Flat blocks on disjoint antichains: every ratio is exactly 1.
        assert_eq!(report.max_ratio.sq, rat(1, 1));
        // ‖w_0 + w_1‖² = 2, (Σ‖w_n‖)² = 4.
        assert_eq!(report.l1_probe.sq, rat(1, 2));
        assert!(report.l1_probe_below_one);
    }

    #[test]
    fn witness_half_on_depth_two() {
        let t = Ft::full_binary(2);
        let oracle = c0_spreading();
        let w = singular_witness(&t, &oracle, &rat(1, 2), 1_000).unwrap();
        assert_eq!(w.support_len(), 4);
        let (t2, t0) = norm_pair(&t, &w, &oracle).unwrap();
        assert_eq!(t2.sq, rat(1, 1));
        assert_eq!(t0.sq, rat(1, 4));
    }

    #[test]
    fn witness_epsilon_one_is_a_unit_basis_vector() {
        let t = Ft::full_binary(2);
        let oracle = l2_spreading();
        let w = singular_witness(&t, &oracle, &rat(1, 1), 10).unwrap();
        assert_eq!(w.support_len(), 1);
        let (_, c) = w.iter().next().unwrap();
        assert_eq!(*c, rat(1, 1));
    }

    #[test]
    fn witness_rounds_up_to_perfect_square() {
        // ε = 1/3 needs ⌈9⌉ = 9 nodes, already a square; ε = 2/5 needs
        // ⌈25/4⌉ = 7, rounded up to 9.
        let t = Ft::full_binary(4);
        let oracle = c0_spreading();
        let w = singular_witness(&t, &oracle, &rat(2, 5), 100).unwrap();
        assert_eq!(w.support_len(), 9);
        let (t2, t0) = norm_pair(&t, &w, &oracle).unwrap();
        assert_eq!(t2.sq, rat(1, 1));
        assert_eq!(t0.sq, rat(1, 9));
        assert!(t0.sq <= rat(4, 25));
    }

    #[test]
    fn witness_errors() {
        let oracle = c0_spreading();
        // Single chain: only one leaf, no antichain of 4.
        let chain = FiniteTree::build(&[None, Some(0), Some(1)]).unwrap();
        assert!(matches!(
            singular_witness(&chain, &oracle, &rat(1, 2), 100).unwrap_err(),
            CertError::TreeTooNarrow { available: 1, .. }
        ));
        let t = Ft::full_binary(12);
        assert!(matches!(
            singular_witness(&t, &oracle, &rat(1, 32), 100).unwrap_err(),
            CertError::BudgetExceeded { budget: 100, .. }
        ));
        assert!(matches!(
            singular_witness(&t, &oracle, &rat(0, 1), 100).unwrap_err(),
            CertError::InvalidEpsilon
        ));
        assert!(matches!(
            singular_witness(&t, &oracle, &rat(3, 2), 100).unwrap_err(),
            CertError::InvalidEpsilon
        ));
    }

    #[test]
    fn witness_criterion_instance() {
        // ε = 1/32 on depth 12: exactly 1024 leaves with coefficient 1/32.
        let t = Ft::full_binary(12);
        let oracle = c0_spreading();
        let w = singular_witness(&t, &oracle, &rat(1, 32), 1 << 20).unwrap();
        assert_eq!(w.support_len(), 1024);
        let (t2, t0) = norm_pair(&t, &w, &oracle).unwrap();
        assert_eq!(t2.sq, rat(1, 1));
        assert_eq!(t0.sq, rat(1, 1024));
    }
}
