//! The norm engine. Two quantities are computed for a finitely supported
//! vector over a tree basis:
//!
//! * the **family norm** (here `t2`): sup over finite families of pairwise
//!   incomparable segments of the l2-sum of per-segment branch values;
//! * the **segment norm** (here `t0`): sup over single segments.
//!
//! Both suprema are attained on segments whose endpoints are support nodes —
//! dropping unsupported ends changes nothing, and moving each minimal node
//! down its own segment preserves pairwise incomparability — so everything
//! reduces to finite combinatorics over the support.
//!
//! Two independent solvers are provided. The brute-force solver enumerates
//! every incomparable family of candidate segments under a budget. The
//! subtree solver runs in one pass over the ancestor closure of the support:
//! with `closed(v)` the best family total inside the subtree of `v`, a
//! family either splits across children or is the single segment rooted at
//! `v` (any other segment's minimum would be comparable to `v`), giving
//!
//! ```text
//! closed(v) = max( sum over children c of closed(c),  path(v) )
//! path(v)   = max over support descendants w of value([v..w])^2
//! ```
//!
//! Exact models run over integers after clearing denominators; models that
//! can fold integer coefficients in machine words do so, with identical
//! results by exact homogeneity. The two solvers agree bit for bit, which
//! the test suite exercises heavily.

use crate::numeric::{denominator_lcm, ValueSq};
use crate::oracle::{
    BranchAccumulator, BranchCoefficients, BranchNormOracle, BranchValue, IntegerKernel,
};
use crate::segment::{Segment, SegmentFamily};
use crate::tree::{FiniteTree, NodeId, TreeError};
use crate::vector::TreeVector;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("family budget of {budget} exhausted before enumeration finished")]
    BudgetExceeded { budget: u64 },
    #[error("model `{oracle}` provides no streaming accumulator, required by the subtree solver")]
    AccumulatorMissing { oracle: String },
    #[error("support node {node} lies outside the evaluator's skeleton")]
    SupportOutsideSkeleton { node: NodeId },
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Scaled integer coefficients stay below this bound on the machine-integer
/// path, so every intermediate (squares, family sums over at most 2^32
/// support nodes) fits in an i128 without overflow checks.
pub(crate) const INT_COEFF_LIMIT: i64 = 1 << 30;

// ---------------------------------------------------------------------------
// Direct evaluation of explicit segments and families
// ---------------------------------------------------------------------------

/// Branch value of the vector restricted to one segment.
pub fn segment_value(
    tree: &FiniteTree,
    vector: &TreeVector,
    oracle: &dyn BranchNormOracle,
    seg: &Segment,
) -> BranchValue {
    let mut pairs = Vec::new();
    for &t in seg.nodes() {
        if let Some(c) = vector.coeff(t) {
            pairs.push((tree.depth(t), c.clone()));
        }
    }
    let coeffs =
        BranchCoefficients::from_pairs(&pairs).expect("depths increase strictly along a segment");
    oracle.value(&coeffs)
}

/// Squared family objective: sum of squared branch values of the members.
pub fn family_objective(
    tree: &FiniteTree,
    vector: &TreeVector,
    oracle: &dyn BranchNormOracle,
    family: &SegmentFamily,
) -> ValueSq {
    if family.is_empty() {
        return ValueSq::zero_exact();
    }
    let mut sum = BigRational::zero();
    for s in family.segments() {
        sum += segment_value(tree, vector, oracle, s).sq();
    }
    if oracle.is_exact() {
        ValueSq::from_exact_sq(sum)
    } else {
        ValueSq::from_approx_sq(sum)
    }
}

// ---------------------------------------------------------------------------
// Candidate segments and family enumeration (brute force)
// ---------------------------------------------------------------------------

/// All (min, max) support-node pairs with min an ancestor of (or equal to)
/// max, sorted by (min, max). Suprema are attained among these segments.
pub fn candidate_segments(
    tree: &FiniteTree,
    vector: &TreeVector,
) -> Result<Vec<(NodeId, NodeId)>, TreeError> {
    let support: Vec<NodeId> = vector.support().collect();
    for &v in &support {
        tree.check_node(v)?;
    }
    let mut out = Vec::new();
    for &a in &support {
        for &b in &support {
            if tree.is_ancestor_or_equal(a, b) {
                out.push((a, b));
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Lazy enumeration of all index sets of `mins` that form an antichain,
/// in lexicographic order starting from the empty set. Emitting more than
/// `budget` families yields a single `BudgetExceeded` error.
pub struct IncomparableFamilies<'t> {
    tree: &'t FiniteTree,
    mins: Vec<NodeId>,
    chosen: Vec<usize>,
    next: usize,
    emitted: u64,
    budget: u64,
    state: EnumState,
}

enum EnumState {
    Start,
    Running,
    Done,
}

pub fn incomparable_families<'t>(
    tree: &'t FiniteTree,
    mins: &[NodeId],
    budget: u64,
) -> IncomparableFamilies<'t> {
    IncomparableFamilies {
        tree,
        mins: mins.to_vec(),
        chosen: Vec::new(),
        next: 0,
        emitted: 0,
        budget,
        state: EnumState::Start,
    }
}

impl IncomparableFamilies<'_> {
    fn compatible(&self, i: usize) -> bool {
        self.chosen
            .iter()
            .all(|&j| !self.tree.comparable(self.mins[j], self.mins[i]))
    }
}

impl Iterator for IncomparableFamilies<'_> {
    type Item = Result<Vec<usize>, EngineError>;

    fn next(&mut self) -> Option<Self::Item> {
        if matches!(self.state, EnumState::Done) {
            return None;
        }
        let emit = |this: &mut Self, fam: Vec<usize>| {
            if this.emitted >= this.budget {
                this.state = EnumState::Done;
                Some(Err(EngineError::BudgetExceeded {
                    budget: this.budget,
                }))
            } else {
                this.emitted += 1;
                Some(Ok(fam))
            }
        };
        if matches!(self.state, EnumState::Start) {
            self.state = EnumState::Running;
            return emit(self, Vec::new());
        }
        loop {
            // Extend by the smallest compatible index not yet tried; on
            // exhaustion backtrack and advance past the popped index.
            while self.next < self.mins.len() && !self.compatible(self.next) {
                self.next += 1;
            }
            if self.next < self.mins.len() {
                self.chosen.push(self.next);
                self.next += 1;
                let fam = self.chosen.clone();
                return emit(self, fam);
            }
            match self.chosen.pop() {
                Some(i) => self.next = i + 1,
                None => {
                    self.state = EnumState::Done;
                    return None;
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

/// Family norm outcome: squared value plus an attaining family (empty for
/// the zero vector).
#[derive(Debug, Clone)]
pub struct T2Result {
    pub value: ValueSq,
    pub family: SegmentFamily,
}

/// Segment norm outcome: squared value plus an attaining segment (absent
/// for the zero vector).
#[derive(Debug, Clone)]
pub struct T0Result {
    pub value: ValueSq,
    pub segment: Option<Segment>,
}

fn wrap_sq(oracle: &dyn BranchNormOracle, sq: BigRational) -> ValueSq {
    if oracle.is_exact() {
        ValueSq::from_exact_sq(sq)
    } else {
        ValueSq::from_approx_sq(sq)
    }
}

// ---------------------------------------------------------------------------
// Brute-force solvers
// ---------------------------------------------------------------------------

type FamilyKey = (usize, Vec<NodeId>, Vec<Vec<NodeId>>);

/// Family norm by exhaustive enumeration of incomparable families. Ties are
/// broken toward the smallest (size, minimal ids, node lists) key, making
/// the reported family canonical.
pub fn t2_norm_bruteforce(
    tree: &FiniteTree,
    vector: &TreeVector,
    oracle: &dyn BranchNormOracle,
    budget: u64,
) -> Result<T2Result, EngineError> {
    if vector.is_zero() {
        return Ok(T2Result {
            value: ValueSq::zero_exact(),
            family: SegmentFamily::empty(),
        });
    }
    let candidates = candidate_segments(tree, vector)?;
    let seg_of = |i: usize| -> Segment {
        Segment::from_endpoints(tree, candidates[i].0, candidates[i].1)
            .expect("candidate endpoints form a chain")
    };
    let values: Vec<BigRational> = (0..candidates.len())
        .map(|i| segment_value(tree, vector, oracle, &seg_of(i)).sq())
        .collect();
    let mins: Vec<NodeId> = candidates.iter().map(|&(a, _)| a).collect();

    let key_of = |fam: &[usize]| -> FamilyKey {
        (
            fam.len(),
            fam.iter().map(|&i| mins[i]).collect(),
            fam.iter().map(|&i| seg_of(i).nodes().to_vec()).collect(),
        )
    };

    let mut best_sum = BigRational::zero();
    let mut best: Vec<usize> = Vec::new();
    let mut best_key: Option<FamilyKey> = None;
    for fam in incomparable_families(tree, &mins, budget) {
        let fam = fam?;
        let sum = fam
            .iter()
            .fold(BigRational::zero(), |s, &i| s + &values[i]);
        match sum.cmp(&best_sum) {
            std::cmp::Ordering::Greater => {
                best_sum = sum;
                best = fam;
                best_key = None;
            }
            std::cmp::Ordering::Equal => {
                if fam != best {
                    let key = key_of(&fam);
                    if best_key.is_none() {
                        best_key = Some(key_of(&best));
                    }
                    if &key < best_key.as_ref().unwrap() {
                        best = fam;
                        best_key = Some(key);
                    }
                }
            }
            std::cmp::Ordering::Less => {}
        }
    }

    let segments: Vec<Segment> = best.iter().map(|&i| seg_of(i)).collect();
    Ok(T2Result {
        value: wrap_sq(oracle, best_sum),
        family: SegmentFamily::from_sorted_unchecked(segments),
    })
}

/// Segment norm over all candidate segments; first maximizer in (min, max)
/// order wins ties.
pub fn t0_norm_bruteforce(
    tree: &FiniteTree,
    vector: &TreeVector,
    oracle: &dyn BranchNormOracle,
) -> Result<T0Result, EngineError> {
    if vector.is_zero() {
        return Ok(T0Result {
            value: ValueSq::zero_exact(),
            segment: None,
        });
    }
    let candidates = candidate_segments(tree, vector)?;
    let mut best_sq = BigRational::zero();
    let mut best: Option<(NodeId, NodeId)> = None;
    for &(a, b) in &candidates {
        let seg = Segment::from_endpoints(tree, a, b).expect("candidate endpoints form a chain");
        let sq = segment_value(tree, vector, oracle, &seg).sq();
        if best.is_none() || sq > best_sq {
            best_sq = sq;
            best = Some((a, b));
        }
    }
    let segment = best.map(|(a, b)| Segment::from_endpoints(tree, a, b).unwrap());
    Ok(T0Result {
        value: wrap_sq(oracle, best_sq),
        segment,
    })
}

// ---------------------------------------------------------------------------
// Skeleton: preorder view of the ancestor closure of a support superset
// ---------------------------------------------------------------------------

struct Skeleton {
    /// Skeleton node ids, ascending (for id -> position lookups).
    by_id: Vec<NodeId>,
    /// Preorder position of `by_id[i]`.
    pos_of: Vec<u32>,
    /// Preorder position -> node id.
    node_at: Vec<NodeId>,
    /// Preorder position -> depth in the underlying tree.
    depth_at: Vec<u32>,
    /// Preorder position -> skeleton subtree size; subtrees are the
    /// contiguous ranges [p, p + size[p]).
    size: Vec<u32>,
    root_positions: Vec<u32>,
}

impl Skeleton {
    fn len(&self) -> usize {
        self.node_at.len()
    }

    fn position(&self, v: NodeId) -> Option<u32> {
        self.by_id
            .binary_search(&v)
            .ok()
            .map(|i| self.pos_of[i])
    }

    fn build(tree: &FiniteTree, superset: impl Iterator<Item = NodeId>) -> Result<Skeleton, TreeError> {
        let mut marked = vec![false; tree.len()];
        let mut ids: Vec<NodeId> = Vec::new();
        for v in superset {
            tree.check_node(v)?;
            let mut w = v;
            loop {
                if marked[w as usize] {
                    break;
                }
                marked[w as usize] = true;
                ids.push(w);
                match tree.parent(w) {
                    Some(p) => w = p,
                    None => break,
                }
            }
        }
        drop(marked);
        ids.sort_unstable();
        let by_id = ids;
        let n = by_id.len();

        // Children in compressed (skeleton-index) space. Parents of skeleton
        // nodes are skeleton nodes by closure.
        let mut parent_of = vec![u32::MAX; n];
        let mut child_count = vec![0u32; n];
        let mut roots: Vec<u32> = Vec::new();
        for (i, &v) in by_id.iter().enumerate() {
            match tree.parent(v) {
                Some(p) => {
                    let pi = by_id
                        .binary_search(&p)
                        .expect("ancestor closure contains every parent")
                        as u32;
                    parent_of[i] = pi;
                    child_count[pi as usize] += 1;
                }
                None => roots.push(i as u32),
            }
        }
        let mut child_start = vec![0u32; n + 1];
        for i in 0..n {
            child_start[i + 1] = child_start[i] + child_count[i];
        }
        let mut cursor = child_start.clone();
        let mut child_list = vec![0u32; n.saturating_sub(roots.len())];
        for i in 0..n as u32 {
            let p = parent_of[i as usize];
            if p != u32::MAX {
                child_list[cursor[p as usize] as usize] = i;
                cursor[p as usize] += 1;
            }
        }

        // Preorder walk, children in ascending id order.
        let mut pos_of = vec![0u32; n];
        let mut node_at = Vec::with_capacity(n);
        let mut depth_at = Vec::with_capacity(n);
        let mut size = vec![0u32; n];
        let mut root_positions = Vec::with_capacity(roots.len());
        let mut stack: Vec<(u32, u32, u32)> = Vec::new(); // (index, preorder pos, child cursor)
        for &r in &roots {
            root_positions.push(node_at.len() as u32);
            stack.push((r, node_at.len() as u32, child_start[r as usize]));
            pos_of[r as usize] = node_at.len() as u32;
            node_at.push(by_id[r as usize]);
            depth_at.push(tree.depth(by_id[r as usize]));
            while let Some(top) = stack.last_mut() {
                let i = top.0 as usize;
                if top.2 < child_start[i + 1] {
                    let c = child_list[top.2 as usize];
                    top.2 += 1;
                    let cpos = node_at.len() as u32;
                    stack.push((c, cpos, child_start[c as usize]));
                    pos_of[c as usize] = cpos;
                    node_at.push(by_id[c as usize]);
                    depth_at.push(tree.depth(by_id[c as usize]));
                } else {
                    let pos = top.1;
                    size[pos as usize] = node_at.len() as u32 - pos;
                    stack.pop();
                }
            }
        }

        Ok(Skeleton {
            by_id,
            pos_of,
            node_at,
            depth_at,
            size,
            root_positions,
        })
    }
}

// ---------------------------------------------------------------------------
// Generic one-pass solver over a skeleton
// ---------------------------------------------------------------------------

/// Arithmetic backend of the one-pass solver: streaming branch accumulation
/// plus ordered nonnegative objective values that add.
trait DpKernel {
    type Coeff;
    type Val: Clone + Ord;
    type Acc;
    fn zero(&self) -> Self::Val;
    fn add_assign(&self, a: &mut Self::Val, b: &Self::Val);
    fn acc_new(&self) -> Self::Acc;
    fn acc_push(&self, acc: &mut Self::Acc, depth: u32, coeff: &Self::Coeff);
    fn acc_pop(&self, acc: &mut Self::Acc);
    fn acc_sq(&self, acc: &Self::Acc) -> Self::Val;
}

struct RationalKernel<'a> {
    oracle: &'a dyn BranchNormOracle,
}

impl DpKernel for RationalKernel<'_> {
    type Coeff = BigRational;
    type Val = BigRational;
    type Acc = Box<dyn BranchAccumulator>;

    fn zero(&self) -> BigRational {
        BigRational::zero()
    }
    fn add_assign(&self, a: &mut BigRational, b: &BigRational) {
        *a = &*a + b;
    }
    fn acc_new(&self) -> Self::Acc {
        self.oracle
            .accumulator()
            .expect("accumulator support is checked at evaluator construction")
    }
    fn acc_push(&self, acc: &mut Self::Acc, depth: u32, coeff: &BigRational) {
        acc.push(depth, coeff);
    }
    fn acc_pop(&self, acc: &mut Self::Acc) {
        acc.pop();
    }
    fn acc_sq(&self, acc: &Self::Acc) -> BigRational {
        acc.value().sq()
    }
}

/// Machine-integer backend; callers must keep |coeff| <= INT_COEFF_LIMIT.
struct MachineKernel {
    kind: IntegerKernel,
}

impl DpKernel for MachineKernel {
    type Coeff = i64;
    type Val = i128;
    type Acc = Vec<i128>;

    fn zero(&self) -> i128 {
        0
    }
    fn add_assign(&self, a: &mut i128, b: &i128) {
        *a += *b;
    }
    fn acc_new(&self) -> Vec<i128> {
        Vec::new()
    }
    fn acc_push(&self, acc: &mut Vec<i128>, _depth: u32, coeff: &i64) {
        let prev = acc.last().copied().unwrap_or(0);
        let c = coeff.unsigned_abs() as i128;
        let next = match self.kind {
            IntegerKernel::MaxAbs => prev.max(c),
            IntegerKernel::SumSquares => prev + c * c,
        };
        acc.push(next);
    }
    fn acc_pop(&self, acc: &mut Vec<i128>) {
        acc.pop().expect("pop without matching push");
    }
    fn acc_sq(&self, acc: &Vec<i128>) -> i128 {
        let s = acc.last().copied().unwrap_or(0);
        match self.kind {
            IntegerKernel::MaxAbs => s * s,
            IntegerKernel::SumSquares => s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DpChoice {
    Empty,
    Children,
    Path(u32),
}

struct WalkResult<V> {
    dp_total: V,
    /// (squared value, owner position, end position) of the best single
    /// segment; None when no support was seen.
    t0_best: Option<(V, u32, u32)>,
    /// Per-position backpointers when requested, else empty.
    choices: Vec<DpChoice>,
}

struct OpenAcc<K: DpKernel> {
    owner: u32,
    acc: K::Acc,
    best: Option<(K::Val, u32)>,
}

fn enter_node<K: DpKernel>(
    skel: &Skeleton,
    entries: &[(u32, K::Coeff)],
    kernel: &K,
    pos: u32,
    idx: &mut usize,
    open: &mut Vec<OpenAcc<K>>,
    frames: &mut Vec<Frame<K::Val>>,
    t0_best: &mut Option<(K::Val, u32, u32)>,
) {
    let mut pushed = false;
    if *idx < entries.len() && entries[*idx].0 == pos {
        let depth = skel.depth_at[pos as usize];
        let coeff = &entries[*idx].1;
        *idx += 1;
        for o in open.iter_mut() {
            kernel.acc_push(&mut o.acc, depth, coeff);
        }
        let mut acc = kernel.acc_new();
        kernel.acc_push(&mut acc, depth, coeff);
        open.push(OpenAcc {
            owner: pos,
            acc,
            best: None,
        });
        // Every open accumulator now holds a segment ending here; sample
        // them for the per-owner and the global single-segment maxima.
        for o in open.iter_mut() {
            let sq = kernel.acc_sq(&o.acc);
            if o.best.as_ref().map_or(true, |(b, _)| sq > *b) {
                o.best = Some((sq.clone(), pos));
            }
            if t0_best.as_ref().map_or(true, |(b, _, _)| sq > *b) {
                *t0_best = Some((sq, o.owner, pos));
            }
        }
        pushed = true;
    }
    frames.push(Frame {
        pos,
        next_child: pos + 1,
        kids: kernel.zero(),
        pushed,
    });
}

struct Frame<V> {
    pos: u32,
    next_child: u32,
    kids: V,
    pushed: bool,
}

fn dp_walk<K: DpKernel>(
    skel: &Skeleton,
    entries: &[(u32, K::Coeff)],
    kernel: &K,
    want_choices: bool,
) -> WalkResult<K::Val> {
    debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
    let mut choices = if want_choices {
        vec![DpChoice::Empty; skel.len()]
    } else {
        Vec::new()
    };
    let zero = kernel.zero();
    let mut dp_total = kernel.zero();
    let mut t0_best: Option<(K::Val, u32, u32)> = None;
    let mut idx = 0usize;
    let mut frames: Vec<Frame<K::Val>> = Vec::new();
    let mut open: Vec<OpenAcc<K>> = Vec::new();

    for &root in &skel.root_positions {
        let end = root + skel.size[root as usize];
        if !(idx < entries.len() && entries[idx].0 < end) {
            continue; // no support in this component
        }
        enter_node(skel, entries, kernel, root, &mut idx, &mut open, &mut frames, &mut t0_best);
        while !frames.is_empty() {
            let descend = {
                let top = frames.last_mut().unwrap();
                let limit = top.pos + skel.size[top.pos as usize];
                let mut c = top.next_child;
                let mut found = None;
                // Jump over child subtrees containing no remaining support.
                while c < limit {
                    let csz = skel.size[c as usize];
                    if idx < entries.len() && entries[idx].0 < c + csz {
                        found = Some(c);
                        top.next_child = c + csz;
                        break;
                    }
                    c += csz;
                }
                if found.is_none() {
                    top.next_child = limit;
                }
                found
            };
            match descend {
                Some(c) => {
                    enter_node(skel, entries, kernel, c, &mut idx, &mut open, &mut frames, &mut t0_best);
                }
                None => {
                    let f = frames.pop().unwrap();
                    let path = if f.pushed {
                        let own = open.pop().expect("open stack mirrors supported frames");
                        debug_assert_eq!(own.owner, f.pos);
                        for o in open.iter_mut() {
                            kernel.acc_pop(&mut o.acc);
                        }
                        own.best
                    } else {
                        None
                    };
                    let (best, choice) = match path {
                        Some((pval, pend)) if pval >= f.kids && pval > zero => {
                            (pval, DpChoice::Path(pend))
                        }
                        _ => {
                            if f.kids > zero {
                                (f.kids, DpChoice::Children)
                            } else {
                                (zero.clone(), DpChoice::Empty)
                            }
                        }
                    };
                    if want_choices {
                        choices[f.pos as usize] = choice;
                    }
                    match frames.last_mut() {
                        Some(parent) => kernel.add_assign(&mut parent.kids, &best),
                        None => kernel.add_assign(&mut dp_total, &best),
                    }
                }
            }
        }
        debug_assert!(open.is_empty());
    }
    debug_assert_eq!(idx, entries.len(), "all support consumed");

    WalkResult {
        dp_total,
        t0_best,
        choices,
    }
}

// ---------------------------------------------------------------------------
// Evaluator
// ---------------------------------------------------------------------------

/// Both norms of one vector, with optional attaining witnesses.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub t2: ValueSq,
    pub t0: ValueSq,
    pub t2_family: Option<SegmentFamily>,
    pub t0_segment: Option<Segment>,
}

/// One-pass solver bound to a tree, a branch model, and a fixed superset of
/// future supports. Building the skeleton once and evaluating many vectors
/// against it is the intended use for sampling loops.
pub struct Evaluator<'t> {
    tree: &'t FiniteTree,
    oracle: &'t dyn BranchNormOracle,
    skel: Skeleton,
}

impl<'t> Evaluator<'t> {
    pub fn new(
        tree: &'t FiniteTree,
        oracle: &'t dyn BranchNormOracle,
        support_superset: impl IntoIterator<Item = NodeId>,
    ) -> Result<Evaluator<'t>, EngineError> {
        if oracle.accumulator().is_none() {
            return Err(EngineError::AccumulatorMissing {
                oracle: oracle.name(),
            });
        }
        Ok(Evaluator {
            tree,
            oracle,
            skel: Skeleton::build(tree, support_superset.into_iter())?,
        })
    }

    pub fn tree(&self) -> &'t FiniteTree {
        self.tree
    }

    /// Number of nodes in the cached skeleton.
    pub fn skeleton_len(&self) -> usize {
        self.skel.len()
    }

    /// Evaluates both norms of `vector`, whose support must lie inside the
    /// superset given at construction.
    pub fn evaluate(
        &self,
        vector: &TreeVector,
        want_witness: bool,
    ) -> Result<Evaluation, EngineError> {
        if vector.is_zero() {
            return Ok(Evaluation {
                t2: ValueSq::zero_exact(),
                t0: ValueSq::zero_exact(),
                t2_family: want_witness.then(SegmentFamily::empty),
                t0_segment: None,
            });
        }
        let mut mapped: Vec<(u32, &BigRational)> = Vec::with_capacity(vector.support_len());
        for (v, c) in vector.iter() {
            let pos = self
                .skel
                .position(v)
                .ok_or(EngineError::SupportOutsideSkeleton { node: v })?;
            mapped.push((pos, c));
        }
        mapped.sort_unstable_by_key(|&(p, _)| p);

        if self.oracle.is_exact() {
            // Clear denominators; exact homogeneity lets us divide back out.
            let den = denominator_lcm(vector.iter().map(|(_, c)| c));
            let den_ratio = BigRational::from(den.clone());
            let scaled: Vec<(u32, BigInt)> = mapped
                .iter()
                .map(|&(p, c)| (p, (c * &den_ratio).to_integer()))
                .collect();
            let den_sq = &den * &den;

            let fits = self.oracle.integer_kernel().is_some()
                && scaled.iter().all(|(_, c)| {
                    c.to_i64()
                        .map_or(false, |x| x.abs() <= INT_COEFF_LIMIT)
                });
            if fits {
                let kernel = MachineKernel {
                    kind: self.oracle.integer_kernel().unwrap(),
                };
                let entries: Vec<(u32, i64)> = scaled
                    .iter()
                    .map(|(p, c)| (*p, c.to_i64().unwrap()))
                    .collect();
                let walk = dp_walk(&self.skel, &entries, &kernel, want_witness);
                return Ok(self.package(
                    BigRational::new(BigInt::from(walk.dp_total), den_sq.clone()),
                    walk.t0_best
                        .map(|(v, o, e)| (BigRational::new(BigInt::from(v), den_sq), o, e)),
                    walk.choices,
                    want_witness,
                ));
            }

            let kernel = RationalKernel { oracle: self.oracle };
            let entries: Vec<(u32, BigRational)> = scaled
                .into_iter()
                .map(|(p, c)| (p, BigRational::from(c)))
                .collect();
            let walk = dp_walk(&self.skel, &entries, &kernel, want_witness);
            let den_sq_ratio = BigRational::from(den_sq);
            return Ok(self.package(
                walk.dp_total / &den_sq_ratio,
                walk.t0_best.map(|(v, o, e)| (v / &den_sq_ratio, o, e)),
                walk.choices,
                want_witness,
            ));
        }

        let kernel = RationalKernel { oracle: self.oracle };
        let entries: Vec<(u32, BigRational)> =
            mapped.iter().map(|&(p, c)| (p, c.clone())).collect();
        let walk = dp_walk(&self.skel, &entries, &kernel, want_witness);
        Ok(self.package(
            walk.dp_total,
            walk.t0_best,
            walk.choices,
            want_witness,
        ))
    }

    fn package(
        &self,
        t2_sq: BigRational,
        t0_best: Option<(BigRational, u32, u32)>,
        choices: Vec<DpChoice>,
        want_witness: bool,
    ) -> Evaluation {
        let t0_sq = t0_best
            .as_ref()
            .map(|(v, _, _)| v.clone())
            .unwrap_or_else(BigRational::zero);
        let t0_segment = if want_witness {
            t0_best.map(|(_, o, e)| {
                Segment::from_endpoints(
                    self.tree,
                    self.skel.node_at[o as usize],
                    self.skel.node_at[e as usize],
                )
                .expect("sampled owner is an ancestor of the endpoint")
            })
        } else {
            None
        };
        let t2_family = want_witness.then(|| self.family_from_choices(&choices));
        Evaluation {
            t2: wrap_sq(self.oracle, t2_sq),
            t0: wrap_sq(self.oracle, t0_sq),
            t2_family,
            t0_segment,
        }
    }

    fn family_from_choices(&self, choices: &[DpChoice]) -> SegmentFamily {
        let mut segments: Vec<Segment> = Vec::new();
        let mut stack: Vec<u32> = self.skel.root_positions.clone();
        while let Some(pos) = stack.pop() {
            match choices[pos as usize] {
                DpChoice::Empty => {}
                DpChoice::Path(end) => {
                    segments.push(
                        Segment::from_endpoints(
                            self.tree,
                            self.skel.node_at[pos as usize],
                            self.skel.node_at[end as usize],
                        )
                        .expect("backpointer endpoints form a chain"),
                    );
                }
                DpChoice::Children => {
                    let limit = pos + self.skel.size[pos as usize];
                    let mut c = pos + 1;
                    while c < limit {
                        stack.push(c);
                        c += self.skel.size[c as usize];
                    }
                }
            }
        }
        segments.sort_unstable_by_key(Segment::min);
        SegmentFamily::from_sorted_unchecked(segments)
    }

    /// Preorder position of a node inside the cached skeleton.
    pub(crate) fn position_of(&self, v: NodeId) -> Option<u32> {
        self.skel.position(v)
    }

    /// Fast trial evaluation: integer coefficients `c * den` at
    /// pre-mapped, position-sorted entries, with |coeff| bounded by the
    /// machine limit. Returns (t2, t0); None when the model offers no
    /// integer kernel.
    pub(crate) fn eval_int_positions(
        &self,
        entries: &[(u32, i64)],
        den: &BigInt,
    ) -> Option<(ValueSq, ValueSq)> {
        let kind = self.oracle.integer_kernel()?;
        if entries.is_empty() {
            return Some((ValueSq::zero_exact(), ValueSq::zero_exact()));
        }
        debug_assert!(entries.iter().all(|&(_, c)| c != 0 && c.abs() <= INT_COEFF_LIMIT));
        let kernel = MachineKernel { kind };
        let walk = dp_walk(&self.skel, entries, &kernel, false);
        let den_sq = den * den;
        let t0 = walk
            .t0_best
            .map(|(v, _, _)| BigRational::new(BigInt::from(v), den_sq.clone()))
            .unwrap_or_else(BigRational::zero);
        Some((
            ValueSq::from_exact_sq(BigRational::new(BigInt::from(walk.dp_total), den_sq)),
            ValueSq::from_exact_sq(t0),
        ))
    }

    /// Trial evaluation with rational coefficients at pre-mapped,
    /// position-sorted entries. Returns (t2, t0).
    pub(crate) fn eval_rational_positions(
        &self,
        entries: &[(u32, BigRational)],
    ) -> (ValueSq, ValueSq) {
        if entries.is_empty() {
            return (ValueSq::zero_exact(), ValueSq::zero_exact());
        }
        let kernel = RationalKernel { oracle: self.oracle };
        let walk = dp_walk(&self.skel, entries, &kernel, false);
        let t0 = walk
            .t0_best
            .map(|(v, _, _)| v)
            .unwrap_or_else(BigRational::zero);
        (
            wrap_sq(self.oracle, walk.dp_total),
            wrap_sq(self.oracle, t0),
        )
    }
}

// ---------------------------------------------------------------------------
// Front-door functions
// ---------------------------------------------------------------------------

/// Family norm by the one-pass subtree solver, with an attaining family.
pub fn t2_norm(
    tree: &FiniteTree,
    vector: &TreeVector,
    oracle: &dyn BranchNormOracle,
) -> Result<T2Result, EngineError> {
    let ev = Evaluator::new(tree, oracle, vector.support())?;
    let out = ev.evaluate(vector, true)?;
    Ok(T2Result {
        value: out.t2,
        family: out.t2_family.expect("witness requested"),
    })
}

/// Segment norm with an attaining segment. Falls back to pairwise direct
/// evaluation for models without streaming support.
pub fn t0_norm(
    tree: &FiniteTree,
    vector: &TreeVector,
    oracle: &dyn BranchNormOracle,
) -> Result<T0Result, EngineError> {
    match Evaluator::new(tree, oracle, vector.support()) {
        Ok(ev) => {
            let out = ev.evaluate(vector, true)?;
            Ok(T0Result {
                value: out.t0,
                segment: out.t0_segment,
            })
        }
        Err(EngineError::AccumulatorMissing { .. }) => t0_norm_bruteforce(tree, vector, oracle),
        Err(e) => Err(e),
    }
}

/// Both norms in one pass (no witnesses).
pub fn norm_pair(
    tree: &FiniteTree,
    vector: &TreeVector,
    oracle: &dyn BranchNormOracle,
) -> Result<(ValueSq, ValueSq), EngineError> {
    let ev = Evaluator::new(tree, oracle, vector.support())?;
    let out = ev.evaluate(vector, false)?;
    Ok((out.t2, out.t0))
}
