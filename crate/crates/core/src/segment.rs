//! Segments: order-convex chains inside a forest, the index sets over which
//! branch norms are taken. Two segments are incomparable exactly when their
//! minimal nodes are incomparable, which makes antichains of minima the
//! combinatorial core of every family enumeration.

use crate::tree::{bfs_enumeration, FiniteTree, NodeEnumeration, NodeId, TreeError};

/// Contiguous ancestor-to-descendant chain, stored top to bottom. Nonempty.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Segment {
    nodes: Vec<NodeId>,
}

impl Segment {
    /// Validates that `nodes` lists a chain of consecutive parent-child
    /// links from an ancestor down to a descendant.
    pub fn new(tree: &FiniteTree, nodes: Vec<NodeId>) -> Result<Segment, TreeError> {
        if nodes.is_empty() {
            return Err(TreeError::EmptySegment);
        }
        for &v in &nodes {
            tree.check_node(v)?;
        }
        for w in nodes.windows(2) {
            if tree.parent(w[1]) != Some(w[0]) {
                return Err(TreeError::NotASegment { node: w[1] });
            }
        }
        Ok(Segment { nodes })
    }

    pub fn singleton(tree: &FiniteTree, v: NodeId) -> Result<Segment, TreeError> {
        tree.check_node(v)?;
        Ok(Segment { nodes: vec![v] })
    }

    /// The chain from `top` down to `bottom`; errors when the endpoints are
    /// incomparable or ordered the wrong way round.
    pub fn from_endpoints(
        tree: &FiniteTree,
        top: NodeId,
        bottom: NodeId,
    ) -> Result<Segment, TreeError> {
        tree.check_node(top)?;
        tree.check_node(bottom)?;
        if !tree.is_ancestor_or_equal(top, bottom) {
            return Err(TreeError::NotAChain { a: top, b: bottom });
        }
        let mut nodes = Vec::with_capacity((tree.depth(bottom) - tree.depth(top) + 1) as usize);
        let mut w = bottom;
        loop {
            nodes.push(w);
            if w == top {
                break;
            }
            w = tree.parent(w).expect("ancestor walk cannot leave the tree");
        }
        nodes.reverse();
        Ok(Segment { nodes })
    }

    /// Minimal node (the top endpoint).
    pub fn min(&self) -> NodeId {
        self.nodes[0]
    }

    /// Maximal node (the bottom endpoint).
    pub fn max(&self) -> NodeId {
        *self.nodes.last().unwrap()
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.nodes.contains(&v)
    }
}

/// Segment from the convex hull of an arbitrary chain of nodes: sorts by
/// depth, verifies pairwise comparability, and fills in the interior.
pub fn convex_hull_segment(tree: &FiniteTree, chain: &[NodeId]) -> Result<Segment, TreeError> {
    if chain.is_empty() {
        return Err(TreeError::EmptySegment);
    }
    for &v in chain {
        tree.check_node(v)?;
    }
    let mut sorted = chain.to_vec();
    sorted.sort_by_key(|&v| (tree.depth(v), v));
    sorted.dedup();
    let top = sorted[0];
    let bottom = *sorted.last().unwrap();
    // Equal-depth distinct nodes are never comparable.
    for w in sorted.windows(2) {
        if tree.depth(w[0]) == tree.depth(w[1]) {
            return Err(TreeError::NotAChain { a: w[0], b: w[1] });
        }
    }
    let seg = Segment::from_endpoints(tree, top, bottom)?;
    for &v in &sorted {
        if !seg.contains(v) {
            // v is comparable to neither endpoint's branch.
            return Err(TreeError::NotAChain { a: top, b: v });
        }
    }
    Ok(seg)
}

/// Closed position interval [lo, hi] of an enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RangeInterval {
    pub lo: u32,
    pub hi: u32,
}

impl RangeInterval {
    pub fn new(lo: u32, hi: u32) -> RangeInterval {
        assert!(lo <= hi, "interval endpoints out of order");
        RangeInterval { lo, hi }
    }

    pub fn contains(&self, p: u32) -> bool {
        self.lo <= p && p <= self.hi
    }

    pub fn len(&self) -> u64 {
        (self.hi - self.lo) as u64 + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Intersection of a segment with an enumeration interval. For any
/// order-compatible enumeration the intersection is again a segment (or
/// empty): positions increase strictly along the chain, so the surviving
/// nodes form a contiguous run.
pub fn restrict_segment(
    seg: &Segment,
    enumeration: &NodeEnumeration,
    interval: RangeInterval,
) -> Option<Segment> {
    let keep: Vec<NodeId> = seg
        .nodes()
        .iter()
        .copied()
        .filter(|&v| interval.contains(enumeration.position(v)))
        .collect();
    if keep.is_empty() {
        return None;
    }
    debug_assert!(
        keep.windows(2)
            .all(|w| seg.nodes().windows(2).any(|s| s == w)),
        "interval restriction must stay contiguous in the chain"
    );
    Some(Segment { nodes: keep })
}

/// Family of pairwise incomparable segments, canonically sorted by minimal
/// node id. May be empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentFamily {
    segments: Vec<Segment>,
}

impl SegmentFamily {
    pub fn empty() -> SegmentFamily {
        SegmentFamily { segments: Vec::new() }
    }

    /// Validates pairwise incomparability (equivalently, that the minimal
    /// nodes form an antichain) and sorts by minimal node id.
    pub fn new(tree: &FiniteTree, mut segments: Vec<Segment>) -> Result<SegmentFamily, TreeError> {
        segments.sort_by_key(Segment::min);
        for pair in segments.windows(2) {
            if pair[0].min() == pair[1].min() {
                return Err(TreeError::ComparableSegments {
                    a: pair[0].min(),
                    b: pair[1].min(),
                });
            }
        }
        for i in 0..segments.len() {
            for j in i + 1..segments.len() {
                if tree.comparable(segments[i].min(), segments[j].min()) {
                    return Err(TreeError::ComparableSegments {
                        a: segments[i].min(),
                        b: segments[j].min(),
                    });
                }
            }
        }
        Ok(SegmentFamily { segments })
    }

    pub(crate) fn from_sorted_unchecked(segments: Vec<Segment>) -> SegmentFamily {
        debug_assert!(segments.windows(2).all(|w| w[0].min() < w[1].min()));
        SegmentFamily { segments }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Node lists of the member segments, for serialization.
    pub fn node_lists(&self) -> Vec<Vec<NodeId>> {
        self.segments.iter().map(|s| s.nodes().to_vec()).collect()
    }
}

/// Whether two segments are incomparable: no node of one is comparable to
/// any node of the other, equivalently their minima are incomparable.
pub fn segments_incomparable(tree: &FiniteTree, a: &Segment, b: &Segment) -> bool {
    !tree.comparable(a.min(), b.min())
}

/// Initial chain from a minimal node down to `v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branch {
    segment: Segment,
}

impl Branch {
    /// The branch through `v`, from its minimal ancestor down to `v`.
    pub fn to_node(tree: &FiniteTree, v: NodeId) -> Result<Branch, TreeError> {
        tree.check_node(v)?;
        let nodes = tree.path_from_root(v);
        Ok(Branch {
            segment: Segment { nodes },
        })
    }

    pub fn segment(&self) -> &Segment {
        &self.segment
    }
}

/// Positions occupied by a segment under the breadth-first enumeration,
/// mostly a testing aid for order-compatibility facts.
pub fn segment_positions(tree: &FiniteTree, seg: &Segment) -> Vec<u32> {
    let e = bfs_enumeration(tree);
    seg.nodes().iter().map(|&v| e.position(v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::bfs_enumeration;

    fn forest() -> FiniteTree {
        // 0 -> 1 -> 2, 0 -> 3, root 4 separate
        FiniteTree::build(&[None, Some(0), Some(1), Some(0), None]).unwrap()
    }

    #[test]
    fn segment_validation() {
        let t = forest();
        assert!(Segment::new(&t, vec![0, 1, 2]).is_ok());
        assert_eq!(
            Segment::new(&t, vec![0, 2]).unwrap_err(),
            TreeError::NotASegment { node: 2 },
            "skipping node 1 breaks contiguity"
        );
        assert_eq!(
            Segment::new(&t, vec![]).unwrap_err(),
            TreeError::EmptySegment
        );
        assert!(Segment::new(&t, vec![1, 0]).is_err(), "must run downward");
    }

    #[test]
    fn from_endpoints_fills_the_interior() {
        let t = forest();
        let s = Segment::from_endpoints(&t, 0, 2).unwrap();
        assert_eq!(s.nodes(), &[0, 1, 2]);
        assert_eq!(s.min(), 0);
        assert_eq!(s.max(), 2);
        assert!(Segment::from_endpoints(&t, 3, 2).is_err());
        assert!(Segment::from_endpoints(&t, 2, 0).is_err());
    }

    #[test]
    fn convex_hull_of_scattered_chain() {
        let t = forest();
        let s = convex_hull_segment(&t, &[2, 0]).unwrap();
        assert_eq!(s.nodes(), &[0, 1, 2]);
        let s = convex_hull_segment(&t, &[1]).unwrap();
        assert_eq!(s.nodes(), &[1]);
        assert_eq!(
            convex_hull_segment(&t, &[3, 2]).unwrap_err(),
            TreeError::NotAChain { a: 3, b: 2 },
            "3 is not an ancestor of 2"
        );
        assert!(convex_hull_segment(&t, &[3, 1]).is_err());
    }

    #[test]
    fn incomparability_goes_through_minima() {
        let t = forest();
        let a = Segment::from_endpoints(&t, 1, 2).unwrap();
        let b = Segment::singleton(&t, 3).unwrap();
        let c = Segment::singleton(&t, 4).unwrap();
        let root = Segment::singleton(&t, 0).unwrap();
        assert!(segments_incomparable(&t, &a, &b));
        assert!(segments_incomparable(&t, &a, &c));
        assert!(!segments_incomparable(&t, &root, &a));
        assert!(SegmentFamily::new(&t, vec![a.clone(), b, c]).is_ok());
        assert!(SegmentFamily::new(&t, vec![root, a]).is_err());
    }

    #[test]
    fn family_sorts_by_min_id() {
        let t = forest();
        let f = SegmentFamily::new(
            &t,
            vec![
                Segment::singleton(&t, 4).unwrap(),
                Segment::singleton(&t, 1).unwrap(),
                Segment::singleton(&t, 3).unwrap(),
            ],
        )
        .unwrap();
        let mins: Vec<NodeId> = f.segments().iter().map(Segment::min).collect();
        assert_eq!(mins, vec![1, 3, 4]);
    }

    #[test]
    fn restrict_keeps_a_contiguous_run() {
        let t = forest();
        let e = bfs_enumeration(&t);
        let s = Segment::from_endpoints(&t, 0, 2).unwrap();
        // BFS order: 0,4 | 1,3 | 2 -> positions 0:0, 1:2, 2:4
        assert_eq!(e.position(0), 0);
        assert_eq!(e.position(1), 2);
        assert_eq!(e.position(2), 4);
        let r = restrict_segment(&s, &e, RangeInterval::new(1, 4)).unwrap();
        assert_eq!(r.nodes(), &[1, 2]);
        let r = restrict_segment(&s, &e, RangeInterval::new(0, 0)).unwrap();
        assert_eq!(r.nodes(), &[0]);
        assert!(restrict_segment(&s, &e, RangeInterval::new(3, 3)).is_none());
    }

    #[test]
    fn branch_runs_from_a_minimal_node() {
        let t = forest();
        let b = Branch::to_node(&t, 2).unwrap();
        assert_eq!(b.segment().nodes(), &[0, 1, 2]);
        assert_eq!(t.depth(b.segment().min()), 1);
    }
}
