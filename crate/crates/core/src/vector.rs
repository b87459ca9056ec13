//! Finitely supported vectors over the node set, with exact rational
//! coefficients. Zero coefficients are never stored.

use crate::segment::Segment;
use crate::tree::NodeId;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VectorError {
    #[error("node {node} appears more than once")]
    DuplicateNode { node: NodeId },
}

/// Sparse vector: entries sorted by node id, all coefficients nonzero.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TreeVector {
    entries: Vec<(NodeId, BigRational)>,
}

impl TreeVector {
    pub fn zero() -> TreeVector {
        TreeVector::default()
    }

    /// Sorts by node id, drops zero coefficients, rejects duplicates.
    pub fn new(mut entries: Vec<(NodeId, BigRational)>) -> Result<TreeVector, VectorError> {
        entries.retain(|(_, c)| !c.is_zero());
        entries.sort_by_key(|&(v, _)| v);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(VectorError::DuplicateNode { node: w[0].0 });
            }
        }
        Ok(TreeVector { entries })
    }

    pub fn from_pairs(pairs: &[(NodeId, i64, i64)]) -> Result<TreeVector, VectorError> {
        TreeVector::new(
            pairs
                .iter()
                .map(|&(v, n, d)| (v, crate::numeric::rat(n, d)))
                .collect(),
        )
    }

    pub fn coeff(&self, v: NodeId) -> Option<&BigRational> {
        self.entries
            .binary_search_by_key(&v, |&(u, _)| u)
            .ok()
            .map(|i| &self.entries[i].1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &BigRational)> {
        self.entries.iter().map(|(v, c)| (*v, c))
    }

    /// Support in ascending node id order.
    pub fn support(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.entries.iter().map(|&(v, _)| v)
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_node(&self) -> Option<NodeId> {
        self.entries.last().map(|&(v, _)| v)
    }

    pub fn scale(&self, factor: &BigRational) -> TreeVector {
        if factor.is_zero() {
            return TreeVector::zero();
        }
        TreeVector {
            entries: self
                .entries
                .iter()
                .map(|(v, c)| (*v, c * factor))
                .collect(),
        }
    }

    pub fn add(&self, other: &TreeVector) -> TreeVector {
        let mut entries = Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut i, mut j) = (0, 0);
        while i < self.entries.len() && j < other.entries.len() {
            let (u, a) = &self.entries[i];
            let (v, b) = &other.entries[j];
            match u.cmp(v) {
                std::cmp::Ordering::Less => {
                    entries.push((*u, a.clone()));
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    entries.push((*v, b.clone()));
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let s = a + b;
                    if !s.is_zero() {
                        entries.push((*u, s));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        entries.extend(self.entries[i..].iter().cloned());
        entries.extend(other.entries[j..].iter().cloned());
        TreeVector { entries }
    }

    /// Entries whose node satisfies the predicate.
    pub fn restrict(&self, keep: impl Fn(NodeId) -> bool) -> TreeVector {
        TreeVector {
            entries: self
                .entries
                .iter()
                .filter(|&&(v, _)| keep(v))
                .cloned()
                .collect(),
        }
    }

    /// Restriction to the nodes of a segment.
    pub fn restrict_to_segment(&self, seg: &Segment) -> TreeVector {
        self.restrict(|v| seg.contains(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;

    #[test]
    fn zeros_are_dropped_and_duplicates_rejected() {
        let v = TreeVector::from_pairs(&[(3, 0, 1), (1, 2, 1)]).unwrap();
        assert_eq!(v.support_len(), 1);
        assert_eq!(v.coeff(1), Some(&rat(2, 1)));
        assert_eq!(v.coeff(3), None);
        assert_eq!(
            TreeVector::from_pairs(&[(1, 1, 1), (1, 2, 1)]).unwrap_err(),
            VectorError::DuplicateNode { node: 1 }
        );
    }

    #[test]
    fn add_merges_and_cancels() {
        let a = TreeVector::from_pairs(&[(0, 1, 2), (2, 3, 1)]).unwrap();
        let b = TreeVector::from_pairs(&[(0, -1, 2), (1, 1, 1)]).unwrap();
        let s = a.add(&b);
        assert_eq!(s.coeff(0), None, "1/2 + -1/2 cancels");
        assert_eq!(s.coeff(1), Some(&rat(1, 1)));
        assert_eq!(s.coeff(2), Some(&rat(3, 1)));
    }

    #[test]
    fn scale_by_zero_gives_the_zero_vector() {
        let a = TreeVector::from_pairs(&[(0, 1, 2)]).unwrap();
        assert!(a.scale(&rat(0, 1)).is_zero());
        assert_eq!(a.scale(&rat(2, 1)).coeff(0), Some(&rat(1, 1)));
    }
}
