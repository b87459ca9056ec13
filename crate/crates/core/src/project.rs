//! Coordinate projections onto segments, branches, and enumeration intervals.
//!
//! Projections act purely on coefficient data and are norm-agnostic: they
//! keep or drop entries of a [`TreeVector`] and never touch an oracle. All
//! norm-level statements about them (contractivity, bi-monotonicity) are
//! phrased through the norm engine and checked in tests.

use thiserror::Error;

use crate::segment::{Branch, RangeInterval, Segment};
use crate::tree::NodeEnumeration;
use crate::vector::TreeVector;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProjectError {
    /// The operation needs a nonzero vector (e.g. the range of the zero
    /// vector is undefined: there is no minimal covering interval).
    #[error("operation undefined for the zero vector")]
    EmptyVector,
}

/// Projection onto a segment: keep coefficients on the segment's nodes,
/// zero elsewhere.
pub fn project_segment(z: &TreeVector, seg: &Segment) -> TreeVector {
    z.restrict_to_segment(seg)
}

/// Projection onto a branch (the root-to-node path it represents).
pub fn project_branch(z: &TreeVector, branch: &Branch) -> TreeVector {
    project_segment(z, branch.segment())
}

/// Projection onto an enumeration interval: keep coefficients whose
/// enumeration position lies in `interval`.
pub fn project_interval(
    z: &TreeVector,
    enumeration: &NodeEnumeration,
    interval: RangeInterval,
) -> TreeVector {
    z.restrict(|v| interval.contains(enumeration.position(v)))
}

/// The minimal enumeration interval covering the support of `z`.
pub fn range_of(z: &TreeVector, enumeration: &NodeEnumeration) -> Result<RangeInterval, ProjectError> {
    let mut lo = u32::MAX;
    let mut hi = 0u32;
    for v in z.support() {
        let p = enumeration.position(v);
        lo = lo.min(p);
        hi = hi.max(p);
    }
    if z.is_zero() {
        return Err(ProjectError::EmptyVector);
    }
    Ok(RangeInterval::new(lo, hi))
}
