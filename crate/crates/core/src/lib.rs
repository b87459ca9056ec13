//! Exact evaluation of the two tree norms built over a branch model: the
//! family norm (l2-sums over pairwise incomparable segments) and the
//! segment norm (single-segment suprema), for finitely supported rational
//! vectors indexed by the nodes of a finite forest.
//!
//! The crate is organized bottom-up:
//!
//! * [`numeric`] — rational parsing/formatting, integer roots, dyadic
//!   fixed-point rounding, decimal rendering;
//! * [`tree`] — finite forests in CSR form, depth/ancestry queries,
//!   generators, breadth-first enumerations;
//! * [`segment`] — segments, incomparability, canonical families,
//!   enumeration intervals;
//! * [`forest_enum`] — exhaustive enumeration of small rooted forests up to
//!   isomorphism, for exhaustive differential tests;
//! * [`vector`] — sparse rational coefficient vectors;
//! * [`oracle`] — branch norm models (c0 and lp spreading) plus an axiom
//!   validator;
//! * [`norm`] — the two solvers (one-pass subtree solver and budgeted
//!   brute force) with attaining witnesses.

pub mod cert;
pub mod fileio;
pub mod forest_enum;
pub mod norm;
pub mod numeric;
pub mod project;
pub mod oracle;
pub mod segment;
pub mod tree;
pub mod vector;
