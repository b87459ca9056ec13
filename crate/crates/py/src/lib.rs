//! Python bindings for the bairesum library.
//!
//! Exposes finite rooted forests, finitely supported rational vectors, the
//! two tree norms (family and segment), interval projections, the
//! small-segment-norm witness search, and the block-sequence certificates.
//! All rationals cross the boundary as `"num/den"` strings so nothing is
//! rounded; every result dict also carries a 12-digit decimal approximation
//! of the square root for convenience.

use std::fmt::Display;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use bairesum::cert::{
    check_block, check_decay, forge_decaying_sequence, singular_witness as witness_search,
    unconditionality_sample, upper_l2_sample as upper_l2_search, BlockSequence,
};
use bairesum::norm::{t0_norm, t2_norm};
use bairesum::numeric::{decimal_sqrt_string, format_ratio, ValueSq};
use bairesum::oracle::{oracle_for_selector, BranchNormOracle};
use bairesum::project::project_interval as project_interval_core;
use bairesum::segment::RangeInterval;
use bairesum::tree::{bfs_enumeration, FiniteTree, NodeId};
use bairesum::vector::TreeVector;

const APPROX_DIGITS: u32 = 12;

fn perr(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Parse `"num/den"` or a bare integer string into an exact rational.
fn parse_ratio(s: &str) -> PyResult<BigRational> {
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let num = BigInt::from_str(num)
        .map_err(|_| perr(format!("expected an integer or num/den ratio, got `{s}`")))?;
    let den = BigInt::from_str(den)
        .map_err(|_| perr(format!("expected an integer or num/den ratio, got `{s}`")))?;
    if den == BigInt::from(0) {
        return Err(perr(format!("zero denominator in `{s}`")));
    }
    Ok(BigRational::new(num, den))
}

fn oracle(basis: &str) -> PyResult<Box<dyn BranchNormOracle>> {
    oracle_for_selector(basis).map_err(perr)
}

fn put_value_sq(d: &Bound<'_, PyDict>, prefix: &str, v: &ValueSq) -> PyResult<()> {
    if v.exact {
        d.set_item(format!("{prefix}_sq"), format_ratio(&v.sq))?;
    } else {
        d.set_item(format!("{prefix}_sq"), Option::<String>::None)?;
    }
    d.set_item(
        format!("{prefix}_approx"),
        decimal_sqrt_string(&v.sq, APPROX_DIGITS),
    )?;
    Ok(())
}

/// A finite rooted forest with nodes `0..len`, each node at most one parent.
#[pyclass(module = "bairesum_py", from_py_object)]
#[derive(Clone)]
struct Tree {
    inner: FiniteTree,
}

#[pymethods]
impl Tree {
    /// Build from a parent table: `parents[v]` is the parent of `v`, or
    /// `None` when `v` is a root.
    #[new]
    fn new(parents: Vec<Option<NodeId>>) -> PyResult<Self> {
        FiniteTree::build(&parents)
            .map(|inner| Tree { inner })
            .map_err(perr)
    }

    /// The full binary tree of the given depth (levels of 2, 4, 8, ... nodes).
    #[staticmethod]
    fn full_binary(depth: u32) -> PyResult<Self> {
        if !(1..=26).contains(&depth) {
            return Err(perr(format!("depth must be in 1..=26, got {depth}")));
        }
        Ok(Tree {
            inner: FiniteTree::full_binary(depth),
        })
    }

    /// A seeded random recursive tree on `nodes` nodes.
    #[staticmethod]
    fn random(nodes: usize, seed: u64) -> PyResult<Self> {
        if nodes == 0 {
            return Err(perr("a tree needs at least one node"));
        }
        Ok(Tree {
            inner: FiniteTree::random(nodes, seed),
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn roots(&self) -> Vec<NodeId> {
        self.inner.roots().to_vec()
    }

    fn parent(&self, v: NodeId) -> PyResult<Option<NodeId>> {
        self.check_node(v)?;
        Ok(self.inner.parent(v))
    }

    fn children(&self, v: NodeId) -> PyResult<Vec<NodeId>> {
        self.check_node(v)?;
        Ok(self.inner.children(v).to_vec())
    }

    /// Depth of `v` (roots have depth 1).
    fn depth(&self, v: NodeId) -> PyResult<u32> {
        self.check_node(v)?;
        Ok(self.inner.depth(v))
    }

    /// The parent table, round-trippable through the constructor.
    fn parents(&self) -> Vec<Option<NodeId>> {
        self.inner.parents_vec()
    }

    fn __repr__(&self) -> String {
        format!(
            "Tree(nodes={}, roots={})",
            self.inner.len(),
            self.inner.roots().len()
        )
    }
}

impl Tree {
    fn check_node(&self, v: NodeId) -> PyResult<()> {
        if (v as usize) < self.inner.len() {
            Ok(())
        } else {
            Err(perr(format!(
                "node {v} out of range: the tree has {} nodes",
                self.inner.len()
            )))
        }
    }
}

/// A finitely supported rational vector indexed by tree nodes.
#[pyclass(module = "bairesum_py", from_py_object)]
#[derive(Clone)]
struct Vector {
    inner: TreeVector,
}

#[pymethods]
impl Vector {
    /// Build from `(node, num, den)` triples; zero coefficients are dropped.
    #[new]
    fn new(entries: Vec<(NodeId, i64, i64)>) -> PyResult<Self> {
        if let Some((v, n, _)) = entries.iter().find(|&&(_, _, d)| d == 0) {
            return Err(perr(format!(
                "zero denominator in coefficient {n}/0 at node {v}"
            )));
        }
        TreeVector::from_pairs(&entries)
            .map(|inner| Vector { inner })
            .map_err(perr)
    }

    /// Build from `(node, "num/den")` pairs for coefficients beyond i64.
    #[staticmethod]
    fn from_ratios(entries: Vec<(NodeId, String)>) -> PyResult<Self> {
        let pairs = entries
            .into_iter()
            .map(|(v, s)| Ok((v, parse_ratio(&s)?)))
            .collect::<PyResult<Vec<_>>>()?;
        TreeVector::new(pairs)
            .map(|inner| Vector { inner })
            .map_err(perr)
    }

    /// Sorted `(node, "num/den")` pairs of the nonzero coefficients.
    fn entries(&self) -> Vec<(NodeId, String)> {
        self.inner
            .iter()
            .map(|(v, c)| (v, format_ratio(c)))
            .collect()
    }

    fn support_len(&self) -> usize {
        self.inner.support_len()
    }

    fn __len__(&self) -> usize {
        self.inner.support_len()
    }

    /// Scale every coefficient by the exact rational `factor` ("num/den").
    fn scale(&self, factor: &str) -> PyResult<Self> {
        Ok(Vector {
            inner: self.inner.scale(&parse_ratio(factor)?),
        })
    }

    fn add(&self, other: &Vector) -> Self {
        Vector {
            inner: self.inner.add(&other.inner),
        }
    }

    fn __repr__(&self) -> String {
        format!("Vector(support={})", self.inner.support_len())
    }
}

fn check_vector(tree: &Tree, vector: &Vector) -> PyResult<()> {
    if let Some((v, _)) = vector
        .inner
        .iter()
        .find(|(v, _)| *v as usize >= tree.inner.len())
    {
        return Err(perr(format!(
            "node {v} out of range: the tree has {} nodes",
            tree.inner.len()
        )));
    }
    Ok(())
}

/// Family norm (sup over families of pairwise incomparable segments).
/// Returns a dict with `value_sq` (exact "num/den", or None when the branch
/// model rounds), `value_approx`, `exact`, and the attaining `witness` as a
/// list of segment node lists.
#[pyfunction]
#[pyo3(signature = (tree, vector, basis = "l2"))]
fn norm<'py>(
    py: Python<'py>,
    tree: &Tree,
    vector: &Vector,
    basis: &str,
) -> PyResult<Bound<'py, PyDict>> {
    check_vector(tree, vector)?;
    let oracle = oracle(basis)?;
    let r = t2_norm(&tree.inner, &vector.inner, oracle.as_ref()).map_err(perr)?;
    let d = PyDict::new(py);
    put_value_sq(&d, "value", &r.value)?;
    d.set_item("exact", r.value.exact)?;
    d.set_item("witness", r.family.node_lists())?;
    Ok(d)
}

/// Segment norm (sup over single segments). The witness is the attaining
/// segment's node list, or None for the zero vector.
#[pyfunction]
#[pyo3(signature = (tree, vector, basis = "l2"))]
fn t0norm<'py>(
    py: Python<'py>,
    tree: &Tree,
    vector: &Vector,
    basis: &str,
) -> PyResult<Bound<'py, PyDict>> {
    check_vector(tree, vector)?;
    let oracle = oracle(basis)?;
    let r = t0_norm(&tree.inner, &vector.inner, oracle.as_ref()).map_err(perr)?;
    let d = PyDict::new(py);
    put_value_sq(&d, "value", &r.value)?;
    d.set_item("exact", r.value.exact)?;
    d.set_item(
        "witness",
        r.segment.map(|s| s.nodes().to_vec()),
    )?;
    Ok(d)
}

/// Restrict a vector to the breadth-first enumeration positions `lo..=hi`.
#[pyfunction]
fn project_interval(tree: &Tree, vector: &Vector, lo: u32, hi: u32) -> PyResult<Vector> {
    check_vector(tree, vector)?;
    if lo > hi || hi as usize >= tree.inner.len() {
        return Err(perr(format!(
            "interval {lo}:{hi} is not a valid position range on {} nodes",
            tree.inner.len()
        )));
    }
    let enumeration = bfs_enumeration(&tree.inner);
    Ok(Vector {
        inner: project_interval_core(&vector.inner, &enumeration, RangeInterval::new(lo, hi)),
    })
}

/// Search for a normalized vector whose family norm is exactly 1 while its
/// segment norm is exactly `epsilon` ("num/den").
#[pyfunction]
#[pyo3(signature = (tree, epsilon, basis = "l2", budget = 1_000_000))]
fn singular_witness(tree: &Tree, epsilon: &str, basis: &str, budget: u64) -> PyResult<Vector> {
    let eps = parse_ratio(epsilon)?;
    let oracle = oracle(basis)?;
    witness_search(&tree.inner, oracle.as_ref(), &eps, budget)
        .map(|inner| Vector { inner })
        .map_err(perr)
}

/// Forge a successive-block sequence whose segment norms decay fast enough
/// for the subset bound, as a list of vectors in block order.
#[pyfunction]
#[pyo3(signature = (tree, length, seed = 0))]
fn forge(tree: &Tree, length: usize, seed: u64) -> PyResult<Vec<Vector>> {
    let seq = forge_decaying_sequence(&tree.inner, length, seed).map_err(perr)?;
    Ok(seq
        .vectors()
        .iter()
        .cloned()
        .map(|inner| Vector { inner })
        .collect())
}

fn block_sequence(
    tree: &Tree,
    vectors: Vec<Vector>,
    oracle: &dyn BranchNormOracle,
) -> PyResult<BlockSequence> {
    for v in &vectors {
        check_vector(tree, v)?;
    }
    let enumeration = bfs_enumeration(&tree.inner);
    check_block(
        &tree.inner,
        oracle,
        vectors.into_iter().map(|v| v.inner).collect(),
        enumeration,
    )
    .map_err(perr)
}

/// Validate a normalized successive-block sequence and check the decay
/// condition at every index. Raises ValueError when the sequence is not
/// normalized successive blocks; otherwise returns the certificate dict
/// (`holds` may still be False).
#[pyfunction]
#[pyo3(signature = (tree, vectors, basis = "l2"))]
fn certify<'py>(
    py: Python<'py>,
    tree: &Tree,
    vectors: Vec<Vector>,
    basis: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let oracle = oracle(basis)?;
    let seq = block_sequence(tree, vectors, oracle.as_ref())?;
    let cert = check_decay(&tree.inner, oracle.as_ref(), &seq).map_err(perr)?;
    let d = PyDict::new(py);
    d.set_item("oracle", &cert.oracle)?;
    d.set_item("holds", cert.holds)?;
    let records: Vec<Bound<'py, PyDict>> = cert
        .records
        .iter()
        .map(|r| {
            let rec = PyDict::new(py);
            rec.set_item("n", r.n)?;
            put_value_sq(&rec, "t0", &r.t0)?;
            rec.set_item("bound_sq", format_ratio(&r.bound_sq))?;
            rec.set_item("bound_exact", r.bound_exact)?;
            rec.set_item("mode", r.mode.as_str())?;
            rec.set_item("holds", r.holds)?;
            Ok(rec)
        })
        .collect::<PyResult<_>>()?;
    d.set_item("records", records)?;
    Ok(d)
}

/// Sample signed/zero coefficient patterns and subsets, checking the subset
/// sum never exceeds sqrt(3) times the full sum in the family norm.
#[pyfunction]
#[pyo3(signature = (tree, vectors, trials = 1000, seed = 0, basis = "l2"))]
fn uncond_sample<'py>(
    py: Python<'py>,
    tree: &Tree,
    vectors: Vec<Vector>,
    trials: u64,
    seed: u64,
    basis: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let oracle = oracle(basis)?;
    let seq = block_sequence(tree, vectors, oracle.as_ref())?;
    let rep = unconditionality_sample(&tree.inner, oracle.as_ref(), &seq, trials, seed)
        .map_err(perr)?;
    let d = PyDict::new(py);
    d.set_item("oracle", &rep.oracle)?;
    d.set_item("trials", rep.trials)?;
    d.set_item("seed", rep.seed)?;
    put_value_sq(&d, "max_ratio", &rep.max_ratio)?;
    d.set_item(
        "attaining_coeffs",
        rep.attaining_coeffs.iter().map(format_ratio).collect::<Vec<_>>(),
    )?;
    d.set_item("attaining_subset", &rep.attaining_subset)?;
    d.set_item("threshold_sq", format_ratio(&rep.threshold_sq))?;
    d.set_item("violations", rep.violations)?;
    d.set_item("exact", rep.exact)?;
    Ok(d)
}

/// Sample coefficient patterns for the upper-l2 ratio and evaluate the
/// l1-incompatibility probe ||sum w_n|| / sum ||w_n||.
#[pyfunction]
#[pyo3(signature = (tree, vectors, trials = 1000, seed = 0, basis = "l2"))]
fn upper_l2_sample<'py>(
    py: Python<'py>,
    tree: &Tree,
    vectors: Vec<Vector>,
    trials: u64,
    seed: u64,
    basis: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let oracle = oracle(basis)?;
    let seq = block_sequence(tree, vectors, oracle.as_ref())?;
    let rep = upper_l2_search(&tree.inner, oracle.as_ref(), &seq, trials, seed).map_err(perr)?;
    let d = PyDict::new(py);
    d.set_item("oracle", &rep.oracle)?;
    d.set_item("trials", rep.trials)?;
    d.set_item("seed", rep.seed)?;
    put_value_sq(&d, "max_ratio", &rep.max_ratio)?;
    d.set_item(
        "attaining_coeffs",
        rep.attaining_coeffs.iter().map(format_ratio).collect::<Vec<_>>(),
    )?;
    put_value_sq(&d, "l1_probe", &rep.l1_probe)?;
    d.set_item("l1_probe_below_one", rep.l1_probe_below_one)?;
    d.set_item("exact", rep.exact)?;
    Ok(d)
}

#[pymodule]
fn bairesum_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Tree>()?;
    m.add_class::<Vector>()?;
    m.add_function(wrap_pyfunction!(norm, m)?)?;
    m.add_function(wrap_pyfunction!(t0norm, m)?)?;
    m.add_function(wrap_pyfunction!(project_interval, m)?)?;
    m.add_function(wrap_pyfunction!(singular_witness, m)?)?;
    m.add_function(wrap_pyfunction!(forge, m)?)?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(uncond_sample, m)?)?;
    m.add_function(wrap_pyfunction!(upper_l2_sample, m)?)?;
    Ok(())
}
