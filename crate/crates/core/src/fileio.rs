//! JSON interchange: tree files, vector files, sequence files, and report
//! fragments.
//!
//! All rationals cross the boundary exactly. Inputs accept integers (or
//! decimal-free strings for values beyond machine range); decimal literals
//! are rejected, never rounded. Every parse error names the offending file
//! and field. Serialization is deterministic: objects use sorted keys and
//! numbers within machine range stay numeric.

use std::fs;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::numeric::{decimal_sqrt_string, format_ratio, ValueSq};
use crate::tree::{FiniteTree, NodeId, TreeError};
use crate::vector::{TreeVector, VectorError};

/// Decimal digits carried by approximate value strings in reports.
pub const APPROX_DIGITS: u32 = 12;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid JSON: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: field `{field}`: {details}")]
    Field {
        path: String,
        field: String,
        details: String,
    },
    #[error("{path}: {source}")]
    Tree {
        path: String,
        #[source]
        source: TreeError,
    },
    #[error("{path}: {source}")]
    Vector {
        path: String,
        #[source]
        source: VectorError,
    },
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn field_err(path: &Path, field: impl Into<String>, details: impl Into<String>) -> InputError {
    InputError::Field {
        path: display(path),
        field: field.into(),
        details: details.into(),
    }
}

fn read_json(path: &Path) -> Result<Value, InputError> {
    let text = fs::read_to_string(path).map_err(|source| InputError::Io {
        path: display(path),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| InputError::Json {
        path: display(path),
        source,
    })
}

/// Renders a JSON value in the canonical on-disk form: pretty-printed with
/// sorted object keys (the default map is ordered) and a trailing newline.
pub fn to_canonical_string(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

/// Writes a JSON value in the canonical form.
pub fn write_json(path: &Path, value: &Value) -> Result<(), InputError> {
    fs::write(path, to_canonical_string(value)).map_err(|source| InputError::Io {
        path: display(path),
        source,
    })
}

// ---------------------------------------------------------------------------
// Integers and rationals
// ---------------------------------------------------------------------------

/// Accepts a JSON integer or a decimal-free integer string; rejects
/// fractional literals outright.
fn bigint_field(path: &Path, field: &str, value: &Value) -> Result<BigInt, InputError> {
    match value {
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(BigInt::from(i))
            } else if let Some(u) = n.as_u64() {
                Ok(BigInt::from(u))
            } else {
                Err(field_err(
                    path,
                    field,
                    format!("decimal literals are rejected, not rounded (got {n})"),
                ))
            }
        }
        Value::String(s) => s
            .trim()
            .parse::<BigInt>()
            .map_err(|_| field_err(path, field, format!("not an integer: {s:?}"))),
        other => Err(field_err(
            path,
            field,
            format!("expected an integer or integer string, got {other}"),
        )),
    }
}

fn u32_field(path: &Path, field: &str, value: &Value) -> Result<u32, InputError> {
    let big = bigint_field(path, field, value)?;
    big.to_u32()
        .ok_or_else(|| field_err(path, field, format!("out of range for a node id: {big}")))
}

/// Emits a BigInt as a JSON number when it fits, else as a string.
fn bigint_json(n: &BigInt) -> Value {
    match n.to_i64() {
        Some(i) => json!(i),
        None => json!(n.to_string()),
    }
}

/// "num/den" with the denominator always present.
pub fn ratio_json(r: &BigRational) -> Value {
    json!(format_ratio(r))
}

// ---------------------------------------------------------------------------
// Trees
// ---------------------------------------------------------------------------

/// Tree file shape: {"nodes": [{"id": 0, "parent": null}, …]} with ids
/// forming exactly 0..n-1.
pub fn read_tree(path: &Path) -> Result<FiniteTree, InputError> {
    let root = read_json(path)?;
    let nodes = root
        .get("nodes")
        .and_then(Value::as_array)
        .ok_or_else(|| field_err(path, "nodes", "expected an array of node records"))?;
    let n = nodes.len();
    let mut parents: Vec<Option<NodeId>> = vec![None; n];
    let mut seen = vec![false; n];
    for (i, node) in nodes.iter().enumerate() {
        let obj = node
            .as_object()
            .ok_or_else(|| field_err(path, format!("nodes[{i}]"), "expected an object"))?;
        let id_value = obj
            .get("id")
            .ok_or_else(|| field_err(path, format!("nodes[{i}].id"), "missing"))?;
        let id = u32_field(path, &format!("nodes[{i}].id"), id_value)?;
        if (id as usize) >= n {
            return Err(field_err(
                path,
                format!("nodes[{i}].id"),
                format!("id {id} out of range: ids must form 0..{n}"),
            ));
        }
        if seen[id as usize] {
            return Err(field_err(
                path,
                format!("nodes[{i}].id"),
                format!("duplicate id {id}"),
            ));
        }
        seen[id as usize] = true;
        let parent = match obj.get("parent") {
            None | Some(Value::Null) => None,
            Some(v) => Some(u32_field(path, &format!("nodes[{i}].parent"), v)?),
        };
        parents[id as usize] = parent;
    }
    FiniteTree::build(&parents).map_err(|source| InputError::Tree {
        path: display(path),
        source,
    })
}

pub fn tree_to_json(tree: &FiniteTree) -> Value {
    let nodes: Vec<Value> = tree
        .node_ids()
        .map(|v| {
            json!({
                "id": v,
                "parent": tree.parent(v),
            })
        })
        .collect();
    json!({ "nodes": nodes })
}

pub fn write_tree(path: &Path, tree: &FiniteTree) -> Result<(), InputError> {
    write_json(path, &tree_to_json(tree))
}

// ---------------------------------------------------------------------------
// Vectors
// ---------------------------------------------------------------------------

/// Vector file shape: {"entries": [{"node": 3, "num": 1, "den": 2}, …]}.
/// `den` defaults to 1; both parts accept integer strings for values beyond
/// machine range. Entries are validated against the tree.
pub fn read_vector(path: &Path, tree: &FiniteTree) -> Result<TreeVector, InputError> {
    let root = read_json(path)?;
    let entries = root
        .get("entries")
        .and_then(Value::as_array)
        .ok_or_else(|| field_err(path, "entries", "expected an array of entry records"))?;
    let mut pairs = Vec::with_capacity(entries.len());
    for (i, entry) in entries.iter().enumerate() {
        let obj = entry
            .as_object()
            .ok_or_else(|| field_err(path, format!("entries[{i}]"), "expected an object"))?;
        let node_value = obj
            .get("node")
            .ok_or_else(|| field_err(path, format!("entries[{i}].node"), "missing"))?;
        let node = u32_field(path, &format!("entries[{i}].node"), node_value)?;
        if !tree.contains(node) {
            return Err(field_err(
                path,
                format!("entries[{i}].node"),
                format!("node {node} out of range: the tree has {} nodes", tree.len()),
            ));
        }
        let num_value = obj
            .get("num")
            .ok_or_else(|| field_err(path, format!("entries[{i}].num"), "missing"))?;
        let num = bigint_field(path, &format!("entries[{i}].num"), num_value)?;
        let den = match obj.get("den") {
            None => BigInt::from(1),
            Some(v) => bigint_field(path, &format!("entries[{i}].den"), v)?,
        };
        if den.is_zero() {
            return Err(field_err(
                path,
                format!("entries[{i}].den"),
                "zero denominator",
            ));
        }
        pairs.push((node, BigRational::new(num, den)));
    }
    TreeVector::new(pairs).map_err(|source| InputError::Vector {
        path: display(path),
        source,
    })
}

pub fn vector_to_json(vector: &TreeVector) -> Value {
    let entries: Vec<Value> = vector
        .iter()
        .map(|(v, c)| {
            let mut obj = Map::new();
            obj.insert("node".to_owned(), json!(v));
            obj.insert("num".to_owned(), bigint_json(c.numer()));
            obj.insert("den".to_owned(), bigint_json(c.denom()));
            Value::Object(obj)
        })
        .collect();
    json!({ "entries": entries })
}

pub fn write_vector(path: &Path, vector: &TreeVector) -> Result<(), InputError> {
    write_json(path, &vector_to_json(vector))
}

// ---------------------------------------------------------------------------
// Sequences
// ---------------------------------------------------------------------------

/// Sequence file shape: a JSON array of vector file paths, resolved
/// relative to the sequence file's directory.
pub fn read_sequence(path: &Path, tree: &FiniteTree) -> Result<Vec<TreeVector>, InputError> {
    let root = read_json(path)?;
    let items = root
        .as_array()
        .ok_or_else(|| field_err(path, "(root)", "expected an array of vector file paths"))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut vectors = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let rel = item
            .as_str()
            .ok_or_else(|| field_err(path, format!("[{i}]"), "expected a path string"))?;
        let mut vector_path = PathBuf::from(rel);
        if vector_path.is_relative() {
            vector_path = base.join(vector_path);
        }
        vectors.push(read_vector(&vector_path, tree)?);
    }
    Ok(vectors)
}

// ---------------------------------------------------------------------------
// Norm results
// ---------------------------------------------------------------------------

/// Report fragment for one norm value:
/// {"value_sq": "num/den" | null, "value_approx": "…", "exact": bool}
/// plus "witness": [[node ids], …] when segments are supplied. The squared
/// value is reported exactly when the computation was exact; the
/// approximate string is the truncated decimal square root either way.
pub fn norm_result_json(value: &ValueSq, witness: Option<&[Vec<NodeId>]>) -> Value {
    debug_assert!(!value.sq.is_negative());
    let mut obj = Map::new();
    obj.insert(
        "value_sq".to_owned(),
        if value.exact {
            ratio_json(&value.sq)
        } else {
            Value::Null
        },
    );
    obj.insert(
        "value_approx".to_owned(),
        json!(decimal_sqrt_string(&value.sq, APPROX_DIGITS)),
    );
    obj.insert("exact".to_owned(), json!(value.exact));
    if let Some(segments) = witness {
        obj.insert("witness".to_owned(), json!(segments));
    }
    Value::Object(obj)
}
