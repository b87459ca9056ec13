//! Finite rooted forests with dense integer node ids.
//!
//! Nodes are identified by their index in the parent array. A node with no
//! parent is minimal and has depth 1; there is no materialized root above the
//! minimal nodes. Children keep input order, which is also ascending id order
//! since the parent array is indexed by id.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub type NodeId = u32;

const NO_PARENT: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("node {node}: parent {parent} is not a valid node id")]
    DanglingParent { node: NodeId, parent: NodeId },
    #[error("parent pointers cycle through node {node}")]
    CycleDetected { node: NodeId },
    #[error("node id {node} is out of range")]
    NodeOutOfRange { node: NodeId },
    #[error("nodes {a} and {b} are incomparable, not a chain")]
    NotAChain { a: NodeId, b: NodeId },
    #[error("node list is not a contiguous ancestor-to-descendant chain at {node}")]
    NotASegment { node: NodeId },
    #[error("empty node list cannot form a segment")]
    EmptySegment,
    #[error("segments with minimal nodes {a} and {b} are comparable")]
    ComparableSegments { a: NodeId, b: NodeId },
}

/// A finite forest stored as flat arrays: parent per node, depth per node,
/// and children in compressed sparse rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteTree {
    parent: Vec<u32>,
    depth: Vec<u32>,
    child_start: Vec<u32>,
    child_list: Vec<NodeId>,
    roots: Vec<NodeId>,
}

impl FiniteTree {
    /// Builds a forest from a parent array; entry `i` names the parent of
    /// node `i`, or `None` for a minimal node.
    pub fn build(parents: &[Option<NodeId>]) -> Result<FiniteTree, TreeError> {
        let n = parents.len();
        assert!(n < NO_PARENT as usize, "node count exceeds id range");
        let mut parent = vec![NO_PARENT; n];
        for (i, p) in parents.iter().enumerate() {
            if let Some(p) = *p {
                if p as usize >= n {
                    return Err(TreeError::DanglingParent {
                        node: i as NodeId,
                        parent: p,
                    });
                }
                parent[i] = p;
            }
        }

        // Depths via memoized parent walks; a walk that revisits an
        // in-progress node has found a cycle.
        let mut depth = vec![0u32; n];
        let mut stack: Vec<u32> = Vec::new();
        for start in 0..n {
            if depth[start] != 0 {
                continue;
            }
            stack.clear();
            let mut v = start as u32;
            loop {
                stack.push(v);
                let p = parent[v as usize];
                if p == NO_PARENT {
                    break;
                }
                if depth[p as usize] != 0 {
                    break;
                }
                if stack.contains(&p) {
                    return Err(TreeError::CycleDetected { node: p });
                }
                v = p;
            }
            let p = parent[v as usize];
            let mut d = if p == NO_PARENT {
                1
            } else {
                depth[p as usize] + 1
            };
            while let Some(u) = stack.pop() {
                depth[u as usize] = d;
                d += 1;
            }
        }

        // Children in ascending child id order (input order).
        let mut counts = vec![0u32; n + 1];
        for &p in &parent {
            if p != NO_PARENT {
                counts[p as usize + 1] += 1;
            }
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let child_start = counts;
        let mut child_list = vec![0u32; child_start[n] as usize];
        let mut cursor = child_start.clone();
        let mut roots = Vec::new();
        for i in 0..n {
            let p = parent[i];
            if p == NO_PARENT {
                roots.push(i as NodeId);
            } else {
                child_list[cursor[p as usize] as usize] = i as NodeId;
                cursor[p as usize] += 1;
            }
        }

        Ok(FiniteTree {
            parent,
            depth,
            child_start,
            child_list,
            roots,
        })
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        (v as usize) < self.len()
    }

    pub fn check_node(&self, v: NodeId) -> Result<(), TreeError> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(TreeError::NodeOutOfRange { node: v })
        }
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        let p = self.parent[v as usize];
        (p != NO_PARENT).then_some(p)
    }

    /// Depth of `v`; minimal nodes have depth 1.
    pub fn depth(&self, v: NodeId) -> u32 {
        self.depth[v as usize]
    }

    pub fn children(&self, v: NodeId) -> &[NodeId] {
        let v = v as usize;
        &self.child_list[self.child_start[v] as usize..self.child_start[v + 1] as usize]
    }

    pub fn is_leaf(&self, v: NodeId) -> bool {
        self.children(v).is_empty()
    }

    /// Minimal nodes (depth 1) in ascending id order.
    pub fn roots(&self) -> &[NodeId] {
        &self.roots
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        0..self.len() as NodeId
    }

    pub fn parents_vec(&self) -> Vec<Option<NodeId>> {
        (0..self.len() as u32).map(|v| self.parent(v)).collect()
    }

    /// Whether `u` is an ancestor of `v` or equal to it.
    pub fn is_ancestor_or_equal(&self, u: NodeId, v: NodeId) -> bool {
        let du = self.depth(u);
        let mut w = v;
        let mut dw = self.depth(v);
        while dw > du {
            w = self.parent[w as usize];
            dw -= 1;
        }
        w == u
    }

    /// Whether `u` and `v` lie on a common branch.
    pub fn comparable(&self, u: NodeId, v: NodeId) -> bool {
        if self.depth(u) <= self.depth(v) {
            self.is_ancestor_or_equal(u, v)
        } else {
            self.is_ancestor_or_equal(v, u)
        }
    }

    /// Ancestor-or-self path from the minimal node down to `v`.
    pub fn path_from_root(&self, v: NodeId) -> Vec<NodeId> {
        let mut path = Vec::with_capacity(self.depth(v) as usize);
        let mut w = v;
        loop {
            path.push(w);
            match self.parent(w) {
                Some(p) => w = p,
                None => break,
            }
        }
        path.reverse();
        path
    }

    /// Full binary forest of the given depth: two minimal nodes, every node
    /// of depth < `depth` has two children. 2^(depth+1) - 2 nodes total,
    /// ids assigned in breadth-first order.
    pub fn full_binary(depth: u32) -> FiniteTree {
        if depth == 0 {
            return FiniteTree::build(&[]).unwrap();
        }
        let n = (1u64 << (depth + 1)) - 2;
        assert!(n < NO_PARENT as u64, "full binary tree too large");
        let mut parents = vec![NO_PARENT; n as usize];
        // Level d (1-based) occupies ids [2^d - 2, 2^(d+1) - 2).
        for d in 2..=depth as u64 {
            let level_start = (1u64 << d) - 2;
            let prev_start = (1u64 << (d - 1)) - 2;
            let width = 1u64 << d;
            for i in 0..width {
                parents[(level_start + i) as usize] = (prev_start + i / 2) as u32;
            }
        }
        let opts: Vec<Option<NodeId>> = parents
            .iter()
            .map(|&p| (p != NO_PARENT).then_some(p))
            .collect();
        FiniteTree::build(&opts).unwrap()
    }

    /// Seeded random forest: node 0 is minimal; node i draws uniformly from
    /// {0..i-1} U {minimal}.
    pub fn random(n: usize, seed: u64) -> FiniteTree {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut parents: Vec<Option<NodeId>> = Vec::with_capacity(n);
        for i in 0..n {
            let r = rng.random_range(0..=i);
            parents.push((r != i).then_some(r as NodeId));
        }
        FiniteTree::build(&parents).unwrap()
    }
}

/// Order-compatible bijection between nodes and positions 0..n-1: strict
/// ancestors always receive smaller positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeEnumeration {
    pos: Vec<u32>,
    node: Vec<NodeId>,
}

impl NodeEnumeration {
    pub fn len(&self) -> usize {
        self.node.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node.is_empty()
    }

    pub fn position(&self, v: NodeId) -> u32 {
        self.pos[v as usize]
    }

    pub fn node_at(&self, position: u32) -> NodeId {
        self.node[position as usize]
    }
}

/// Breadth-first enumeration over the forest: level by level, ties within a
/// level broken by node id. Positions increase strictly along every branch,
/// making the enumeration order-compatible.
pub fn bfs_enumeration(tree: &FiniteTree) -> NodeEnumeration {
    let n = tree.len();
    let max_depth = tree.node_ids().map(|v| tree.depth(v)).max().unwrap_or(0) as usize;
    let mut level_start = vec![0u32; max_depth + 1];
    for v in tree.node_ids() {
        level_start[tree.depth(v) as usize] += 1;
    }
    let mut acc = 0u32;
    for s in level_start.iter_mut() {
        let count = *s;
        *s = acc;
        acc += count;
    }
    let mut node = vec![0 as NodeId; n];
    let mut pos = vec![0u32; n];
    for v in tree.node_ids() {
        let slot = &mut level_start[tree.depth(v) as usize];
        node[*slot as usize] = v;
        pos[v as usize] = *slot;
        *slot += 1;
    }
    NodeEnumeration { pos, node }
}
