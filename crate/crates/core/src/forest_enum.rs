//! Exhaustive enumeration of small rooted forests, one representative per
//! isomorphism class, for brute-force verification on every shape up to a
//! size bound.
//!
//! Rooted trees are generated as canonical level sequences with the
//! Beyer-Hedetniemi successor rule; a forest on n nodes is a tree on n+1
//! nodes with its root stripped.

use crate::tree::{FiniteTree, NodeId};

/// All canonical level sequences of rooted trees on `n` nodes (root level 1).
fn level_sequences(n: usize) -> Vec<Vec<u32>> {
    assert!(n >= 1);
    let mut seqs = Vec::new();
    let mut l: Vec<u32> = (1..=n as u32).collect();
    loop {
        seqs.push(l.clone());
        // Rightmost entry > 2; the star sequence [1,2,...,2] is last.
        let Some(p) = l.iter().rposition(|&x| x > 2) else {
            break;
        };
        let q = l[..p]
            .iter()
            .rposition(|&x| x == l[p] - 1)
            .expect("level p-1 must occur before p");
        for i in p..n {
            l[i] = l[i - (p - q)];
        }
    }
    seqs
}

/// Forest on n-1 nodes from the level sequence of a tree on n nodes: drop
/// the root, re-root its children as minimal nodes. Node ids follow the
/// sequence (preorder) positions.
fn forest_from_sequence(seq: &[u32]) -> FiniteTree {
    let n = seq.len() - 1;
    let mut parents: Vec<Option<NodeId>> = Vec::with_capacity(n);
    // last_at[d] = latest forest node seen at depth d
    let mut last_at: Vec<NodeId> = Vec::new();
    for &level in &seq[1..] {
        let depth = (level - 1) as usize; // forest depth, 1-based
        let parent = if depth == 1 {
            None
        } else {
            Some(last_at[depth - 2])
        };
        let id = parents.len() as NodeId;
        parents.push(parent);
        last_at.truncate(depth - 1);
        last_at.push(id);
    }
    FiniteTree::build(&parents).expect("canonical sequences are valid forests")
}

/// Every rooted forest with between 1 and `max_nodes` nodes, up to
/// isomorphism.
pub fn all_forests(max_nodes: usize) -> Vec<FiniteTree> {
    let mut out = Vec::new();
    for n in 1..=max_nodes {
        for seq in level_sequences(n + 1) {
            out.push(forest_from_sequence(&seq));
        }
    }
    out
}
